// Copyright 2026 QITS Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QITS_CORRELATOR_HPP
#define QITS_CORRELATOR_HPP

#include <cstdint>
#include <vector>

#include "qits/detector.hpp"

namespace qits {

/// Lag grid for a cross-correlogram. Bin k covers tick lags
/// [lag_min + k*bin_width, lag_min + (k+1)*bin_width), half-open.
struct CorrelogramConfig {
    int64_t bin_width = 1;  // ticks, >= 1
    int64_t lag_min = -512;
    int64_t lag_max = 512;

    void validate() const;
    size_t bin_count() const { return size_t((lag_max - lag_min) / bin_width); }
};

/// Histogram of signal-minus-reference arrival differences, with the singles
/// counts and duration needed to normalize it.
struct Correlogram {
    std::vector<uint64_t> counts;
    uint64_t singles_a = 0;  // clicks in stream a (signal by convention)
    uint64_t singles_b = 0;  // clicks in stream b (reference)
    uint64_t duration_ticks = 0;
    uint32_t tick_ps = 81;
    CorrelogramConfig config;

    double duration_seconds() const { return double(duration_ticks) * double(tick_ps) * 1e-12; }
    double bin_width_seconds() const { return double(config.bin_width) * double(tick_ps) * 1e-12; }
    int64_t bin_lag_low(size_t k) const { return config.lag_min + int64_t(k) * config.bin_width; }

    /// Total counts in the bins whose index distance from `center_bin` is at
    /// most `half_width_bins`.
    uint64_t window_counts(size_t center_bin, size_t half_width_bins) const;
};

/// Counts every ordered pair (s in a, r in b) whose lag s - r falls on the
/// grid, in one forward pass over both sorted streams. `workers` > 1 splits
/// the lag range across threads; the result is identical to the sequential
/// pass. Throws DataError on mismatched tick units or durations.
Correlogram correlogram(const TimestampStream& a,
                        const TimestampStream& b,
                        const CorrelogramConfig& config,
                        unsigned workers = 1);

/// Normalized second-order cross-correlation derived from a correlogram.
struct G2Estimate {
    std::vector<double> g2;
    int64_t peak_lag = 0;     // lower edge of the peak bin, ticks
    double peak_g2 = 0.0;
    double accidental_rate = 0.0;  // expected accidentals per second per bin
    bool significant_peak = false;

    double snr() const { return peak_g2 - 1.0; }
};

/// g2[k] = C[k] / (N_a_rate * N_b_rate * bin_width * T): observed coincidences
/// over the accidental expectation for statistically independent streams.
/// Peak ties prefer the bin whose center is closest to zero lag. Throws
/// DataError when a singles count or the duration is zero.
G2Estimate g2(const Correlogram& corr);

/// Locates the delay between the two streams: the lag bin with the highest
/// count, ties broken toward the smallest |lag|. Returns the lower edge of
/// the winning bin in ticks. Throws DataError if the correlogram is empty.
int64_t scan_delay(const TimestampStream& a, const TimestampStream& b, const CorrelogramConfig& config);

/// Expected accidental coincidences per second in a window of tau_w seconds:
/// (N + N_b) * N_r * tau_w, where N is the pair-origin singles rate surviving
/// to the signal detector and N_b the noise singles rate there.
double accidental_rate(double pair_singles_rate, double noise_singles_rate, double reference_rate, double window_seconds);

/// Signal-to-noise ratio of a g2 measurement: the accidental floor sits at
/// g2 = 1, so the signal level is g2 - 1.
double snr(double g2_peak);

}  // namespace qits

#endif
