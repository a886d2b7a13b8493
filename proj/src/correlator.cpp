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

#include "qits/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "qits/errors.hpp"

namespace qits {

namespace {

// Counts pairs whose lag falls in [lag_lo, lag_hi), filling bins of `width`
// ticks starting at lag_lo. Both cursors into b only ever move forward, so
// the pass is O(|a| + |b| + pairs inside the window).
void count_lag_window(const std::vector<uint64_t>& a,
                      const std::vector<uint64_t>& b,
                      int64_t lag_lo,
                      int64_t lag_hi,
                      int64_t width,
                      uint64_t* bins) {
    size_t lo = 0;
    size_t hi = 0;
    size_t nb = b.size();
    for (uint64_t sa : a) {
        int64_t s = int64_t(sa);
        // lag_lo <= s - r < lag_hi  <=>  s - lag_hi < r <= s - lag_lo
        int64_t r_min = s - lag_hi + 1;
        int64_t r_max = s - lag_lo;
        while (lo < nb && int64_t(b[lo]) < r_min) {
            lo++;
        }
        if (hi < lo) {
            hi = lo;
        }
        while (hi < nb && int64_t(b[hi]) <= r_max) {
            hi++;
        }
        for (size_t j = lo; j < hi; j++) {
            uint64_t k = uint64_t(s - int64_t(b[j]) - lag_lo) / uint64_t(width);
            bins[k]++;
        }
    }
}

size_t peak_bin(const Correlogram& corr) {
    const auto& counts = corr.counts;
    size_t best = 0;
    for (size_t k = 1; k < counts.size(); k++) {
        if (counts[k] > counts[best]) {
            best = k;
            continue;
        }
        if (counts[k] == counts[best]) {
            // Tie: prefer the bin center closest to zero lag, then the
            // earlier bin. Centers are compared as twice their value to stay
            // in integer arithmetic.
            int64_t c_new = 2 * corr.bin_lag_low(k) + corr.config.bin_width;
            int64_t c_best = 2 * corr.bin_lag_low(best) + corr.config.bin_width;
            if (std::abs(c_new) < std::abs(c_best)) {
                best = k;
            }
        }
    }
    return best;
}

}  // namespace

void CorrelogramConfig::validate() const {
    if (bin_width < 1) {
        throw ConfigError("correlator.bin_width_ticks", "must be >= 1");
    }
    if (lag_min >= lag_max) {
        throw ConfigError("correlator.lag_min_ticks", "lag_min must be < lag_max");
    }
    if ((lag_max - lag_min) % bin_width != 0) {
        throw ConfigError("correlator.bin_width_ticks", "lag range must be a whole number of bins");
    }
}

uint64_t Correlogram::window_counts(size_t center_bin, size_t half_width_bins) const {
    size_t first = center_bin > half_width_bins ? center_bin - half_width_bins : 0;
    size_t last = std::min(counts.size() - 1, center_bin + half_width_bins);
    uint64_t total = 0;
    for (size_t k = first; k <= last; k++) {
        total += counts[k];
    }
    return total;
}

Correlogram correlogram(const TimestampStream& a,
                        const TimestampStream& b,
                        const CorrelogramConfig& config,
                        unsigned workers) {
    config.validate();
    if (a.tick_ps != b.tick_ps) {
        throw DataError("correlogram: streams have mismatched tick units");
    }
    if (a.duration_ticks != b.duration_ticks) {
        throw DataError("correlogram: streams have mismatched durations");
    }
    if (!a.is_sorted() || !b.is_sorted()) {
        throw DataError("correlogram: streams must be sorted");
    }

    Correlogram corr;
    corr.config = config;
    corr.tick_ps = a.tick_ps;
    corr.duration_ticks = a.duration_ticks;
    corr.singles_a = a.ticks.size();
    corr.singles_b = b.ticks.size();
    corr.counts.assign(config.bin_count(), 0);

    size_t bins = corr.counts.size();
    workers = std::max(1u, std::min<unsigned>(workers, unsigned(bins)));
    if (workers == 1) {
        count_lag_window(a.ticks, b.ticks, config.lag_min, config.lag_max, config.bin_width, corr.counts.data());
        return corr;
    }

    // Partition the lag range; every worker makes its own pass with private
    // cursors, so the per-bin totals match the sequential result exactly.
    std::vector<std::thread> pool;
    size_t chunk = (bins + workers - 1) / workers;
    for (unsigned w = 0; w < workers; w++) {
        size_t k0 = w * chunk;
        size_t k1 = std::min(bins, k0 + chunk);
        if (k0 >= k1) {
            break;
        }
        int64_t lo = config.lag_min + int64_t(k0) * config.bin_width;
        int64_t hi = config.lag_min + int64_t(k1) * config.bin_width;
        pool.emplace_back([&, lo, hi, k0] {
            count_lag_window(a.ticks, b.ticks, lo, hi, config.bin_width, corr.counts.data() + k0);
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    return corr;
}

G2Estimate g2(const Correlogram& corr) {
    double duration = corr.duration_seconds();
    if (duration <= 0.0) {
        throw DataError("g2: correlogram has zero duration");
    }
    if (corr.singles_a == 0 || corr.singles_b == 0) {
        throw DataError("g2: undefined with zero singles on a stream");
    }
    double rate_a = double(corr.singles_a) / duration;
    double rate_b = double(corr.singles_b) / duration;
    double expected_per_bin = rate_a * rate_b * corr.bin_width_seconds() * duration;

    G2Estimate est;
    est.g2.resize(corr.counts.size());
    for (size_t k = 0; k < corr.counts.size(); k++) {
        est.g2[k] = double(corr.counts[k]) / expected_per_bin;
    }
    size_t peak = peak_bin(corr);
    est.peak_lag = corr.bin_lag_low(peak);
    est.peak_g2 = est.g2[peak];
    est.accidental_rate = rate_a * rate_b * corr.bin_width_seconds();
    double excess = double(corr.counts[peak]) - expected_per_bin;
    est.significant_peak = excess > 5.0 * std::sqrt(std::max(expected_per_bin, 1.0));
    return est;
}

int64_t scan_delay(const TimestampStream& a, const TimestampStream& b, const CorrelogramConfig& config) {
    Correlogram corr = correlogram(a, b, config);
    uint64_t total = 0;
    for (uint64_t c : corr.counts) {
        total += c;
    }
    if (total == 0) {
        throw DataError("scan_delay: no coincidences in the lag range");
    }
    return corr.bin_lag_low(peak_bin(corr));
}

double accidental_rate(double pair_singles_rate, double noise_singles_rate, double reference_rate, double window_seconds) {
    for (double v : {pair_singles_rate, noise_singles_rate, reference_rate, window_seconds}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::domain_error("accidental_rate: arguments must be finite and >= 0");
        }
    }
    return (pair_singles_rate + noise_singles_rate) * reference_rate * window_seconds;
}

double snr(double g2_peak) {
    if (!std::isfinite(g2_peak) || g2_peak < 0.0) {
        throw std::domain_error("snr: g2 must be finite and >= 0");
    }
    return g2_peak - 1.0;
}

}  // namespace qits
