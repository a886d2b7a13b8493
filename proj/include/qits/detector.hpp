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

#ifndef QITS_DETECTOR_HPP
#define QITS_DETECTOR_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "qits/pairgen.hpp"
#include "qits/rng.hpp"

namespace qits {

/// Single-photon detector plus time tagger: efficiency thinning, Gaussian
/// timing jitter, non-paralyzable dead time (actively quenched APD), and
/// quantization to integer ticks.
struct DetectorModel {
    double efficiency = 1.0;
    double dead_time = 18e-9;    // seconds
    double tick = 81e-12;        // seconds, must be a whole number of picoseconds
    double jitter_sigma = 0.0;   // seconds

    void validate() const;
    uint32_t tick_picoseconds() const;
};

/// Sorted detector clicks in integer tick units.
struct TimestampStream {
    std::vector<uint64_t> ticks;  // non-decreasing
    uint8_t channel_id = 0;
    uint64_t duration_ticks = 0;
    uint32_t tick_ps = 81;

    double tick_seconds() const { return double(tick_ps) * 1e-12; }
    double duration_seconds() const { return double(duration_ticks) * tick_seconds(); }
    double observed_rate() const {
        return duration_ticks == 0 ? 0.0 : double(ticks.size()) / duration_seconds();
    }
    bool is_sorted() const;
};

/// One point of a saturation curve.
struct RateReport {
    double incident_rate = 0.0;  // photons/s arriving at the detector
    double observed_rate = 0.0;  // clicks/s actually registered (AV)
    double correction = 1.0;     // d = 1 / (1 - AV * t_d)
    bool saturated = false;      // AV * t_d >= 1, correction undefined
};

/// Detector saturation correction d = 1 / (1 - AV * t_d): the inverse of the
/// effective duty cycle of a non-paralyzable detector observing AV clicks/s.
/// Throws std::domain_error unless 0 <= AV * t_d < 1.
double correction_factor(double observed_rate, double dead_time);

/// Incremental detector simulation. Events are fed in chunks of
/// non-decreasing arrival time; because jitter can locally reorder arrivals,
/// clicks are finalized only once the input watermark has moved far enough
/// past them. feed()ing everything and finish()ing is equivalent to a single
/// whole-stream pass regardless of chunk boundaries.
class StreamingDetector {
  public:
    StreamingDetector(const DetectorModel& model, uint8_t channel_id, RngStream rng);

    /// Feed a sorted chunk. `input_watermark` promises that every event of
    /// every future feed() is at or after that time; pass the chunk end.
    void feed(std::span<const RawEvent> events, double input_watermark);

    /// Same, for bare arrival times.
    void feed_times(std::span<const double> times, double input_watermark);

    /// Finalizes all pending events and returns the stream.
    TimestampStream finish(double duration_seconds);

    uint64_t clicks_so_far() const { return ticks_.size(); }

  private:
    void absorb(double time);
    void settle(size_t first_new, double input_watermark);
    void emit_below(double t_limit);

    DetectorModel model_;
    RngStream rng_;
    uint8_t channel_id_;
    std::vector<double> pending_;  // jittered survivor times, sorted
    double last_input_time_ = -1e300;
    double next_live_time_ = -1e300;  // end of the current dead window
    int64_t last_tick_ = -1;
    std::vector<uint64_t> ticks_;
};

/// Runs the full detector chain over a sorted event stream.
/// `duration_seconds` is the acquisition span recorded on the output stream.
/// Throws DataError if the input is unsorted.
TimestampStream detect(std::span<const RawEvent> events,
                       const DetectorModel& model,
                       RngStream& rng,
                       double duration_seconds,
                       uint8_t channel_id = 0);

/// Measures the observed rate and correction factor for each incident rate by
/// detecting a seeded Poisson stream of that rate over `duration` seconds.
/// Points where AV * t_d >= 1 are reported with saturated = true.
std::vector<RateReport> saturation_curve(const DetectorModel& model,
                                         std::span<const double> incident_rates,
                                         double duration,
                                         uint64_t seed);

}  // namespace qits

#endif
