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

#include "qits/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qits/errors.hpp"

namespace qits {

namespace {

constexpr double kJitterMargin = 12.0;  // sigmas; see pairgen.cpp

}  // namespace

void DetectorModel::validate() const {
    if (!std::isfinite(efficiency) || efficiency < 0.0 || efficiency > 1.0) {
        throw ConfigError("detector.efficiency", "must be in [0, 1]");
    }
    if (!std::isfinite(dead_time) || dead_time < 0.0) {
        throw ConfigError("detector.dead_time_ns", "must be >= 0");
    }
    if (!std::isfinite(jitter_sigma) || jitter_sigma < 0.0) {
        throw ConfigError("detector.jitter_ps", "must be >= 0");
    }
    tick_picoseconds();
}

uint32_t DetectorModel::tick_picoseconds() const {
    if (!std::isfinite(tick) || tick <= 0.0) {
        throw ConfigError("detector.tick_ps", "must be > 0");
    }
    double ps = tick * 1e12;
    double rounded = std::round(ps);
    if (std::abs(ps - rounded) > 1e-6 || rounded < 1.0 || rounded > double(std::numeric_limits<uint32_t>::max())) {
        throw ConfigError("detector.tick_ps", "must be a whole number of picoseconds");
    }
    return uint32_t(rounded);
}

bool TimestampStream::is_sorted() const {
    return std::is_sorted(ticks.begin(), ticks.end());
}

double correction_factor(double observed_rate, double dead_time) {
    if (!std::isfinite(observed_rate) || observed_rate < 0.0 || !std::isfinite(dead_time) || dead_time < 0.0) {
        throw std::domain_error("correction_factor: rates and dead time must be finite and >= 0");
    }
    double load = observed_rate * dead_time;
    if (load >= 1.0) {
        throw std::domain_error("correction_factor: AV * t_d must be < 1");
    }
    return 1.0 / (1.0 - load);
}

StreamingDetector::StreamingDetector(const DetectorModel& model, uint8_t channel_id, RngStream rng)
    : model_(model), rng_(rng), channel_id_(channel_id) {
    model_.validate();
}

void StreamingDetector::feed(std::span<const RawEvent> events, double input_watermark) {
    size_t first_new = pending_.size();
    for (const RawEvent& e : events) {
        absorb(e.time);
    }
    settle(first_new, input_watermark);
}

void StreamingDetector::feed_times(std::span<const double> times, double input_watermark) {
    size_t first_new = pending_.size();
    for (double t : times) {
        absorb(t);
    }
    settle(first_new, input_watermark);
}

void StreamingDetector::absorb(double time) {
    if (time < last_input_time_) {
        throw DataError("detect: input events are not sorted by time");
    }
    last_input_time_ = time;
    if (model_.efficiency < 1.0 && !rng_.bernoulli(model_.efficiency)) {
        return;
    }
    if (model_.jitter_sigma > 0.0) {
        time += rng_.normal(0.0, model_.jitter_sigma);
    }
    pending_.push_back(time);
}

void StreamingDetector::settle(size_t first_new, double input_watermark) {
    if (model_.jitter_sigma > 0.0) {
        std::sort(pending_.begin() + first_new, pending_.end());
        std::inplace_merge(pending_.begin(), pending_.begin() + first_new, pending_.end());
    }
    emit_below(input_watermark - kJitterMargin * model_.jitter_sigma);
}

void StreamingDetector::emit_below(double t_limit) {
    size_t i = 0;
    for (; i < pending_.size() && pending_[i] < t_limit; i++) {
        double t = pending_[i];
        if (t < next_live_time_) {
            continue;  // lost in the hold-off window of the previous click
        }
        next_live_time_ = t + model_.dead_time;
        if (t < 0.0) {
            continue;  // jittered before the start of acquisition
        }
        int64_t tick = int64_t(std::floor(t / model_.tick));
        if (tick == last_tick_) {
            continue;  // one click per tagger resolution bin
        }
        last_tick_ = tick;
        ticks_.push_back(uint64_t(tick));
    }
    pending_.erase(pending_.begin(), pending_.begin() + i);
}

TimestampStream StreamingDetector::finish(double duration_seconds) {
    emit_below(std::numeric_limits<double>::infinity());
    TimestampStream stream;
    stream.ticks = std::move(ticks_);
    stream.channel_id = channel_id_;
    stream.tick_ps = model_.tick_picoseconds();
    stream.duration_ticks = uint64_t(std::ceil(duration_seconds / model_.tick));
    return stream;
}

TimestampStream detect(std::span<const RawEvent> events,
                       const DetectorModel& model,
                       RngStream& rng,
                       double duration_seconds,
                       uint8_t channel_id) {
    StreamingDetector detector(model, channel_id, rng);
    detector.feed(events, std::numeric_limits<double>::infinity());
    TimestampStream stream = detector.finish(duration_seconds);
    return stream;
}

std::vector<RateReport> saturation_curve(const DetectorModel& model,
                                         std::span<const double> incident_rates,
                                         double duration,
                                         uint64_t seed) {
    model.validate();
    if (!std::isfinite(duration) || duration <= 0.0) {
        throw ConfigError("duration_s", "must be > 0");
    }
    std::vector<RateReport> reports;
    reports.reserve(incident_rates.size());
    for (size_t i = 0; i < incident_rates.size(); i++) {
        double rate = incident_rates[i];
        if (!std::isfinite(rate) || rate < 0.0) {
            throw std::domain_error("saturation_curve: incident rates must be >= 0");
        }
        RngStream gen(seed, Substream::saturation, i);
        std::vector<RawEvent> events;
        if (rate > 0.0) {
            events.reserve(size_t(rate * duration * 1.1) + 16);
            for (double t = gen.exponential(rate); t < duration; t += gen.exponential(rate)) {
                events.push_back({t, DetectionChannel::signal, PhotonOrigin::noise});
            }
        }
        RngStream det_rng(seed, Substream::detector, (1ull << 40) | i);
        TimestampStream stream = detect(events, model, det_rng, duration);
        RateReport report;
        report.incident_rate = rate;
        report.observed_rate = stream.observed_rate();
        if (report.observed_rate * model.dead_time >= 1.0) {
            report.saturated = true;
            report.correction = std::numeric_limits<double>::infinity();
        } else {
            report.correction = correction_factor(report.observed_rate, model.dead_time);
        }
        reports.push_back(report);
    }
    return reports;
}

}  // namespace qits
