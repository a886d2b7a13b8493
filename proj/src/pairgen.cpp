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

#include "qits/pairgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qits/errors.hpp"

namespace qits {

namespace {

void require_finite(double v, const char* key) {
    if (!std::isfinite(v)) {
        throw ConfigError(key, "must be finite");
    }
}

void require_nonnegative(double v, const char* key) {
    require_finite(v, key);
    if (v < 0.0) {
        throw ConfigError(key, "must be >= 0");
    }
}

void require_probability(double v, const char* key) {
    require_finite(v, key);
    if (v < 0.0 || v > 1.0) {
        throw ConfigError(key, "must be in [0, 1]");
    }
}

// Jitter can reorder signal events across chunk boundaries; events further
// than this many sigmas out of order are never produced in practice
// (P < 1e-30 per event), and the detector stage rejects any that would be.
constexpr double kJitterMargin = 12.0;

}  // namespace

PolarizationState PolarizationState::linear(double angle_rad) {
    PolarizationState s{Kind::linear, angle_rad};
    s.validate();
    return s;
}

double PolarizationState::linear_angle() const {
    switch (kind) {
        case Kind::horizontal:
            return 0.0;
        case Kind::vertical:
            return std::numbers::pi / 2.0;
        case Kind::linear:
            return angle;
        default:
            return 0.0;
    }
}

void PolarizationState::validate() const {
    if (kind == Kind::linear) {
        if (!std::isfinite(angle) || angle < 0.0 || angle >= std::numbers::pi) {
            throw ConfigError("polarization.angle", "linear polarization angle must be in [0, pi)");
        }
    }
}

void SourceModel::validate() const {
    require_nonnegative(pair_rate, "source.pair_rate_per_s");
    require_nonnegative(pair_jitter_sigma, "source.pair_jitter_ps");
    require_nonnegative(signal_extra_path, "source.signal_extra_path_m");
    require_finite(reference_delay, "source.reference_delay_ns");
    signal_polarization.validate();
    reference_polarization.validate();
}

void NoiseModel::validate() const {
    require_nonnegative(noise_rate, "noise.rate_per_s");
}

void ChannelModel::validate() const {
    require_probability(object_reflectance, "channel.object_reflectance");
    require_probability(collection_efficiency, "channel.collection_efficiency");
    require_probability(depolarization_fraction, "channel.depolarization_fraction");
    require_finite(qwp_angle, "channel.qwp_angle_deg");
}

double polarization_pass_probability(const PolarizationState& pol, double qwp_angle) {
    if (!pol.is_linear()) {
        return 0.5;
    }
    double c = std::cos(2.0 * qwp_angle - pol.linear_angle());
    return c * c;
}

double pair_survival_probability(const ChannelModel& channel, const PolarizationState& pair_polarization) {
    double geometric = channel.object_reflectance * channel.collection_efficiency;
    if (channel.arrangement == Arrangement::tc) {
        // Out through the beam splitter and back: two independent halvings.
        return geometric * 0.25;
    }
    double q = channel.depolarization_fraction;
    double analyzer = (1.0 - q) * polarization_pass_probability(pair_polarization, channel.qwp_angle) + q * 0.5;
    return geometric * analyzer;
}

double noise_survival_probability(const ChannelModel& channel, bool polarized) {
    // The background crosses the analyzer (PBS or BS) exactly once.
    if (polarized && channel.arrangement == Arrangement::tpc) {
        return polarization_pass_probability(PolarizationState::horizontal(), channel.qwp_angle);
    }
    return 0.5;
}

PairSource::PairSource(const SourceModel& model)
    : model_(model), rng_(model.seed, Substream::pair_emission) {
    model_.validate();
    if (model_.pair_rate <= 0.0) {
        exhausted_ = true;
    } else {
        next_emission_ = rng_.exponential(model_.pair_rate);
    }
}

double PairSource::signal_watermark() const {
    return cursor_ + model_.signal_delay() - kJitterMargin * model_.pair_jitter_sigma;
}

double PairSource::reference_watermark() const {
    return cursor_ + model_.reference_delay;
}

void PairSource::pull_raw(double t_end, std::vector<PairEmission>& out) {
    double delay = model_.signal_delay();
    while (!exhausted_ && next_emission_ < t_end) {
        double t = next_emission_;
        double jitter = model_.pair_jitter_sigma > 0.0 ? rng_.normal(0.0, model_.pair_jitter_sigma) : 0.0;
        out.push_back({t + model_.reference_delay, t + delay + jitter});
        next_emission_ = t + rng_.exponential(model_.pair_rate);
    }
    cursor_ = t_end;
}

void PairSource::pull(double t_end, std::vector<RawEvent>& signal_out, std::vector<RawEvent>& reference_out) {
    size_t signal_start = signal_out.size();
    std::vector<PairEmission> pairs;
    pull_raw(t_end, pairs);
    for (const PairEmission& p : pairs) {
        reference_out.push_back({p.reference_time, DetectionChannel::reference, PhotonOrigin::pair});
        signal_out.push_back({p.signal_time, DetectionChannel::signal, PhotonOrigin::pair});
    }
    std::sort(signal_out.begin() + signal_start, signal_out.end(),
              [](const RawEvent& a, const RawEvent& b) { return a.time < b.time; });
}

NoiseSource::NoiseSource(const NoiseModel& model, uint64_t seed)
    : model_(model), rng_(seed, Substream::noise_emission) {
    model_.validate();
    if (model_.noise_rate <= 0.0) {
        exhausted_ = true;
    } else {
        next_time_ = rng_.exponential(model_.noise_rate);
    }
}

void NoiseSource::pull(double t_end, std::vector<RawEvent>& out) {
    while (!exhausted_ && next_time_ < t_end) {
        out.push_back({next_time_, DetectionChannel::signal, PhotonOrigin::noise});
        next_time_ += rng_.exponential(model_.noise_rate);
    }
    cursor_ = t_end;
}

PairStreams generate_pairs(const SourceModel& model, double duration) {
    if (!std::isfinite(duration) || duration <= 0.0) {
        throw ConfigError("duration_s", "must be > 0");
    }
    PairStreams streams;
    PairSource source(model);
    source.pull(duration, streams.signal, streams.reference);
    return streams;
}

std::vector<RawEvent> generate_noise(const NoiseModel& model, double duration, uint64_t seed) {
    if (!std::isfinite(duration) || duration <= 0.0) {
        throw ConfigError("duration_s", "must be > 0");
    }
    std::vector<RawEvent> events;
    NoiseSource source(model, seed);
    source.pull(duration, events);
    return events;
}

std::vector<RawEvent> apply_channel(std::vector<RawEvent> events,
                                    const ChannelModel& channel,
                                    const PolarizationState& pair_polarization,
                                    RngStream& rng,
                                    bool noise_polarized) {
    channel.validate();
    double p_pair = pair_survival_probability(channel, pair_polarization);
    double p_noise = noise_survival_probability(channel, noise_polarized);
    size_t kept = 0;
    for (const RawEvent& e : events) {
        double p = e.origin == PhotonOrigin::pair ? p_pair : p_noise;
        if (rng.bernoulli(p)) {
            events[kept++] = e;
        }
    }
    events.resize(kept);
    return events;
}

}  // namespace qits
