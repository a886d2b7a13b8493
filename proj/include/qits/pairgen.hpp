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

#ifndef QITS_PAIRGEN_HPP
#define QITS_PAIRGEN_HPP

#include <cstdint>
#include <vector>

#include "qits/rng.hpp"

namespace qits {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

enum class DetectionChannel : uint8_t { signal = 0, reference = 1 };
enum class PhotonOrigin : uint8_t { pair = 0, noise = 1 };

/// One ideal photon arrival, before any detector effects.
struct RawEvent {
    double time = 0.0;  // seconds
    DetectionChannel channel = DetectionChannel::signal;
    PhotonOrigin origin = PhotonOrigin::pair;
};

/// Classical polarization label. Linear states carry an angle from horizontal
/// in [0, pi); circular states interact with the double-pass analyzer like
/// unpolarized light (probability 1/2).
struct PolarizationState {
    enum class Kind : uint8_t { horizontal, vertical, right_circular, left_circular, linear };

    Kind kind = Kind::horizontal;
    double angle = 0.0;  // radians, meaningful for linear only

    static PolarizationState horizontal() { return {Kind::horizontal, 0.0}; }
    static PolarizationState vertical() { return {Kind::vertical, 0.0}; }
    static PolarizationState right_circular() { return {Kind::right_circular, 0.0}; }
    static PolarizationState left_circular() { return {Kind::left_circular, 0.0}; }
    static PolarizationState linear(double angle_rad);

    /// Angle from horizontal for linear-family states.
    double linear_angle() const;
    bool is_linear() const {
        return kind == Kind::horizontal || kind == Kind::vertical || kind == Kind::linear;
    }

    void validate() const;
};

/// SPDC pair source: emission times are a homogeneous Poisson process; each
/// emission produces a reference photon at t + reference_delay and a signal
/// photon at t + signal_extra_path/c + N(0, pair_jitter_sigma).
struct SourceModel {
    double pair_rate = 0.0;          // pairs per second
    double pair_jitter_sigma = 0.0;  // seconds
    double signal_extra_path = 1.2;  // meters
    double reference_delay = 0.0;    // seconds
    PolarizationState signal_polarization = PolarizationState::horizontal();
    PolarizationState reference_polarization = PolarizationState::horizontal();
    uint64_t seed = 0;

    double signal_delay() const { return signal_extra_path / kSpeedOfLight; }
    void validate() const;
};

/// Broadband thermal background injected into the signal channel.
struct NoiseModel {
    double noise_rate = 0.0;  // photons per second at the injection point
    bool polarized = false;

    void validate() const;
};

enum class Arrangement : uint8_t { tpc, tc };

/// Loss chain between the source and the signal detector.
///
/// TPC: object reflection, collection optics, then the double-pass QWP+PBS
/// analyzer. Pair photons pass the analyzer with probability cos^2(2*theta)
/// (unless depolarized by the scattering, then 1/2); unpolarized noise always
/// passes with probability 1/2 and is insensitive to theta.
///
/// TC: the analyzer is a plain beam splitter. Photons coming back from the
/// object cross it once (probability 1/2 for pairs and noise alike), and pair
/// photons additionally crossed it on the way out, which costs them one more
/// independent factor of 1/2.
struct ChannelModel {
    Arrangement arrangement = Arrangement::tpc;
    double object_reflectance = 0.13;
    double collection_efficiency = 1.0;
    double qwp_angle = 0.0;  // radians from the maximum-coupling orientation
    double depolarization_fraction = 0.0;

    void validate() const;
};

/// Probability that a photon with the given polarization passes the
/// double-pass QWP + PBS analyzer with the QWP rotated by `qwp_angle` from
/// the maximum-coupling orientation. Linear input at angle a from horizontal
/// passes with cos^2(2*qwp_angle - a); circular input passes with 1/2.
double polarization_pass_probability(const PolarizationState& pol, double qwp_angle);

/// Per-photon survival probabilities through the channel, with all Bernoulli
/// thinnings composed into a single draw. Polarized noise (an off-default
/// NoiseModel) behaves like a horizontally polarized beam at the analyzer;
/// unpolarized noise passes with probability 1/2 regardless of theta.
double pair_survival_probability(const ChannelModel& channel, const PolarizationState& pair_polarization);
double noise_survival_probability(const ChannelModel& channel, bool polarized = false);

struct PairStreams {
    std::vector<RawEvent> signal;
    std::vector<RawEvent> reference;
};

/// One pair emission: the reference photon arrival and the delayed, jittered
/// signal photon arrival, in emission order.
struct PairEmission {
    double reference_time;
    double signal_time;
};

/// Streaming pair generator: pull() emits every pair whose emission time
/// falls in [cursor, t_end). Pulling in chunks consumes the identical draw
/// sequence as one big pull, so chunk boundaries never change the output.
class PairSource {
  public:
    explicit PairSource(const SourceModel& model);

    /// Appends the chunk's pairs in emission order. Reference times are
    /// sorted; signal times are emission-sorted and may be locally reordered
    /// by jitter.
    void pull_raw(double t_end, std::vector<PairEmission>& out);

    /// Appends the chunk's photons to the output vectors. Reference events
    /// arrive sorted. Signal events are sorted within the chunk, but jitter
    /// can make them overlap the neighbouring chunks: all future signal
    /// events are guaranteed to be later than signal_watermark().
    void pull(double t_end, std::vector<RawEvent>& signal_out, std::vector<RawEvent>& reference_out);

    double cursor() const { return cursor_; }

    /// Lower bound on every signal event emitted by future pull() calls.
    double signal_watermark() const;
    /// Lower bound on every reference event emitted by future pull() calls.
    double reference_watermark() const;

  private:
    SourceModel model_;
    RngStream rng_;
    double cursor_ = 0.0;
    double next_emission_ = 0.0;
    bool exhausted_ = false;
};

/// Streaming Poisson background generator for the signal channel.
class NoiseSource {
  public:
    NoiseSource(const NoiseModel& model, uint64_t seed);

    void pull(double t_end, std::vector<RawEvent>& out);
    double cursor() const { return cursor_; }

  private:
    NoiseModel model_;
    RngStream rng_;
    double cursor_ = 0.0;
    double next_time_ = 0.0;
    bool exhausted_ = false;
};

/// Materializes the full pair streams for [0, duration). Both outputs are
/// sorted by time.
PairStreams generate_pairs(const SourceModel& model, double duration);

/// Materializes the noise stream for [0, duration), sorted by time. Noise
/// photons are injected into the signal channel.
std::vector<RawEvent> generate_noise(const NoiseModel& model, double duration, uint64_t seed);

/// Bernoulli-thins `events` through the channel loss chain. Pair-origin
/// photons carry `pair_polarization`; noise photons are unpolarized unless
/// `noise_polarized`. Ordering is preserved.
std::vector<RawEvent> apply_channel(std::vector<RawEvent> events,
                                    const ChannelModel& channel,
                                    const PolarizationState& pair_polarization,
                                    RngStream& rng,
                                    bool noise_polarized = false);

}  // namespace qits

#endif
