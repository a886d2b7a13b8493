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
#include <numbers>
#include <vector>

#include "doctest.h"
#include "qits/errors.hpp"

using namespace qits;

namespace {

SourceModel basic_source(double rate, uint64_t seed) {
    SourceModel m;
    m.pair_rate = rate;
    m.seed = seed;
    return m;
}

}  // namespace

TEST_CASE("zero-rate sources emit nothing") {
    PairStreams streams = generate_pairs(basic_source(0.0, 1), 1.0);
    CHECK(streams.signal.empty());
    CHECK(streams.reference.empty());

    NoiseModel noise;
    noise.noise_rate = 0.0;
    CHECK(generate_noise(noise, 1.0, 1).empty());
}

TEST_CASE("every signal photon lags its twin by the 1.2 m flight time") {
    SourceModel m = basic_source(1e5, 42);
    m.pair_jitter_sigma = 0.0;
    m.signal_extra_path = 1.2;
    PairStreams streams = generate_pairs(m, 0.2);
    REQUIRE(streams.signal.size() == streams.reference.size());
    REQUIRE(streams.signal.size() > 10000);

    const double delay = 1.2 / kSpeedOfLight;
    CHECK(delay == doctest::Approx(4.003e-9).epsilon(2e-4));
    const double tick = 81e-12;
    for (size_t i = 0; i < streams.signal.size(); i++) {
        REQUIRE(streams.signal[i].time - streams.reference[i].time == doctest::Approx(delay).epsilon(1e-12));
        // After quantization the lag straddles two ticks around 49.4.
        int64_t lag = int64_t(std::floor(streams.signal[i].time / tick)) -
                      int64_t(std::floor(streams.reference[i].time / tick));
        REQUIRE(lag >= 49);
        REQUIRE(lag <= 50);
    }
}

TEST_CASE("identical seeds reproduce identical streams") {
    SourceModel m = basic_source(5e4, 777);
    m.pair_jitter_sigma = 120e-12;
    PairStreams a = generate_pairs(m, 1.0);
    PairStreams b = generate_pairs(m, 1.0);
    REQUIRE(a.signal.size() == b.signal.size());
    for (size_t i = 0; i < a.signal.size(); i++) {
        CHECK(a.signal[i].time == b.signal[i].time);
        CHECK(a.reference[i].time == b.reference[i].time);
    }

    NoiseModel noise;
    noise.noise_rate = 3e4;
    auto na = generate_noise(noise, 1.0, 777);
    auto nb = generate_noise(noise, 1.0, 777);
    REQUIRE(na.size() == nb.size());
    for (size_t i = 0; i < na.size(); i++) {
        CHECK(na[i].time == nb[i].time);
    }
}

TEST_CASE("chunked pulls equal one whole pull") {
    SourceModel m = basic_source(2e4, 33);
    m.pair_jitter_sigma = 200e-12;

    std::vector<RawEvent> sig_whole, ref_whole;
    PairSource whole(m);
    whole.pull(1.0, sig_whole, ref_whole);

    std::vector<RawEvent> sig_chunks, ref_chunks;
    PairSource chunked(m);
    for (double t = 0.13; t < 1.0; t += 0.13) {
        chunked.pull(t, sig_chunks, ref_chunks);
    }
    chunked.pull(1.0, sig_chunks, ref_chunks);

    // Same photons regardless of chunking; signal order may differ locally.
    auto time_of = [](const RawEvent& e) { return e.time; };
    std::vector<double> a(sig_whole.size()), b(sig_chunks.size());
    std::transform(sig_whole.begin(), sig_whole.end(), a.begin(), time_of);
    std::transform(sig_chunks.begin(), sig_chunks.end(), b.begin(), time_of);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    REQUIRE(a == b);
    REQUIRE(ref_whole.size() == ref_chunks.size());
    for (size_t i = 0; i < ref_whole.size(); i++) {
        CHECK(ref_whole[i].time == ref_chunks[i].time);
    }
}

TEST_CASE("noise counts follow the Poisson mean") {
    NoiseModel noise;
    noise.noise_rate = 1e6;
    auto events = generate_noise(noise, 1.0, 2026);
    double n = double(events.size());
    CHECK(std::abs(n - 1e6) < 3.0 * std::sqrt(1e6));
    CHECK(std::is_sorted(events.begin(), events.end(), [](auto& a, auto& b) { return a.time < b.time; }));
}

TEST_CASE("pair emissions pass a pooled Poisson dispersion test") {
    // 100 seeded runs x 20 sub-intervals; the index-of-dispersion statistic
    // over all 2000 cells is chi^2-like with mean 2000 and variance
    // 2000 * (2 + 1/lambda). alpha = 0.01 two-sided.
    const double rate = 1e4;
    const double duration = 1.0;
    const int intervals = 20;
    const double lambda = rate * duration / intervals;
    double statistic = 0.0;
    for (uint64_t seed = 0; seed < 100; seed++) {
        PairStreams streams = generate_pairs(basic_source(rate, seed), duration);
        std::vector<int> counts(intervals, 0);
        for (const RawEvent& e : streams.reference) {
            int cell = std::min(intervals - 1, int(e.time / duration * intervals));
            counts[cell]++;
        }
        for (int c : counts) {
            statistic += (c - lambda) * (c - lambda) / lambda;
        }
    }
    const double cells = 2000.0;
    const double sigma = std::sqrt(cells * (2.0 + 1.0 / lambda));
    CHECK(statistic > cells - 2.5758 * sigma);
    CHECK(statistic < cells + 2.5758 * sigma);
}

TEST_CASE("polarization pass probabilities") {
    using P = PolarizationState;
    CHECK(polarization_pass_probability(P::horizontal(), 0.0) == doctest::Approx(1.0));
    CHECK(polarization_pass_probability(P::horizontal(), std::numbers::pi / 4.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(polarization_pass_probability(P::vertical(), 0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(polarization_pass_probability(P::vertical(), std::numbers::pi / 4.0) == doctest::Approx(1.0));
    CHECK(polarization_pass_probability(P::right_circular(), 0.3) == doctest::Approx(0.5));
    CHECK(polarization_pass_probability(P::linear(std::numbers::pi / 8.0), std::numbers::pi / 16.0) ==
          doctest::Approx(1.0));
}

TEST_CASE("channel survival: aligned analyzer keeps every pair photon") {
    ChannelModel ch;
    ch.object_reflectance = 1.0;
    ch.collection_efficiency = 1.0;
    ch.qwp_angle = 0.0;
    ch.depolarization_fraction = 0.0;
    CHECK(pair_survival_probability(ch, PolarizationState::horizontal()) == doctest::Approx(1.0));

    std::vector<RawEvent> events(5000, RawEvent{0.0, DetectionChannel::signal, PhotonOrigin::pair});
    for (size_t i = 0; i < events.size(); i++) {
        events[i].time = double(i) * 1e-6;
    }
    RngStream rng(9, Substream::channel_pairs);
    auto kept = apply_channel(events, ch, PolarizationState::horizontal(), rng);
    CHECK(kept.size() == events.size());
}

TEST_CASE("channel survival: crossed analyzer passes only noise") {
    ChannelModel ch;
    ch.object_reflectance = 1.0;
    ch.collection_efficiency = 1.0;
    ch.qwp_angle = std::numbers::pi / 4.0;

    std::vector<RawEvent> events;
    for (int i = 0; i < 20000; i++) {
        events.push_back({double(i) * 1e-7, DetectionChannel::signal,
                          i % 2 == 0 ? PhotonOrigin::pair : PhotonOrigin::noise});
    }
    RngStream rng(10, Substream::channel_pairs);
    auto kept = apply_channel(events, ch, PolarizationState::horizontal(), rng);
    size_t pair_kept = 0;
    size_t noise_kept = 0;
    for (const RawEvent& e : kept) {
        (e.origin == PhotonOrigin::pair ? pair_kept : noise_kept)++;
    }
    CHECK(pair_kept == 0);
    double p = 0.5;
    double sigma = std::sqrt(p * (1 - p) * 10000);
    CHECK(std::abs(double(noise_kept) - 5000.0) < 3.0 * sigma);
}

TEST_CASE("thinning matches the binomial expectation at the paper reflectance") {
    ChannelModel ch;
    ch.object_reflectance = 0.13;
    ch.collection_efficiency = 1.0;
    const size_t n = 40000;
    std::vector<RawEvent> events(n);
    for (size_t i = 0; i < n; i++) {
        events[i] = {double(i) * 1e-7, DetectionChannel::signal, PhotonOrigin::pair};
    }
    RngStream rng(11, Substream::channel_pairs);
    auto kept = apply_channel(events, ch, PolarizationState::horizontal(), rng);
    double p = 0.13;
    double sigma = std::sqrt(p * (1 - p) * double(n));
    CHECK(std::abs(double(kept.size()) - p * double(n)) < 3.0 * sigma);
}

TEST_CASE("TC pairs carry the extra beam-splitter factor, noise does not") {
    std::vector<RawEvent> events;
    const size_t n = 100000;
    for (size_t i = 0; i < n; i++) {
        events.push_back({double(i) * 1e-8, DetectionChannel::signal,
                          i % 2 == 0 ? PhotonOrigin::pair : PhotonOrigin::noise});
    }
    ChannelModel tpc;
    tpc.object_reflectance = 1.0;
    tpc.collection_efficiency = 1.0;
    tpc.arrangement = Arrangement::tpc;
    ChannelModel tc = tpc;
    tc.arrangement = Arrangement::tc;
    CHECK(pair_survival_probability(tc, PolarizationState::horizontal()) == doctest::Approx(0.25));
    CHECK(noise_survival_probability(tc) == doctest::Approx(0.5));
    CHECK(noise_survival_probability(tpc) == doctest::Approx(0.5));

    RngStream rng_tpc(12, Substream::channel_pairs);
    RngStream rng_tc(12, Substream::channel_noise);
    auto kept_tpc = apply_channel(events, tpc, PolarizationState::horizontal(), rng_tpc);
    auto kept_tc = apply_channel(events, tc, PolarizationState::horizontal(), rng_tc);

    auto count_origin = [](const std::vector<RawEvent>& evs, PhotonOrigin origin) {
        return double(std::count_if(evs.begin(), evs.end(), [&](const RawEvent& e) { return e.origin == origin; }));
    };
    double half = double(n) / 2.0;
    CHECK(count_origin(kept_tpc, PhotonOrigin::pair) == half);  // p = 1 exactly
    CHECK(std::abs(count_origin(kept_tc, PhotonOrigin::pair) - 0.25 * half) < 3.0 * std::sqrt(0.25 * 0.75 * half));
    CHECK(std::abs(count_origin(kept_tc, PhotonOrigin::noise) - 0.5 * half) < 3.0 * std::sqrt(0.25 * half));
    CHECK(std::abs(count_origin(kept_tpc, PhotonOrigin::noise) - 0.5 * half) < 3.0 * std::sqrt(0.25 * half));
}

TEST_CASE("invalid parameters are rejected with the offending key") {
    SourceModel m = basic_source(-1.0, 0);
    CHECK_THROWS_AS(m.validate(), ConfigError);

    NoiseModel noise;
    noise.noise_rate = -5.0;
    CHECK_THROWS_AS(noise.validate(), ConfigError);

    ChannelModel ch;
    ch.object_reflectance = 1.5;
    CHECK_THROWS_AS(ch.validate(), ConfigError);

    CHECK_THROWS_AS(generate_pairs(basic_source(1.0, 0), 0.0), ConfigError);
    CHECK_THROWS_AS(PolarizationState::linear(4.0), ConfigError);
}
