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

#include "qits/pipeline.hpp"

#include <cmath>

#include "doctest.h"
#include "qits/analysis.hpp"
#include "qits/config.hpp"
#include "qits/errors.hpp"

using namespace qits;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig config = parse_config(
        "duration_s = 0.5\n"
        "seed = 555\n"
        "source.pair_rate_per_s = 4e5\n"
        "source.pair_jitter_ps = 150\n"
        "noise.rate_per_s = 2e5\n"
        "channel.object_reflectance = 0.13\n"
        "channel.collection_efficiency = 0.8\n"
        "detector.signal.efficiency = 0.6\n"
        "detector.reference.efficiency = 0.3\n"
        "correlator.lag_min_ticks = -256\n"
        "correlator.lag_max_ticks = 256\n"
        "analysis.gate_half_width_bins = 10\n");
    return config;
}

}  // namespace

TEST_CASE("simulation is deterministic and slice-size independent") {
    ExperimentConfig config = small_config();
    SimulatedStreams a = simulate_streams(config);
    SimulatedStreams b = simulate_streams(config);
    REQUIRE(a.signal.ticks == b.signal.ticks);
    REQUIRE(a.reference.ticks == b.reference.ticks);

    SimulatedStreams c = simulate_streams(config, 0.003);
    SimulatedStreams d = simulate_streams(config, 0.11);
    REQUIRE(a.signal.ticks == c.signal.ticks);
    REQUIRE(a.reference.ticks == c.reference.ticks);
    REQUIRE(a.signal.ticks == d.signal.ticks);
    REQUIRE(a.reference.ticks == d.reference.ticks);
}

TEST_CASE("observed rates track the loss-chain prediction") {
    ExperimentConfig config = small_config();
    config.duration = 2.0;
    SimulatedStreams streams = simulate_streams(config);
    RatePrediction predicted = predict_rates(config);

    double t = config.duration;
    double sig_expected = predicted.signal_observed_rate * t;
    double ref_expected = predicted.reference_observed_rate * t;
    CHECK(std::abs(double(streams.signal.ticks.size()) - sig_expected) < 4.0 * std::sqrt(sig_expected));
    CHECK(std::abs(double(streams.reference.ticks.size()) - ref_expected) < 4.0 * std::sqrt(ref_expected));
}

TEST_CASE("blocking the object leaves only noise on the signal channel") {
    ExperimentConfig config = small_config();
    config.duration = 2.0;
    config.channel.object_reflectance = 0.0;
    SimulatedStreams streams = simulate_streams(config);
    double expected = 0.5 * config.noise.noise_rate * config.signal_detector.efficiency * config.duration;
    CHECK(std::abs(double(streams.signal.ticks.size()) - expected) < 4.0 * std::sqrt(expected));
    // The reference arm still sees every pair.
    CHECK(streams.reference.ticks.size() > 50000);
}

TEST_CASE("run_experiment finds the configured delay and gates on it") {
    ExperimentConfig config = small_config();
    ExperimentResult res = run_experiment(config);
    REQUIRE(res.g2_valid);
    // 1.2 m of extra path = 49.4 ticks of lag.
    CHECK(res.g2_estimate.peak_lag >= 49);
    CHECK(res.g2_estimate.peak_lag <= 50);
    CHECK(res.g2_estimate.significant_peak);
    CHECK(res.g2_estimate.peak_g2 > 10.0);
    CHECK(res.gate_counts > 0);

    // Gating on the known lag reproduces the same counts.
    ExperimentResult gated = run_experiment(config, res.g2_estimate.peak_lag);
    CHECK(gated.gate_counts == res.gate_counts);
}

TEST_CASE("gate lag outside the grid is rejected") {
    ExperimentConfig config = small_config();
    CHECK_THROWS_AS(run_experiment(config, 100000), DataError);
}
