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
#include <vector>

#include "doctest.h"
#include "qits/errors.hpp"

using namespace qits;

namespace {

std::vector<RawEvent> events_at(std::initializer_list<double> times) {
    std::vector<RawEvent> events;
    for (double t : times) {
        events.push_back({t, DetectionChannel::signal, PhotonOrigin::pair});
    }
    return events;
}

std::vector<RawEvent> poisson_events(double rate, double duration, uint64_t seed) {
    RngStream rng(seed, Substream::test, 1);
    std::vector<RawEvent> events;
    for (double t = rng.exponential(rate); t < duration; t += rng.exponential(rate)) {
        events.push_back({t, DetectionChannel::signal, PhotonOrigin::noise});
    }
    return events;
}

/// Straight-line re-implementation of the detector chain, used as the
/// per-event oracle. Consumes draws in the same order as detect().
std::vector<uint64_t> oracle_detect(const std::vector<RawEvent>& events, const DetectorModel& m, RngStream rng) {
    std::vector<double> times;
    for (const RawEvent& e : events) {
        if (m.efficiency < 1.0 && !rng.bernoulli(m.efficiency)) {
            continue;
        }
        double t = e.time;
        if (m.jitter_sigma > 0.0) {
            t += rng.normal(0.0, m.jitter_sigma);
        }
        times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    std::vector<uint64_t> ticks;
    double live_at = -1e300;
    int64_t last_tick = -1;
    for (double t : times) {
        if (t < live_at) {
            continue;
        }
        live_at = t + m.dead_time;
        if (t < 0.0) {
            continue;
        }
        int64_t tick = int64_t(std::floor(t / m.tick));
        if (tick == last_tick) {
            continue;
        }
        last_tick = tick;
        ticks.push_back(uint64_t(tick));
    }
    return ticks;
}

}  // namespace

TEST_CASE("quantization floors times into 81 ps ticks") {
    DetectorModel m;
    m.efficiency = 1.0;
    m.dead_time = 0.0;
    m.jitter_sigma = 0.0;
    RngStream rng(0, Substream::detector, 0);
    TimestampStream out = detect(events_at({1.0e-9, 2.0e-9}), m, rng, 1e-6);
    REQUIRE(out.ticks.size() == 2);
    CHECK(out.ticks[0] == 12);  // floor(1.0 ns / 81 ps)
    CHECK(out.ticks[1] == 24);  // floor(2.0 ns / 81 ps)
    CHECK(out.tick_ps == 81);
}

TEST_CASE("18 ns dead time swallows a photon 10 ns behind the first") {
    DetectorModel m;
    m.dead_time = 18e-9;
    RngStream rng(0, Substream::detector, 0);
    TimestampStream out = detect(events_at({0.0, 10e-9}), m, rng, 1e-6);
    REQUIRE(out.ticks.size() == 1);
    CHECK(out.ticks[0] == 0);
}

TEST_CASE("observed rate follows R / (1 + R t_d)") {
    DetectorModel m;
    m.dead_time = 18e-9;
    const double rate = 1e6;
    const double duration = 10.0;
    auto events = poisson_events(rate, duration, 4242);
    RngStream rng(4242, Substream::detector, 0);
    TimestampStream out = detect(events, m, rng, duration);

    double expected = rate / (1.0 + rate * m.dead_time);  // 982318.27... /s
    CHECK(expected == doctest::Approx(982318.27).epsilon(1e-6));
    double sigma = std::sqrt(expected * duration) / duration;
    CHECK(std::abs(out.observed_rate() - expected) < 3.0 * sigma);
}

TEST_CASE("detect matches the per-event oracle exactly under the same seed") {
    DetectorModel m;
    m.efficiency = 0.62;
    m.dead_time = 18e-9;
    m.jitter_sigma = 140e-12;
    auto events = poisson_events(2e6, 0.05, 99);
    RngStream rng_detect(99, Substream::detector, 3);
    RngStream rng_oracle(99, Substream::detector, 3);
    TimestampStream out = detect(events, m, rng_detect, 0.05);
    auto expected = oracle_detect(events, m, rng_oracle);
    REQUIRE(out.ticks == expected);
}

TEST_CASE("streaming in chunks reproduces the whole-stream pass") {
    DetectorModel m;
    m.efficiency = 0.8;
    m.dead_time = 18e-9;
    m.jitter_sigma = 200e-12;
    auto events = poisson_events(5e5, 0.2, 1234);

    RngStream rng_a(7, Substream::detector, 0);
    TimestampStream whole = detect(events, m, rng_a, 0.2);

    StreamingDetector chunked(m, 0, RngStream(7, Substream::detector, 0));
    size_t i = 0;
    for (double t1 = 0.01; t1 <= 0.2 + 1e-9; t1 += 0.01) {
        size_t j = i;
        while (j < events.size() && events[j].time < t1) {
            j++;
        }
        chunked.feed(std::span<const RawEvent>(events.data() + i, j - i), t1);
        i = j;
    }
    TimestampStream streamed = chunked.finish(0.2);
    REQUIRE(streamed.ticks == whole.ticks);
}

TEST_CASE("dead-time floor holds for every output gap") {
    DetectorModel m;
    m.dead_time = 18e-9;
    m.jitter_sigma = 100e-12;
    m.efficiency = 0.9;
    auto events = poisson_events(3e6, 0.05, 5150);
    RngStream rng(5150, Substream::detector, 0);
    TimestampStream out = detect(events, m, rng, 0.05);
    REQUIRE(out.ticks.size() > 1000);
    uint64_t floor_ticks = uint64_t(std::floor(m.dead_time / m.tick));
    for (size_t k = 1; k < out.ticks.size(); k++) {
        REQUIRE(out.ticks[k] - out.ticks[k - 1] >= floor_ticks);
    }
}

TEST_CASE("same-tick arrivals collapse to one click when dead time is off") {
    DetectorModel m;
    m.dead_time = 0.0;
    RngStream rng(0, Substream::detector, 0);
    // 10 ps apart: same 81 ps tick.
    TimestampStream out = detect(events_at({1.000e-9, 1.010e-9, 50e-9}), m, rng, 1e-6);
    REQUIRE(out.ticks.size() == 2);
    CHECK(out.ticks[0] == 12);
}

TEST_CASE("unsorted input is rejected") {
    DetectorModel m;
    RngStream rng(0, Substream::detector, 0);
    CHECK_THROWS_AS(detect(events_at({2e-9, 1e-9}), m, rng, 1e-6), DataError);
}

TEST_CASE("correction factor arithmetic and its pole") {
    CHECK(correction_factor(0.0, 18e-9) == doctest::Approx(1.0));
    CHECK(correction_factor(5e5, 18e-9) == doctest::Approx(1.0090817).epsilon(1e-6));
    CHECK(correction_factor(1e6, 18e-9) == doctest::Approx(1.0183299).epsilon(1e-6));
    CHECK(correction_factor(0.5 / 18e-9, 18e-9) == doctest::Approx(2.0));
    CHECK_THROWS_AS(correction_factor(1.0 / 18e-9, 18e-9), std::domain_error);
    CHECK_THROWS_AS(correction_factor(-1.0, 18e-9), std::domain_error);
}

TEST_CASE("saturation curve: idle point, monotonicity, and the hard ceiling") {
    DetectorModel m;
    m.dead_time = 18e-9;
    std::vector<double> rates{0.0, 1e5, 5e5, 1e6, 5e6, 2e7, 1e8};
    auto reports = saturation_curve(m, rates, 0.5, 31337);
    REQUIRE(reports.size() == rates.size());
    CHECK(reports[0].observed_rate == 0.0);
    CHECK(reports[0].correction == doctest::Approx(1.0));
    for (size_t i = 1; i < reports.size(); i++) {
        CHECK(reports[i].observed_rate >= reports[i - 1].observed_rate);
        CHECK(reports[i].observed_rate < 1.0 / m.dead_time * 1.001);
        if (!reports[i].saturated) {
            CHECK(reports[i].correction >= 1.0);
        }
    }
    // The curve flattens: observed/incident falls to 1/(1 + R t_d) = 0.357
    // at the brightest point, against ~1 in the linear region.
    double low_ratio = reports[1].observed_rate / rates[1];
    double high_ratio = reports.back().observed_rate / rates.back();
    CHECK(high_ratio < 0.5 * low_ratio);
    // Predicted observed rate at each point, 3 sigma.
    for (size_t i = 1; i < reports.size(); i++) {
        double expected = rates[i] / (1.0 + rates[i] * m.dead_time);
        double sigma = std::sqrt(expected * 0.5) / 0.5;
        CHECK(std::abs(reports[i].observed_rate - expected) < 4.0 * sigma);
    }
}

TEST_CASE("saturation overflow is flagged, not thrown") {
    DetectorModel m;
    m.dead_time = 1e-6;
    m.tick = 1e-12;
    std::vector<double> rates{1e8};
    auto reports = saturation_curve(m, rates, 1e-6, 11);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].saturated);
}

TEST_CASE("detector model validation") {
    DetectorModel m;
    m.efficiency = 1.2;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m = DetectorModel{};
    m.tick = 80.5e-12;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m = DetectorModel{};
    m.dead_time = -1e-9;
    CHECK_THROWS_AS(m.validate(), ConfigError);
}
