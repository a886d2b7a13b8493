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

#ifndef QITS_PIPELINE_HPP
#define QITS_PIPELINE_HPP

#include <cstdint>
#include <optional>

#include "qits/config.hpp"
#include "qits/correlator.hpp"
#include "qits/detector.hpp"

namespace qits {

/// Detector click streams produced by one simulated acquisition.
struct SimulatedStreams {
    TimestampStream signal;
    TimestampStream reference;
    uint64_t pairs_generated = 0;
    uint64_t noise_generated = 0;
};

/// Runs source -> channel -> detectors over the configured duration.
///
/// The acquisition is processed in bounded time slices so that arbitrarily
/// long or bright runs use constant memory for the raw photon streams; the
/// output is independent of the slice size because every random draw is tied
/// to its photon in emission order. `slice_hint_seconds` overrides the
/// automatic slice length (0 = pick from the event budget).
SimulatedStreams simulate_streams(const ExperimentConfig& config, double slice_hint_seconds = 0.0);

/// Streams plus the correlation analysis of one acquisition.
struct ExperimentResult {
    SimulatedStreams streams;
    Correlogram corr;
    G2Estimate g2_estimate;
    bool g2_valid = false;  // false when a stream has no clicks
    size_t gate_bin = 0;    // center bin of the coincidence gate
    uint64_t gate_counts = 0;

    double signal_rate() const { return streams.signal.observed_rate(); }
    double reference_rate() const { return streams.reference.observed_rate(); }
};

/// simulate_streams + correlogram + g2. The coincidence gate is centered on
/// the bin containing `gate_center_lag` when given (it must lie on the lag
/// grid), otherwise on the correlogram peak; its half-width comes from
/// config.gate_half_width_bins.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::optional<int64_t> gate_center_lag = std::nullopt);

}  // namespace qits

#endif
