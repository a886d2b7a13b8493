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

#ifndef QITS_CONFIG_HPP
#define QITS_CONFIG_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "qits/correlator.hpp"
#include "qits/detector.hpp"
#include "qits/pairgen.hpp"

namespace qits {

/// Everything needed to run one simulated acquisition end to end.
struct ExperimentConfig {
    SourceModel source;
    NoiseModel noise;
    ChannelModel channel;
    DetectorModel signal_detector;
    DetectorModel reference_detector;
    CorrelogramConfig correlator;
    double duration = 1.0;  // seconds
    uint64_t seed = 0;
    // Coincidences are gated over peak_bin +- this many bins.
    int64_t gate_half_width_bins = 0;

    void validate() const;
};

/// Parses the flat key = value configuration format. Keys are dotted paths
/// and physical quantities carry unit suffixes (_s, _ns, _ps, _per_s, _m,
/// _deg, _ticks). '#' starts a comment. Unknown keys, duplicate keys, bad
/// values, and invariant violations all raise ConfigError with the offending
/// key path.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Round-trippable textual form of a config, every key explicit.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace qits

#endif
