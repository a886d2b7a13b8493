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

#include "qits/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "qits/errors.hpp"

namespace qits {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_double(const std::string& key, std::string_view raw) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc() || ptr != raw.data() + raw.size()) {
        throw ConfigError(key, "expected a number, got '" + std::string(raw) + "'");
    }
    return value;
}

int64_t parse_int(const std::string& key, std::string_view raw) {
    int64_t value = 0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc() || ptr != raw.data() + raw.size()) {
        throw ConfigError(key, "expected an integer, got '" + std::string(raw) + "'");
    }
    return value;
}

uint64_t parse_u64(const std::string& key, std::string_view raw) {
    uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc() || ptr != raw.data() + raw.size()) {
        throw ConfigError(key, "expected an unsigned integer, got '" + std::string(raw) + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, std::string_view raw) {
    if (raw == "true") {
        return true;
    }
    if (raw == "false") {
        return false;
    }
    throw ConfigError(key, "expected true or false, got '" + std::string(raw) + "'");
}

PolarizationState parse_polarization(const std::string& key, std::string_view raw) {
    if (raw == "h") {
        return PolarizationState::horizontal();
    }
    if (raw == "v") {
        return PolarizationState::vertical();
    }
    if (raw == "rhc") {
        return PolarizationState::right_circular();
    }
    if (raw == "lhc") {
        return PolarizationState::left_circular();
    }
    if (raw.rfind("linear:", 0) == 0) {
        double deg = parse_double(key, raw.substr(7));
        if (deg < 0.0 || deg >= 180.0) {
            throw ConfigError(key, "linear angle must be in [0, 180) degrees");
        }
        return PolarizationState::linear(deg * kDegree);
    }
    throw ConfigError(key, "expected h, v, rhc, lhc, or linear:<deg>, got '" + std::string(raw) + "'");
}

std::string format_polarization(const PolarizationState& pol) {
    switch (pol.kind) {
        case PolarizationState::Kind::horizontal:
            return "h";
        case PolarizationState::Kind::vertical:
            return "v";
        case PolarizationState::Kind::right_circular:
            return "rhc";
        case PolarizationState::Kind::left_circular:
            return "lhc";
        case PolarizationState::Kind::linear: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "linear:%.17g", pol.angle / kDegree);
            return buf;
        }
    }
    return "h";
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, std::string_view)>;

struct KeyEntry {
    const char* name;
    Setter set;
};

const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = {
        {"duration_s", [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.duration = parse_double(k, v); }},
        {"seed",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) {
             c.seed = parse_u64(k, v);
             c.source.seed = c.seed;
         }},
        {"source.pair_rate_per_s",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.source.pair_rate = parse_double(k, v); }},
        {"source.pair_jitter_ps",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.source.pair_jitter_sigma = parse_double(k, v) * 1e-12; }},
        {"source.signal_extra_path_m",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.source.signal_extra_path = parse_double(k, v); }},
        {"source.reference_delay_ns",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.source.reference_delay = parse_double(k, v) * 1e-9; }},
        {"source.signal_polarization",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.source.signal_polarization = parse_polarization(k, v); }},
        {"source.reference_polarization",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.source.reference_polarization = parse_polarization(k, v); }},
        {"noise.rate_per_s",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.noise.noise_rate = parse_double(k, v); }},
        {"noise.polarized",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.noise.polarized = parse_bool(k, v); }},
        {"channel.arrangement",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) {
             if (v == "tpc") {
                 c.channel.arrangement = Arrangement::tpc;
             } else if (v == "tc") {
                 c.channel.arrangement = Arrangement::tc;
             } else {
                 throw ConfigError(k, "expected tpc or tc, got '" + std::string(v) + "'");
             }
         }},
        {"channel.object_reflectance",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.channel.object_reflectance = parse_double(k, v); }},
        {"channel.collection_efficiency",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.channel.collection_efficiency = parse_double(k, v); }},
        {"channel.qwp_angle_deg",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.channel.qwp_angle = parse_double(k, v) * kDegree; }},
        {"channel.depolarization_fraction",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.channel.depolarization_fraction = parse_double(k, v); }},
        {"detector.tick_ps",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) {
             double tick = parse_double(k, v) * 1e-12;
             c.signal_detector.tick = tick;
             c.reference_detector.tick = tick;
         }},
        {"detector.signal.efficiency",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.signal_detector.efficiency = parse_double(k, v); }},
        {"detector.signal.dead_time_ns",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.signal_detector.dead_time = parse_double(k, v) * 1e-9; }},
        {"detector.signal.jitter_ps",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.signal_detector.jitter_sigma = parse_double(k, v) * 1e-12; }},
        {"detector.reference.efficiency",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.reference_detector.efficiency = parse_double(k, v); }},
        {"detector.reference.dead_time_ns",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.reference_detector.dead_time = parse_double(k, v) * 1e-9; }},
        {"detector.reference.jitter_ps",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.reference_detector.jitter_sigma = parse_double(k, v) * 1e-12; }},
        {"correlator.bin_width_ticks",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.correlator.bin_width = parse_int(k, v); }},
        {"correlator.lag_min_ticks",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.correlator.lag_min = parse_int(k, v); }},
        {"correlator.lag_max_ticks",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) { c.correlator.lag_max = parse_int(k, v); }},
        {"analysis.gate_half_width_bins",
         [](ExperimentConfig& c, const std::string& k, std::string_view v) {
             c.gate_half_width_bins = parse_int(k, v);
         }},
    };
    return table;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!std::isfinite(duration) || duration <= 0.0) {
        throw ConfigError("duration_s", "must be > 0");
    }
    source.validate();
    noise.validate();
    channel.validate();
    // Re-key detector errors with the arm they belong to.
    auto validate_detector = [](const DetectorModel& m, const std::string& arm) {
        try {
            m.validate();
        } catch (const ConfigError& e) {
            std::string key = e.key();
            std::string message = e.what();
            if (std::string prefix = key + ": "; message.rfind(prefix, 0) == 0) {
                message = message.substr(prefix.size());
            }
            // tick_ps is one shared key; everything else is per-arm.
            if (key != "detector.tick_ps" && key.rfind("detector.", 0) == 0) {
                key = "detector." + arm + "." + key.substr(9);
            }
            throw ConfigError(key, message);
        }
    };
    validate_detector(signal_detector, "signal");
    validate_detector(reference_detector, "reference");
    correlator.validate();
    if (signal_detector.tick_picoseconds() != reference_detector.tick_picoseconds()) {
        throw ConfigError("detector.tick_ps", "both detectors must share one tick");
    }
    if (gate_half_width_bins < 0) {
        throw ConfigError("analysis.gate_half_width_bins", "must be >= 0");
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig config;
    std::set<std::string> seen;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        line_no++;

        if (size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key{trim(line.substr(0, eq))};
        std::string_view value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) {
            throw ConfigError(key, "duplicate key");
        }
        bool matched = false;
        for (const KeyEntry& entry : key_table()) {
            if (key == entry.name) {
                entry.set(config, key, value);
                matched = true;
                break;
            }
        }
        if (!matched) {
            throw ConfigError(key, "unknown key");
        }
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("", "cannot open config file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    auto num = [](double v) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "duration_s = " << num(c.duration) << "\n";
    out << "seed = " << c.seed << "\n";
    out << "source.pair_rate_per_s = " << num(c.source.pair_rate) << "\n";
    out << "source.pair_jitter_ps = " << num(c.source.pair_jitter_sigma * 1e12) << "\n";
    out << "source.signal_extra_path_m = " << num(c.source.signal_extra_path) << "\n";
    out << "source.reference_delay_ns = " << num(c.source.reference_delay * 1e9) << "\n";
    out << "source.signal_polarization = " << format_polarization(c.source.signal_polarization) << "\n";
    out << "source.reference_polarization = " << format_polarization(c.source.reference_polarization) << "\n";
    out << "noise.rate_per_s = " << num(c.noise.noise_rate) << "\n";
    out << "noise.polarized = " << (c.noise.polarized ? "true" : "false") << "\n";
    out << "channel.arrangement = " << (c.channel.arrangement == Arrangement::tpc ? "tpc" : "tc") << "\n";
    out << "channel.object_reflectance = " << num(c.channel.object_reflectance) << "\n";
    out << "channel.collection_efficiency = " << num(c.channel.collection_efficiency) << "\n";
    out << "channel.qwp_angle_deg = " << num(c.channel.qwp_angle / kDegree) << "\n";
    out << "channel.depolarization_fraction = " << num(c.channel.depolarization_fraction) << "\n";
    out << "detector.tick_ps = " << num(c.signal_detector.tick * 1e12) << "\n";
    out << "detector.signal.efficiency = " << num(c.signal_detector.efficiency) << "\n";
    out << "detector.signal.dead_time_ns = " << num(c.signal_detector.dead_time * 1e9) << "\n";
    out << "detector.signal.jitter_ps = " << num(c.signal_detector.jitter_sigma * 1e12) << "\n";
    out << "detector.reference.efficiency = " << num(c.reference_detector.efficiency) << "\n";
    out << "detector.reference.dead_time_ns = " << num(c.reference_detector.dead_time * 1e9) << "\n";
    out << "detector.reference.jitter_ps = " << num(c.reference_detector.jitter_sigma * 1e12) << "\n";
    out << "correlator.bin_width_ticks = " << c.correlator.bin_width << "\n";
    out << "correlator.lag_min_ticks = " << c.correlator.lag_min << "\n";
    out << "correlator.lag_max_ticks = " << c.correlator.lag_max << "\n";
    out << "analysis.gate_half_width_bins = " << c.gate_half_width_bins << "\n";
    return out.str();
}

}  // namespace qits
