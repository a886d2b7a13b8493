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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qits/analysis.hpp"
#include "qits/config.hpp"
#include "qits/errors.hpp"
#include "qits/pipeline.hpp"
#include "qits/timestamp_file.hpp"

namespace {

using namespace qits;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitFit = 4;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<double> linspace(double from, double to, int points) {
    if (points < 1) {
        throw ConfigError("", "--points must be >= 1");
    }
    std::vector<double> xs(points);
    for (int i = 0; i < points; i++) {
        xs[i] = points == 1 ? from : from + (to - from) * double(i) / double(points - 1);
    }
    return xs;
}

std::pair<int64_t, int64_t> parse_lag_range(const std::string& text) {
    size_t colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("", "--lag-range expects MIN:MAX ticks");
    }
    return {std::stoll(text.substr(0, colon)), std::stoll(text.substr(colon + 1))};
}

/// Minimal RFC-style CSV reader: header row, comma separated, numbers only.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    size_t column(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); i++) {
            if (columns[i] == name) {
                return i;
            }
        }
        throw DataError("csv: missing column '" + name + "'");
    }
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("csv: cannot open " + path);
    }
    CsvTable table;
    std::string line;
    bool header = true;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (header) {
            table.columns = cells;
            header = false;
            continue;
        }
        if (cells.size() != table.columns.size()) {
            throw DataError("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(table.columns.size()));
        }
        std::vector<double> row;
        for (const std::string& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw DataError("csv: line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) {
        throw DataError("csv: " + path + " is empty");
    }
    return table;
}

/// Stream that targets --out when given, stdout otherwise.
class OutputTarget {
  public:
    explicit OutputTarget(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) {
                throw DataError("cannot open " + path + " for writing");
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
    bool to_file() const { return file_.is_open(); }

  private:
    std::ofstream file_;
};

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::optional<uint64_t> seed;
};

ExperimentConfig load(const CommonOptions& opts) {
    if (opts.config_path.empty()) {
        throw ConfigError("", "--config is required");
    }
    ExperimentConfig config = load_config(opts.config_path);
    if (opts.seed) {
        set_seed(config, *opts.seed);
    }
    return config;
}

int run_simulate(const CommonOptions& opts) {
    ExperimentConfig config = load(opts);
    if (opts.out_path.empty()) {
        throw ConfigError("", "--out is required");
    }
    SimulatedStreams streams = simulate_streams(config);
    std::vector<TimestampStream> channels{streams.signal, streams.reference};
    write_timestamp_file(std::filesystem::path(opts.out_path), channels);

    RatePrediction predicted = predict_rates(config);
    std::cout << "duration_s " << fmt(config.duration) << "\n";
    std::cout << "seed " << config.seed << "\n";
    std::cout << "pairs_generated " << streams.pairs_generated << "\n";
    std::cout << "noise_generated " << streams.noise_generated << "\n";
    std::cout << "signal_clicks " << streams.signal.ticks.size() << "\n";
    std::cout << "reference_clicks " << streams.reference.ticks.size() << "\n";
    std::cout << "signal_rate_per_s " << fmt(streams.signal.observed_rate()) << "\n";
    std::cout << "reference_rate_per_s " << fmt(streams.reference.observed_rate()) << "\n";
    std::cout << "predicted_signal_rate_per_s " << fmt(predicted.signal_observed_rate) << "\n";
    std::cout << "predicted_reference_rate_per_s " << fmt(predicted.reference_observed_rate) << "\n";
    std::cout << "predicted_coincidence_rate_per_s " << fmt(predicted.observed_coincidence_rate) << "\n";
    return kExitOk;
}

struct G2Options {
    std::string in_path;
    std::string out_path;
    int64_t bins = 1;
    std::string lag_range = "-512:512";
    double duration_s = 0.0;  // 0 = infer from the file
};

int run_g2(const G2Options& opts) {
    std::vector<TimestampStream> channels = read_timestamp_file(std::filesystem::path(opts.in_path));
    if (channels.size() < 2) {
        throw DataError("g2: file must contain a signal (0) and a reference (1) channel");
    }
    TimestampStream& signal = channels[0];
    TimestampStream& reference = channels[1];
    if (opts.duration_s > 0.0) {
        auto ticks = uint64_t(std::ceil(opts.duration_s / (double(signal.tick_ps) * 1e-12)));
        signal.duration_ticks = ticks;
        reference.duration_ticks = ticks;
    }

    CorrelogramConfig cfg;
    cfg.bin_width = opts.bins;
    auto [lag_min, lag_max] = parse_lag_range(opts.lag_range);
    cfg.lag_min = lag_min;
    cfg.lag_max = lag_max;
    cfg.validate();

    Correlogram corr = correlogram(signal, reference, cfg);
    G2Estimate est = g2(corr);

    OutputTarget out(opts.out_path);
    out.stream() << "lag_ticks,counts,g2\n";
    for (size_t k = 0; k < corr.counts.size(); k++) {
        out.stream() << corr.bin_lag_low(k) << "," << corr.counts[k] << "," << fmt(est.g2[k]) << "\n";
    }

    std::ostream& info = out.to_file() ? std::cout : std::cerr;
    info << "peak_lag_ticks " << est.peak_lag << "\n";
    info << "peak_g2 " << fmt(est.peak_g2) << "\n";
    info << "snr " << fmt(est.snr()) << "\n";
    info << "accidental_rate_per_s " << fmt(est.accidental_rate) << "\n";
    info << "significant_peak " << (est.significant_peak ? "true" : "false") << "\n";
    return kExitOk;
}

struct SweepOptions {
    CommonOptions common;
    std::string kind;  // noise | qwp | visibility
    std::string arrangement = "tpc";
    double from = 0.0;
    double to = 0.0;
    int points = 0;
};

/// A one-point "sweep" is just a single gated acquisition of the config
/// itself (same seed), so its row agrees with a direct g2 run.
void run_single_point(ExperimentConfig cfg, double x, const char* header, std::ostream& out) {
    int64_t gate_lag = calibrate_gate_lag(cfg);
    ExperimentResult res = run_experiment(cfg, gate_lag);
    double t = res.corr.duration_seconds();
    double expected = (double(res.corr.singles_a) / t) * (double(res.corr.singles_b) / t) *
                      res.corr.bin_width_seconds() * t * double(2 * cfg.gate_half_width_bins + 1);
    double g2w = expected > 0.0 ? double(res.gate_counts) / expected : std::nan("");
    out << header << "\n";
    out << fmt(x) << "," << fmt(double(res.gate_counts)) << "," << fmt(g2w) << "," << fmt(g2w - 1.0) << ","
        << fmt(std::sqrt(double(res.gate_counts))) << "\n";
}

int run_sweep(const SweepOptions& opts) {
    ExperimentConfig config = load(opts.common);
    std::vector<double> xs = linspace(opts.from, opts.to, opts.points);
    OutputTarget out(opts.common.out_path);

    if (xs.size() == 1 && (opts.kind == "noise" || opts.kind == "qwp")) {
        ExperimentConfig cfg = config;
        if (opts.kind == "noise") {
            cfg.channel.arrangement = opts.arrangement == "tc" ? Arrangement::tc : Arrangement::tpc;
            cfg.noise.noise_rate = xs[0];
            run_single_point(cfg, xs[0], "noise_per_s,counts,g2,snr,sigma", out.stream());
        } else {
            cfg.channel.qwp_angle = xs[0] * std::numbers::pi / 180.0;
            run_single_point(cfg, xs[0], "theta_deg,counts,g2,snr,sigma", out.stream());
        }
        return kExitOk;
    }

    if (opts.kind == "noise") {
        Arrangement arr = opts.arrangement == "tc" ? Arrangement::tc : Arrangement::tpc;
        SweepResult sweep = sweep_noise(config, xs, arr);
        out.stream() << "noise_per_s,counts,g2,snr,sigma\n";
        for (size_t i = 0; i < sweep.size(); i++) {
            out.stream() << fmt(sweep.x[i]) << "," << fmt(sweep.coincidences[i]) << "," << fmt(sweep.g2[i]) << ","
                         << fmt(sweep.snr[i]) << "," << fmt(sweep.sigma[i]) << "\n";
        }
        for (size_t i = 0; i < sweep.size(); i++) {
            if (!sweep.errors[i].empty()) {
                std::cerr << "point " << i << " failed: " << sweep.errors[i] << "\n";
            }
        }
        return kExitOk;
    }
    if (opts.kind == "qwp") {
        std::vector<double> radians(xs.size());
        for (size_t i = 0; i < xs.size(); i++) {
            radians[i] = xs[i] * std::numbers::pi / 180.0;
        }
        SweepResult sweep = sweep_qwp(config, radians);
        out.stream() << "theta_deg,counts,g2,snr,sigma\n";
        for (size_t i = 0; i < sweep.size(); i++) {
            out.stream() << fmt(xs[i]) << "," << fmt(sweep.coincidences[i]) << "," << fmt(sweep.g2[i]) << ","
                         << fmt(sweep.snr[i]) << "," << fmt(sweep.sigma[i]) << "\n";
        }
        for (size_t i = 0; i < sweep.size(); i++) {
            if (!sweep.errors[i].empty()) {
                std::cerr << "point " << i << " failed: " << sweep.errors[i] << "\n";
            }
        }
        return kExitOk;
    }
    if (opts.kind == "visibility") {
        std::vector<VisibilityMeasurement> points = visibility_sweep(config, xs);
        out.stream() << "noise_per_s,c_max,c_min,c_ac,v,sigma_v,av_per_s,d\n";
        for (const VisibilityMeasurement& pt : points) {
            out.stream() << fmt(pt.noise_rate) << "," << fmt(pt.c_max) << "," << fmt(pt.c_min) << "," << fmt(pt.c_ac)
                         << "," << fmt(pt.v) << "," << fmt(pt.sigma_v) << "," << fmt(pt.observed_signal_rate) << ","
                         << fmt(pt.d) << "\n";
        }
        return kExitOk;
    }
    throw ConfigError("", "--sweep must be noise, qwp, or visibility");
}

struct FitOptions {
    std::string in_path;
    std::string model;  // sinusoid | visibility
    double c_corr_guess = 0.0;
    double dead_time_ns = 18.0;
    bool no_correction = false;
};

int run_fit(const FitOptions& opts) {
    CsvTable table = read_csv(opts.in_path);
    if (opts.model == "sinusoid") {
        size_t cx = table.column("theta_deg");
        size_t cy = table.column("counts");
        size_t cs = table.column("sigma");
        SweepResult sweep;
        for (const auto& row : table.rows) {
            sweep.x.push_back(row[cx] * std::numbers::pi / 180.0);
            sweep.coincidences.push_back(row[cy]);
            sweep.g2.push_back(0.0);
            sweep.snr.push_back(0.0);
            sweep.sigma.push_back(row[cs]);
            sweep.errors.emplace_back();
        }
        QwpFit fit = fit_sinusoid(sweep);
        std::cout << "c_max " << fmt(fit.c_max) << " +- " << fmt(fit.sigma_c_max) << "\n";
        std::cout << "c_min " << fmt(fit.c_min) << " +- " << fmt(fit.sigma_c_min) << "\n";
        std::cout << "phase_deg " << fmt(fit.phase * 180.0 / std::numbers::pi) << "\n";
        std::cout << "residual_norm " << fmt(fit.residual_norm) << "\n";
        double v = fit.c_max > 0.0 ? visibility(fit.c_max, std::clamp(fit.c_min, 0.0, fit.c_max)) : 0.0;
        std::cout << "visibility " << fmt(v) << "\n";
        std::cout << "converged " << (fit.converged ? "true" : "false") << "\n";
        if (!fit.converged) {
            std::cerr << "fit did not converge\n";
            return kExitFit;
        }
        return kExitOk;
    }
    if (opts.model == "visibility") {
        size_t ca = table.column("c_ac");
        size_t cv = table.column("v");
        size_t cs = table.column("sigma_v");
        size_t cr = table.column("av_per_s");
        std::vector<VisibilityMeasurement> points;
        for (const auto& row : table.rows) {
            VisibilityMeasurement pt;
            pt.c_ac = row[ca];
            pt.v = row[cv];
            pt.sigma_v = row[cs];
            pt.observed_signal_rate = row[cr];
            points.push_back(pt);
        }
        double guess = opts.c_corr_guess;
        if (guess <= 0.0) {
            for (const auto& pt : points) {
                if (std::isfinite(pt.v) && pt.v > 0.0 && pt.v < 1.0) {
                    guess = std::max(guess, 2.0 * pt.c_ac * pt.v / (1.0 - pt.v));
                }
            }
            if (guess <= 0.0) {
                guess = 1.0;
            }
        }
        DetectorModel detector;
        detector.dead_time = opts.dead_time_ns * 1e-9;
        VisibilityFit fit = fit_visibility_curve(points, guess, detector, !opts.no_correction);
        std::cout << "c_corr " << fmt(fit.c_corr) << " +- " << fmt(fit.sigma_c_corr) << "\n";
        std::cout << "residual_norm " << fmt(fit.residual_norm) << "\n";
        std::cout << "converged " << (fit.converged ? "true" : "false") << "\n";
        if (!fit.converged) {
            std::cerr << "fit did not converge\n";
            return kExitFit;
        }
        return kExitOk;
    }
    throw ConfigError("", "--model must be sinusoid or visibility");
}

struct SaturationOptions {
    std::string rates;  // MIN:MAX:N
    std::string out_path;
    double dead_time_ns = 18.0;
    double duration_s = 1.0;
    uint64_t seed = 0;
};

int run_saturation(const SaturationOptions& opts) {
    size_t c1 = opts.rates.find(':');
    size_t c2 = opts.rates.rfind(':');
    if (c1 == std::string::npos || c2 == c1) {
        throw ConfigError("", "--rates expects MIN:MAX:N");
    }
    double lo = std::stod(opts.rates.substr(0, c1));
    double hi = std::stod(opts.rates.substr(c1 + 1, c2 - c1 - 1));
    int n = std::stoi(opts.rates.substr(c2 + 1));
    std::vector<double> rates = linspace(lo, hi, n);

    DetectorModel model;
    model.dead_time = opts.dead_time_ns * 1e-9;
    std::vector<RateReport> reports = saturation_curve(model, rates, opts.duration_s, opts.seed);

    OutputTarget out(opts.out_path);
    out.stream() << "incident_per_s,observed_per_s,d,saturated\n";
    for (const RateReport& r : reports) {
        out.stream() << fmt(r.incident_rate) << "," << fmt(r.observed_rate) << "," << fmt(r.correction) << ","
                     << (r.saturated ? "true" : "false") << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qits: photon-pair ranging simulator and timestamp correlation analyzer"};
    app.require_subcommand(1);

    CommonOptions sim_opts;
    CLI::App* sim = app.add_subcommand("simulate", "Simulate an acquisition and write a timestamp file");
    sim->add_option("--config", sim_opts.config_path, "Experiment config file")->required();
    sim->add_option("--out", sim_opts.out_path, "Output timestamp file")->required();
    sim->add_option("--seed", sim_opts.seed, "Override the config seed");

    G2Options g2_opts;
    CLI::App* g2cmd = app.add_subcommand("g2", "Cross-correlate a timestamp file and estimate g2");
    g2cmd->add_option("--in", g2_opts.in_path, "Input timestamp file")->required();
    g2cmd->add_option("--out", g2_opts.out_path, "Output CSV (default stdout); columns lag_ticks,counts,g2");
    g2cmd->add_option("--bins", g2_opts.bins, "Bin width in ticks (default 1)");
    g2cmd->add_option("--lag-range", g2_opts.lag_range, "Lag range MIN:MAX in ticks (default -512:512)");
    g2cmd->add_option("--duration-s", g2_opts.duration_s, "Acquisition duration; inferred from the file when omitted");

    SweepOptions sweep_opts;
    CLI::App* sweep = app.add_subcommand("sweep", "Sweep noise level, QWP angle, or visibility points");
    sweep->add_option("--config", sweep_opts.common.config_path, "Experiment config file")->required();
    sweep->add_option("--sweep", sweep_opts.kind, "noise | qwp | visibility")->required();
    sweep->add_option("--from", sweep_opts.from, "First sweep value (noise: /s, qwp: degrees)")->required();
    sweep->add_option("--to", sweep_opts.to, "Last sweep value")->required();
    sweep->add_option("--points", sweep_opts.points, "Number of sweep points")->required();
    sweep->add_option("--arrangement", sweep_opts.arrangement, "tpc | tc (noise sweep only, default tpc)");
    sweep->add_option("--out", sweep_opts.common.out_path, "Output CSV (default stdout)");
    sweep->add_option("--seed", sweep_opts.common.seed, "Override the config seed");
    sweep->footer("noise/qwp CSV columns: x,counts,g2,snr,sigma (sigma = sqrt(counts)).\n"
                  "visibility CSV columns: noise_per_s,c_max,c_min,c_ac,v,sigma_v,av_per_s,d");

    FitOptions fit_opts;
    CLI::App* fit = app.add_subcommand("fit", "Fit a model to a sweep CSV");
    fit->add_option("--in", fit_opts.in_path, "Input CSV from 'qits sweep'")->required();
    fit->add_option("--model", fit_opts.model, "sinusoid | visibility")->required();
    fit->add_option("--c-corr-guess", fit_opts.c_corr_guess, "Initial C_corr (visibility model)");
    fit->add_option("--dead-time-ns", fit_opts.dead_time_ns, "Signal detector dead time (default 18)");
    fit->add_flag("--no-correction", fit_opts.no_correction, "Force d = 1 in the visibility model");

    SaturationOptions sat_opts;
    CLI::App* sat = app.add_subcommand("saturation", "Measure the detector saturation curve");
    sat->add_option("--rates", sat_opts.rates, "Incident rate grid MIN:MAX:N (/s)")->required();
    sat->add_option("--dead-time-ns", sat_opts.dead_time_ns, "Detector dead time (default 18)");
    sat->add_option("--duration-s", sat_opts.duration_s, "Seconds simulated per point (default 1)");
    sat->add_option("--seed", sat_opts.seed, "Seed (default 0)");
    sat->add_option("--out", sat_opts.out_path, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sim->parsed()) {
            return run_simulate(sim_opts);
        }
        if (g2cmd->parsed()) {
            return run_g2(g2_opts);
        }
        if (sweep->parsed()) {
            return run_sweep(sweep_opts);
        }
        if (fit->parsed()) {
            return run_fit(fit_opts);
        }
        if (sat->parsed()) {
            return run_saturation(sat_opts);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
