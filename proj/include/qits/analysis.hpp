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

#ifndef QITS_ANALYSIS_HPP
#define QITS_ANALYSIS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qits/pipeline.hpp"

namespace qits {

/// One sweep of the full pipeline against a control variable (noise rate or
/// QWP angle). `g2` is the gate-window coincidence total over its accidental
/// expectation; `sigma` is the sqrt(N) Poisson error of `coincidences`.
/// Points whose pipeline failed carry a message in `errors` and NaN values.
struct SweepResult {
    std::vector<double> x;
    std::vector<double> coincidences;
    std::vector<double> g2;
    std::vector<double> snr;
    std::vector<double> sigma;
    std::vector<std::string> errors;

    size_t size() const { return x.size(); }
};

/// Result of fitting counts(theta) = floor + amplitude * cos^2(2(theta-phase)).
struct QwpFit {
    double c_max = 0.0;  // floor + amplitude
    double c_min = 0.0;  // floor
    double phase = 0.0;  // radians, normalized to (-pi/4, pi/4]
    double sigma_c_max = 0.0;
    double sigma_c_min = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
};

/// Model record tying a visibility value to its ingredients.
struct VisibilityPoint {
    double v = 0.0;
    double c_corr = 0.0;
    double c_ac = 0.0;
    double d = 1.0;
};

/// One measured point of a visibility-versus-noise sweep: coincidences with
/// the analyzer open (theta = 0) and closed (theta = 45 deg), the resulting
/// contrast, and the signal detector's observed rate for the saturation
/// correction. The closed-analyzer floor estimates the accidentals.
struct VisibilityMeasurement {
    double noise_rate = 0.0;
    double c_max = 0.0;
    double c_min = 0.0;
    double c_ac = 0.0;
    double v = 0.0;
    double sigma_v = 0.0;
    double observed_signal_rate = 0.0;
    double d = 1.0;
};

struct VisibilityFit {
    double c_corr = 0.0;
    double sigma_c_corr = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
};

/// Analytic expectation of every rate in the loss chain, with and without
/// detector dead time. Useful for choosing operating points and as a sanity
/// reference next to simulated rates.
struct RatePrediction {
    double signal_pair_rate = 0.0;        // pair clicks/s at the signal APD, no dead time
    double signal_noise_rate = 0.0;       // noise clicks/s at the signal APD, no dead time
    double reference_rate = 0.0;          // clicks/s at the reference APD, no dead time
    double signal_observed_rate = 0.0;    // with dead time
    double reference_observed_rate = 0.0; // with dead time
    double coincidence_rate = 0.0;        // true-pair coincidences/s, no dead time
    double observed_coincidence_rate = 0.0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Seed for sweep point `index`, decorrelated from neighbours but fully
/// determined by the base seed.
uint64_t mix_seed(uint64_t seed, uint64_t index);

/// Assigns a seed to both the experiment and its source model.
void set_seed(ExperimentConfig& config, uint64_t seed);

/// Finds the arm delay with a short noise-free, analyzer-open acquisition and
/// returns the lag (ticks, bin lower edge) to gate coincidences on.
int64_t calibrate_gate_lag(const ExperimentConfig& config);

/// Runs the pipeline once per noise level under the given arrangement.
/// Point seeds derive from the base seed via mix_seed, so a TPC and a TC
/// sweep over the same base are matched point by point.
SweepResult sweep_noise(const ExperimentConfig& base, std::span<const double> noise_levels, Arrangement arrangement);

/// Runs the pipeline once per QWP angle (radians). Angles must span at least
/// one half-period (pi/4).
SweepResult sweep_qwp(const ExperimentConfig& base, std::span<const double> angles);

/// Weighted least squares of floor + amplitude * cos^2(2(theta - phase)) over
/// a QWP sweep, seeded by an exact linear fit on the (1, cos 4theta,
/// sin 4theta) basis and polished with damped (Levenberg-Marquardt)
/// iterations. Degenerate systems come back with converged = false. Throws
/// FitError when fewer than 4 points or less than a half-period is supplied.
QwpFit fit_sinusoid(const SweepResult& sweep);

/// Visibility (C_max - C_min) / (C_max + C_min). Requires C_max >= C_min >= 0
/// and C_max > 0.
double visibility(double c_max, double c_min);

/// sqrt(N) error propagation through the visibility ratio.
double sigma_visibility(double c_max, double c_min);

/// Visibility predicted from correlated counts, accidentals, and the detector
/// correction: C_corr / (C_corr + 2 C_ac d). Computed as
/// visibility(C_corr + C_ac d, C_ac d), which it equals identically.
double visibility_model(double c_corr, double c_ac, double d);

VisibilityPoint make_visibility_point(double c_corr, double c_ac, double d);

/// Measures (C_max, C_min, V, AV) for each noise level with matched per-point
/// seeds for the two analyzer settings.
std::vector<VisibilityMeasurement> visibility_sweep(const ExperimentConfig& base, std::span<const double> noise_levels);

/// Fits C_corr in V = C_corr / (C_corr + 2 C_ac d) over measured points,
/// computing d per point from the observed signal rate and the detector dead
/// time. `use_correction = false` forces d = 1 (to expose the saturation
/// bias). Throws FitError for fewer than 3 points.
VisibilityFit fit_visibility_curve(std::span<const VisibilityMeasurement> points,
                                   double c_corr_guess,
                                   const DetectorModel& signal_detector,
                                   bool use_correction = true);

/// The TC arrangement with the source brightened so that the detected
/// coincidence rate matches the TPC configuration, mirroring the procedure of
/// raising the source intensity in the time-only scheme.
ExperimentConfig matched_tc_config(const ExperimentConfig& base);

RatePrediction predict_rates(const ExperimentConfig& config);

/// Ordinary least-squares line fit.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace qits

#endif
