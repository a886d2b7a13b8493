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

#include "qits/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "qits/errors.hpp"

namespace qits {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Small dense linear algebra + damped least squares.

bool solve_linear(std::vector<double> a, std::vector<double> b, size_t n, std::vector<double>& x) {
    for (size_t col = 0; col < n; col++) {
        size_t pivot = col;
        for (size_t row = col + 1; row < n; row++) {
            if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) {
                pivot = row;
            }
        }
        if (std::abs(a[pivot * n + col]) < 1e-300) {
            return false;
        }
        if (pivot != col) {
            for (size_t k = 0; k < n; k++) {
                std::swap(a[col * n + k], a[pivot * n + k]);
            }
            std::swap(b[col], b[pivot]);
        }
        for (size_t row = col + 1; row < n; row++) {
            double f = a[row * n + col] / a[col * n + col];
            for (size_t k = col; k < n; k++) {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (size_t row = n; row-- > 0;) {
        double s = b[row];
        for (size_t k = row + 1; k < n; k++) {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / (a[row * n + row]);
    }
    return true;
}

bool invert_matrix(const std::vector<double>& a, size_t n, std::vector<double>& inv) {
    inv.assign(n * n, 0.0);
    for (size_t col = 0; col < n; col++) {
        std::vector<double> e(n, 0.0);
        e[col] = 1.0;
        std::vector<double> x;
        if (!solve_linear(a, e, n, x)) {
            return false;
        }
        for (size_t row = 0; row < n; row++) {
            inv[row * n + col] = x[row];
        }
    }
    return true;
}

struct LmOutcome {
    std::vector<double> params;
    std::vector<double> covariance;  // n x n, row-major
    double residual_norm = 0.0;
    bool converged = false;
};

/// Levenberg-Marquardt over weighted residuals. `residuals` fills m values;
/// `jacobian` fills the m x n row-major matrix of their derivatives.
LmOutcome lm_fit(std::vector<double> p,
                 size_t m,
                 const std::function<void(const std::vector<double>&, std::vector<double>&)>& residuals,
                 const std::function<void(const std::vector<double>&, std::vector<double>&)>& jacobian,
                 int max_iter = 200) {
    size_t n = p.size();
    std::vector<double> r(m), r_try(m), jac(m * n), a(n * n), g(n), step, p_try(n);

    auto cost_of = [&](const std::vector<double>& res) {
        double c = 0.0;
        for (double v : res) {
            c += v * v;
        }
        return c;
    };

    residuals(p, r);
    double cost = cost_of(r);
    double lambda = 1e-3;
    bool converged = false;

    for (int iter = 0; iter < max_iter && !converged; iter++) {
        jacobian(p, jac);
        std::fill(a.begin(), a.end(), 0.0);
        std::fill(g.begin(), g.end(), 0.0);
        for (size_t i = 0; i < m; i++) {
            for (size_t j = 0; j < n; j++) {
                g[j] += jac[i * n + j] * r[i];
                for (size_t k = j; k < n; k++) {
                    a[j * n + k] += jac[i * n + j] * jac[i * n + k];
                }
            }
        }
        for (size_t j = 0; j < n; j++) {
            for (size_t k = 0; k < j; k++) {
                a[j * n + k] = a[k * n + j];
            }
        }
        double gmax = 0.0;
        for (double v : g) {
            gmax = std::max(gmax, std::abs(v));
        }
        if (gmax < 1e-13 * (1.0 + cost)) {
            converged = true;
            break;
        }

        bool accepted = false;
        for (int tries = 0; tries < 60; tries++) {
            std::vector<double> damped = a;
            for (size_t j = 0; j < n; j++) {
                damped[j * n + j] += lambda * std::max(a[j * n + j], 1e-30);
            }
            std::vector<double> rhs(n);
            for (size_t j = 0; j < n; j++) {
                rhs[j] = -g[j];
            }
            if (!solve_linear(damped, rhs, n, step)) {
                lambda *= 10.0;
                continue;
            }
            for (size_t j = 0; j < n; j++) {
                p_try[j] = p[j] + step[j];
            }
            residuals(p_try, r_try);
            double cost_try = cost_of(r_try);
            if (std::isfinite(cost_try) && cost_try <= cost) {
                double rel_step = 0.0;
                for (size_t j = 0; j < n; j++) {
                    rel_step = std::max(rel_step, std::abs(step[j]) / (1.0 + std::abs(p[j])));
                }
                bool tiny_gain = (cost - cost_try) <= 1e-14 * (cost + 1e-300);
                p = p_try;
                r = r_try;
                cost = cost_try;
                lambda = std::max(lambda / 3.0, 1e-14);
                accepted = true;
                if (rel_step < 1e-12 || tiny_gain) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e14) {
                break;
            }
        }
        if (!accepted) {
            break;
        }
    }

    LmOutcome out;
    out.params = p;
    out.residual_norm = std::sqrt(cost);
    out.converged = converged;

    jacobian(p, jac);
    std::fill(a.begin(), a.end(), 0.0);
    for (size_t i = 0; i < m; i++) {
        for (size_t j = 0; j < n; j++) {
            for (size_t k = 0; k < n; k++) {
                a[j * n + k] += jac[i * n + j] * jac[i * n + k];
            }
        }
    }
    if (!invert_matrix(a, n, out.covariance)) {
        out.covariance.assign(n * n, 0.0);
        out.converged = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep plumbing.

void parallel_map(size_t count, const std::function<void(size_t)>& fn) {
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    workers = unsigned(std::min<size_t>(workers, count));
    if (workers <= 1) {
        for (size_t i = 0; i < count; i++) {
            fn(i);
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; w++) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

/// Gate-window g2: gated counts over the accidental expectation for the
/// whole window.
double gated_g2(const ExperimentResult& res, const ExperimentConfig& cfg) {
    const Correlogram& corr = res.corr;
    if (corr.singles_a == 0 || corr.singles_b == 0) {
        return kNaN;
    }
    double t = corr.duration_seconds();
    double expected_per_bin = (double(corr.singles_a) / t) * (double(corr.singles_b) / t) * corr.bin_width_seconds() * t;
    double window_bins = double(2 * cfg.gate_half_width_bins + 1);
    return double(res.gate_counts) / (expected_per_bin * window_bins);
}

struct PointOutcome {
    double coincidences = kNaN;
    double g2 = kNaN;
    double snr = kNaN;
    double sigma = kNaN;
};

PointOutcome measure_point(const ExperimentConfig& cfg, int64_t gate_lag) {
    ExperimentResult res = run_experiment(cfg, gate_lag);
    PointOutcome out;
    out.coincidences = double(res.gate_counts);
    out.sigma = std::sqrt(double(res.gate_counts));
    out.g2 = gated_g2(res, cfg);
    out.snr = std::isnan(out.g2) ? kNaN : out.g2 - 1.0;
    return out;
}

}  // namespace

uint64_t mix_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

void set_seed(ExperimentConfig& config, uint64_t seed) {
    config.seed = seed;
    config.source.seed = seed;
}

int64_t calibrate_gate_lag(const ExperimentConfig& config) {
    ExperimentConfig cal = config;
    cal.noise.noise_rate = 0.0;
    cal.channel.qwp_angle = 0.0;
    cal.duration = std::min(config.duration, 2.0);
    set_seed(cal, mix_seed(config.seed, 0xCA11B));
    SimulatedStreams streams = simulate_streams(cal);
    return scan_delay(streams.signal, streams.reference, cal.correlator);
}

SweepResult sweep_noise(const ExperimentConfig& base, std::span<const double> noise_levels, Arrangement arrangement) {
    if (noise_levels.size() < 2) {
        throw ConfigError("sweep", "noise sweep needs at least 2 levels");
    }
    ExperimentConfig proto = base;
    proto.channel.arrangement = arrangement;
    proto.validate();
    int64_t gate_lag = calibrate_gate_lag(proto);

    size_t n = noise_levels.size();
    SweepResult out;
    out.x.assign(noise_levels.begin(), noise_levels.end());
    out.coincidences.assign(n, kNaN);
    out.g2.assign(n, kNaN);
    out.snr.assign(n, kNaN);
    out.sigma.assign(n, kNaN);
    out.errors.assign(n, "");

    parallel_map(n, [&](size_t i) {
        try {
            ExperimentConfig cfg = proto;
            cfg.noise.noise_rate = noise_levels[i];
            set_seed(cfg, mix_seed(base.seed, i));
            PointOutcome point = measure_point(cfg, gate_lag);
            out.coincidences[i] = point.coincidences;
            out.g2[i] = point.g2;
            out.snr[i] = point.snr;
            out.sigma[i] = point.sigma;
        } catch (const std::exception& e) {
            out.errors[i] = e.what();
        }
    });
    return out;
}

SweepResult sweep_qwp(const ExperimentConfig& base, std::span<const double> angles) {
    if (angles.size() < 2) {
        throw ConfigError("sweep", "QWP sweep needs at least 2 angles");
    }
    auto [lo, hi] = std::minmax_element(angles.begin(), angles.end());
    if (*hi - *lo < std::numbers::pi / 4.0 - 1e-12) {
        throw ConfigError("sweep", "QWP angles must span at least a half-period (pi/4)");
    }
    ExperimentConfig proto = base;
    proto.validate();
    int64_t gate_lag = calibrate_gate_lag(proto);

    size_t n = angles.size();
    SweepResult out;
    out.x.assign(angles.begin(), angles.end());
    out.coincidences.assign(n, kNaN);
    out.g2.assign(n, kNaN);
    out.snr.assign(n, kNaN);
    out.sigma.assign(n, kNaN);
    out.errors.assign(n, "");

    parallel_map(n, [&](size_t i) {
        try {
            ExperimentConfig cfg = proto;
            cfg.channel.qwp_angle = angles[i];
            set_seed(cfg, mix_seed(base.seed, i));
            PointOutcome point = measure_point(cfg, gate_lag);
            out.coincidences[i] = point.coincidences;
            out.g2[i] = point.g2;
            out.snr[i] = point.snr;
            out.sigma[i] = point.sigma;
        } catch (const std::exception& e) {
            out.errors[i] = e.what();
        }
    });
    return out;
}

QwpFit fit_sinusoid(const SweepResult& sweep) {
    std::vector<double> theta, y, sigma;
    for (size_t i = 0; i < sweep.size(); i++) {
        if (std::isfinite(sweep.x[i]) && std::isfinite(sweep.coincidences[i])) {
            theta.push_back(sweep.x[i]);
            y.push_back(sweep.coincidences[i]);
            sigma.push_back(sweep.sigma[i] > 0.0 ? sweep.sigma[i] : 1.0);
        }
    }
    size_t m = theta.size();
    if (m < 4) {
        throw FitError("fit_sinusoid: need at least 4 valid points");
    }
    auto [lo, hi] = std::minmax_element(theta.begin(), theta.end());
    if (*hi - *lo < std::numbers::pi / 4.0 - 1e-12) {
        throw FitError("fit_sinusoid: angles must span at least a half-period (pi/4)");
    }

    // Exact weighted fit on the linear basis (1, cos 4theta, sin 4theta).
    std::vector<double> ata(9, 0.0), atb(3, 0.0);
    for (size_t i = 0; i < m; i++) {
        double w = 1.0 / (sigma[i] * sigma[i]);
        double basis[3] = {1.0, std::cos(4.0 * theta[i]), std::sin(4.0 * theta[i])};
        for (int j = 0; j < 3; j++) {
            atb[j] += w * basis[j] * y[i];
            for (int k = 0; k < 3; k++) {
                ata[j * 3 + k] += w * basis[j] * basis[k];
            }
        }
    }
    std::vector<double> coeff;
    if (!solve_linear(ata, atb, 3, coeff)) {
        throw FitError("fit_sinusoid: degenerate angle sampling");
    }
    double half_amp = std::hypot(coeff[1], coeff[2]);
    double floor0 = coeff[0] - half_amp;
    double amp0 = 2.0 * half_amp;
    double phase0 = std::atan2(coeff[2], coeff[1]) / 4.0;

    double scale = 1.0;
    for (double v : y) {
        scale = std::max(scale, std::abs(v));
    }

    QwpFit fit;
    if (amp0 <= 1e-12 * scale) {
        // Flat data: amplitude is consistent with zero and the phase is
        // undetermined; report the constant fit directly.
        std::vector<double> cov;
        fit.converged = invert_matrix(ata, 3, cov);
        fit.c_max = coeff[0];
        fit.c_min = coeff[0];
        fit.phase = 0.0;
        fit.sigma_c_max = fit.converged ? std::sqrt(std::max(cov[0], 0.0)) : 0.0;
        fit.sigma_c_min = fit.sigma_c_max;
        double rss = 0.0;
        for (size_t i = 0; i < m; i++) {
            double r = (coeff[0] - y[i]) / sigma[i];
            rss += r * r;
        }
        fit.residual_norm = std::sqrt(rss);
        return fit;
    }

    auto model = [&](const std::vector<double>& p, size_t i) {
        double c = std::cos(2.0 * (theta[i] - p[2]));
        return p[0] + p[1] * c * c;
    };
    auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        for (size_t i = 0; i < m; i++) {
            r[i] = (model(p, i) - y[i]) / sigma[i];
        }
    };
    auto jacobian = [&](const std::vector<double>& p, std::vector<double>& jac) {
        for (size_t i = 0; i < m; i++) {
            double c = std::cos(2.0 * (theta[i] - p[2]));
            jac[i * 3 + 0] = 1.0 / sigma[i];
            jac[i * 3 + 1] = c * c / sigma[i];
            jac[i * 3 + 2] = p[1] * 2.0 * std::sin(4.0 * (theta[i] - p[2])) / sigma[i];
        }
    };

    LmOutcome lm = lm_fit({floor0, amp0, phase0}, m, residuals, jacobian);
    double floor_fit = lm.params[0];
    double amp_fit = lm.params[1];
    double phase_fit = lm.params[2];
    if (amp_fit < 0.0) {
        floor_fit += amp_fit;
        amp_fit = -amp_fit;
        phase_fit += std::numbers::pi / 4.0;
    }
    // The pattern repeats every pi/2; report the phase in (-pi/4, pi/4].
    phase_fit = std::remainder(phase_fit, std::numbers::pi / 2.0);
    if (phase_fit <= -std::numbers::pi / 4.0) {
        phase_fit += std::numbers::pi / 2.0;
    }

    fit.c_max = floor_fit + amp_fit;
    fit.c_min = floor_fit;
    fit.phase = phase_fit;
    fit.residual_norm = lm.residual_norm;
    fit.converged = lm.converged;
    if (lm.covariance.size() == 9) {
        double var_cmin = lm.covariance[0];
        double var_cmax = lm.covariance[0] + lm.covariance[4] + 2.0 * lm.covariance[1];
        fit.sigma_c_min = std::sqrt(std::max(var_cmin, 0.0));
        fit.sigma_c_max = std::sqrt(std::max(var_cmax, 0.0));
    }
    return fit;
}

double visibility(double c_max, double c_min) {
    if (!std::isfinite(c_max) || !std::isfinite(c_min) || c_min < 0.0 || c_max < c_min) {
        throw std::domain_error("visibility: requires C_max >= C_min >= 0");
    }
    if (c_max == 0.0) {
        throw std::domain_error("visibility: undefined for C_max = 0");
    }
    return (c_max - c_min) / (c_max + c_min);
}

double sigma_visibility(double c_max, double c_min) {
    if (c_max <= 0.0 || c_min < 0.0) {
        throw std::domain_error("sigma_visibility: requires C_max > 0 and C_min >= 0");
    }
    double sum = c_max + c_min;
    // V = (M - m)/(M + m) with var(M) = M, var(m) = m.
    double dm = 2.0 * c_min / (sum * sum);
    double dn = 2.0 * c_max / (sum * sum);
    return std::sqrt(dm * dm * c_max + dn * dn * c_min);
}

double visibility_model(double c_corr, double c_ac, double d) {
    if (c_corr < 0.0 || c_ac < 0.0 || d < 0.0) {
        throw std::domain_error("visibility_model: arguments must be >= 0");
    }
    double floor = c_ac * d;
    return visibility(c_corr + floor, floor);
}

VisibilityPoint make_visibility_point(double c_corr, double c_ac, double d) {
    return {visibility_model(c_corr, c_ac, d), c_corr, c_ac, d};
}

std::vector<VisibilityMeasurement> visibility_sweep(const ExperimentConfig& base, std::span<const double> noise_levels) {
    if (base.channel.arrangement != Arrangement::tpc) {
        throw ConfigError("channel.arrangement", "visibility sweep requires the tpc arrangement");
    }
    ExperimentConfig proto = base;
    proto.validate();
    int64_t gate_lag = calibrate_gate_lag(proto);

    size_t n = noise_levels.size();
    std::vector<VisibilityMeasurement> points(n);
    parallel_map(n, [&](size_t i) {
        VisibilityMeasurement& pt = points[i];
        pt.noise_rate = noise_levels[i];
        pt.v = kNaN;
        try {
            uint64_t seed = mix_seed(base.seed, i);

            ExperimentConfig open = proto;
            open.noise.noise_rate = noise_levels[i];
            open.channel.qwp_angle = 0.0;
            set_seed(open, seed);
            ExperimentResult res_open = run_experiment(open, gate_lag);

            ExperimentConfig closed = open;
            closed.channel.qwp_angle = std::numbers::pi / 4.0;
            ExperimentResult res_closed = run_experiment(closed, gate_lag);

            pt.c_max = double(res_open.gate_counts);
            pt.c_min = double(res_closed.gate_counts);
            pt.c_ac = pt.c_min;
            pt.observed_signal_rate = res_open.signal_rate();
            pt.d = correction_factor(pt.observed_signal_rate, proto.signal_detector.dead_time);
            double sum = pt.c_max + pt.c_min;
            if (sum > 0.0) {
                pt.v = (pt.c_max - pt.c_min) / sum;
                pt.sigma_v = sigma_visibility(std::max(pt.c_max, 1.0), pt.c_min);
            }
        } catch (const std::exception&) {
            // Leave the point as NaN; downstream fits skip it.
        }
    });
    return points;
}

VisibilityFit fit_visibility_curve(std::span<const VisibilityMeasurement> points,
                                   double c_corr_guess,
                                   const DetectorModel& signal_detector,
                                   bool use_correction) {
    std::vector<double> c_ac, v, sigma, d;
    for (const VisibilityMeasurement& pt : points) {
        if (!std::isfinite(pt.v) || !std::isfinite(pt.c_ac)) {
            continue;
        }
        c_ac.push_back(pt.c_ac);
        v.push_back(pt.v);
        sigma.push_back(pt.sigma_v > 0.0 ? pt.sigma_v : 1e-6);
        d.push_back(use_correction ? correction_factor(pt.observed_signal_rate, signal_detector.dead_time) : 1.0);
    }
    size_t m = c_ac.size();
    if (m < 3) {
        throw FitError("fit_visibility_curve: need at least 3 valid points");
    }
    if (!(c_corr_guess > 0.0)) {
        throw FitError("fit_visibility_curve: initial C_corr must be > 0");
    }

    auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        for (size_t i = 0; i < m; i++) {
            double denom = p[0] + 2.0 * c_ac[i] * d[i];
            r[i] = (p[0] / denom - v[i]) / sigma[i];
        }
    };
    auto jacobian = [&](const std::vector<double>& p, std::vector<double>& jac) {
        for (size_t i = 0; i < m; i++) {
            double denom = p[0] + 2.0 * c_ac[i] * d[i];
            jac[i] = (2.0 * c_ac[i] * d[i]) / (denom * denom) / sigma[i];
        }
    };

    LmOutcome lm = lm_fit({c_corr_guess}, m, residuals, jacobian);
    VisibilityFit fit;
    fit.c_corr = lm.params[0];
    fit.sigma_c_corr = lm.covariance.size() == 1 ? std::sqrt(std::max(lm.covariance[0], 0.0)) : 0.0;
    fit.residual_norm = lm.residual_norm;
    fit.converged = lm.converged;
    return fit;
}

ExperimentConfig matched_tc_config(const ExperimentConfig& base) {
    ExperimentConfig tc = base;
    tc.channel.arrangement = Arrangement::tc;
    ChannelModel tpc_channel = base.channel;
    tpc_channel.arrangement = Arrangement::tpc;
    double p_tpc = pair_survival_probability(tpc_channel, base.source.signal_polarization);
    double p_tc = pair_survival_probability(tc.channel, base.source.signal_polarization);
    if (p_tc > 0.0 && p_tpc > 0.0) {
        tc.source.pair_rate = base.source.pair_rate * (p_tpc / p_tc);
    }
    return tc;
}

RatePrediction predict_rates(const ExperimentConfig& config) {
    config.validate();
    double p_pair = pair_survival_probability(config.channel, config.source.signal_polarization);
    double p_noise = noise_survival_probability(config.channel, config.noise.polarized);

    RatePrediction r;
    r.signal_pair_rate = config.source.pair_rate * p_pair * config.signal_detector.efficiency;
    r.signal_noise_rate = config.noise.noise_rate * p_noise * config.signal_detector.efficiency;
    r.reference_rate = config.source.pair_rate * config.reference_detector.efficiency;

    auto with_dead_time = [](double rate, double dead_time) { return rate / (1.0 + rate * dead_time); };
    double signal_total = r.signal_pair_rate + r.signal_noise_rate;
    r.signal_observed_rate = with_dead_time(signal_total, config.signal_detector.dead_time);
    r.reference_observed_rate = with_dead_time(r.reference_rate, config.reference_detector.dead_time);

    r.coincidence_rate = config.source.pair_rate * p_pair * config.signal_detector.efficiency *
                         config.reference_detector.efficiency;
    double duty_s = signal_total > 0.0 ? r.signal_observed_rate / signal_total : 1.0;
    double duty_r = r.reference_rate > 0.0 ? r.reference_observed_rate / r.reference_rate : 1.0;
    r.observed_coincidence_rate = r.coincidence_rate * duty_s * duty_r;
    return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw FitError("fit_line: need at least 2 points");
    }
    size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < n; i++) {
        sx += x[i];
        sy += y[i];
    }
    double mx = sx / double(n);
    double my = sy / double(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; i++) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw FitError("fit_line: all x values identical");
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r_squared = 1.0;
    } else {
        double ss_res = 0.0;
        for (size_t i = 0; i < n; i++) {
            double r = y[i] - (fit.intercept + fit.slope * x[i]);
            ss_res += r * r;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

}  // namespace qits
