// Copyright 2026 The wgarray Authors
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

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "wgarray/errors.hpp"
#include "wgarray/evolution.hpp"

namespace wgarray {

enum class Photons { kIndistinguishable, kDistinguishable };

/**
 * Probability of one photon in each of outputs (m, n) given one photon in
 * each of inputs (j, k).
 *
 * Indistinguishable photons interfere through the 2x2 permanent
 * U_mj U_nk + U_mk U_nj; distinguishable photons add classically.
 */
inline double two_photon_coincidence(const Eigen::MatrixXcd& u, std::pair<Guide, Guide> inputs,
                                     std::pair<Guide, Guide> outputs, Photons photons = Photons::kIndistinguishable) {
    const int size = static_cast<int>(u.rows());
    for (Guide g : {inputs.first, inputs.second, outputs.first, outputs.second}) check_guide(g, size);
    if (inputs.first.number == inputs.second.number) throw ValidationError("two-photon inputs must differ");
    if (outputs.first.number == outputs.second.number) throw ValidationError("two-photon outputs must differ");
    const int j = inputs.first.number - 1;
    const int k = inputs.second.number - 1;
    const int m = outputs.first.number - 1;
    const int n = outputs.second.number - 1;
    const Complex direct = u(m, j) * u(n, k);
    const Complex exchange = u(m, k) * u(n, j);
    if (photons == Photons::kIndistinguishable) return std::norm(direct + exchange);
    return std::norm(direct) + std::norm(exchange);
}

inline double two_photon_coincidence(const TransferUnitary& u, std::pair<Guide, Guide> inputs,
                                     std::pair<Guide, Guide> outputs, Photons photons = Photons::kIndistinguishable) {
    return two_photon_coincidence(u.matrix, inputs, outputs, photons);
}

inline void check_reflectivity(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("reflectivity must lie in [0, 1]");
}

/// Dip visibility of a lossless coupler with reflectivity eta.
inline double ideal_visibility(double eta) {
    check_reflectivity(eta);
    return 2.0 * eta * (1.0 - eta) / (1.0 - 2.0 * eta + 2.0 * eta * eta);
}

/// eta from the four port-to-port powers, P_mn = power out of WG_n with
/// light into WG_m. Independent of per-input normalization.
inline double reflectivity_from_powers(double p11, double p12, double p21, double p22) {
    for (double p : {p11, p12, p21, p22}) {
        if (!(p >= 0.0)) throw ValidationError("powers must be non-negative");
    }
    const double cross = p12 * p21;
    if (!(cross > 0.0)) throw ValidationError("degenerate splitting: P12*P21 = 0, reflectivity indeterminate");
    const double r = std::sqrt(p11 * p22 / cross);
    return r / (1.0 + r);
}

// ---------------------------------------------------------------------------
// HOM delay scans.

struct HomScan {
    std::vector<double> delays;  // mm of path delay
    std::vector<double> counts;
    double integration_seconds = 60.0;
};

inline void validate(const HomScan& scan) {
    if (scan.delays.size() != scan.counts.size()) throw ValidationError("scan delays and counts differ in length");
    for (std::size_t i = 1; i < scan.delays.size(); ++i) {
        if (!(scan.delays[i] > scan.delays[i - 1])) throw ValidationError("scan delays must be strictly increasing");
    }
    for (double c : scan.counts) {
        if (!(c >= 0.0)) throw ValidationError("scan counts must be non-negative");
    }
}

/// Coherence length lambda^2 / d_lambda of an 807.5 nm photon behind a
/// 3.1 nm filter, converted to a Gaussian sigma.
inline double default_coherence_width_mm() {
    constexpr double lambda_nm = 807.5;
    constexpr double bandwidth_nm = 3.1;
    const double coherence_mm = lambda_nm * lambda_nm / bandwidth_nm * 1e-6;
    return coherence_mm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

struct HomScanModel {
    double eta = 0.5;
    double baseline_rate = 1000.0;  // counts per window far from the dip
    double slope = 0.0;             // counts per window per mm
    double dip_center = 0.0;        // mm
    double coherence_width = default_coherence_width_mm();
    double visibility_factor = 1.0;  // spectral/polarization overlap, scales the dip depth
    double integration_seconds = 60.0;
};

/// R(x) = (a0 x + a1)(1 - a2 exp(-(x - a3)^2 / (2 a4^2)))
inline double dip_model(const std::array<double, 5>& a, double x) {
    const double d = x - a[3];
    return (a[0] * x + a[1]) * (1.0 - a[2] * std::exp(-d * d / (2.0 * a[4] * a[4])));
}

/// Noiseless when `noise_seed` is empty, otherwise Poisson counts drawn from
/// a generator seeded with it.
inline HomScan simulate_hom_scan(const HomScanModel& model, const std::vector<double>& delays,
                                 std::optional<std::uint64_t> noise_seed = std::nullopt) {
    if (!(model.coherence_width > 0)) throw ValidationError("coherence width must be positive");
    if (!(model.baseline_rate > 0)) throw ValidationError("baseline rate must be positive");
    if (!(model.visibility_factor >= 0.0 && model.visibility_factor <= 1.0)) {
        throw ValidationError("visibility factor must lie in [0, 1]");
    }
    const double vis = model.visibility_factor * ideal_visibility(model.eta);
    const std::array<double, 5> a{model.slope, model.baseline_rate, vis, model.dip_center, model.coherence_width};

    HomScan scan;
    scan.delays = delays;
    scan.integration_seconds = model.integration_seconds;
    scan.counts.reserve(delays.size());
    std::mt19937_64 rng(noise_seed.value_or(0));
    for (double x : delays) {
        const double mean = std::max(0.0, dip_model(a, x));
        if (!noise_seed) {
            scan.counts.push_back(mean);
        } else {
            scan.counts.push_back(mean > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng))
                                             : 0.0);
        }
    }
    validate(scan);
    return scan;
}

struct DipFit {
    // slope, intercept, visibility, center (mm), Gaussian width (mm)
    std::array<double, 5> a{};
    double visibility = 0.0;
    double visibility_error = 0.0;
    double residual = 0.0;  // sum of squared residuals
    int iterations = 0;

    double operator()(double x) const { return dip_model(a, x); }
};

class FitError : public NumericalError {
   public:
    FitError(const std::string& what, double residual) : NumericalError(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

   private:
    double residual_;
};

inline double fwhm_from_sigma(double sigma) { return 2.0 * std::sqrt(2.0 * std::numbers::ln2) * sigma; }

struct DipExtrema {
    double n_max;
    double n_min;
};

/// N_max from the fitted curve half a FWHM either side of the center;
/// N_min straight from the raw counts.
inline DipExtrema dip_extrema(const DipFit& fit, const HomScan& scan) {
    if (scan.counts.empty()) throw ValidationError("empty scan");
    const double half = fwhm_from_sigma(fit.a[4]) / 2.0;
    const double n_max = 0.5 * (fit(fit.a[3] - half) + fit(fit.a[3] + half));
    const double n_min = *std::min_element(scan.counts.begin(), scan.counts.end());
    return {n_max, n_min};
}

/// Poissonian error on the dip visibility. Returns the continuous limit 0
/// when n_min = 0.
inline double visibility_error(double n_max, double n_min) {
    if (!(n_max > 0.0)) throw ValidationError("N_max must be positive");
    if (n_min < 0.0) throw ValidationError("N_min must be non-negative");
    if (n_min == 0.0) return 0.0;
    return n_min / n_max * std::sqrt(1.0 / n_max + 1.0 / n_min);
}

namespace detail {

struct FitInit {
    std::array<double, 5> a;
};

inline FitInit initial_dip_guess(const HomScan& scan) {
    const auto n = scan.delays.size();
    const std::size_t edge = std::max<std::size_t>(1, n / 10);
    auto mean_of = [&](const std::vector<double>& v, std::size_t from, std::size_t to) {
        double s = 0.0;
        for (std::size_t i = from; i < to; ++i) s += v[i];
        return s / static_cast<double>(to - from);
    };
    const double x_lo = mean_of(scan.delays, 0, edge);
    const double y_lo = mean_of(scan.counts, 0, edge);
    const double x_hi = mean_of(scan.delays, n - edge, n);
    const double y_hi = mean_of(scan.counts, n - edge, n);
    const double slope = (y_hi - y_lo) / (x_hi - x_lo);
    const double intercept = 0.5 * (y_lo + y_hi) - slope * 0.5 * (x_lo + x_hi);

    const auto imin = static_cast<std::size_t>(
        std::min_element(scan.counts.begin(), scan.counts.end()) - scan.counts.begin());
    const double center = scan.delays[imin];
    const double base_at_center = slope * center + intercept;
    const double depth = base_at_center > 0 ? 1.0 - scan.counts[imin] / base_at_center : 0.0;

    // Half the width of the region below the half-depth level.
    const double half_level = 0.5 * (scan.counts[imin] + base_at_center);
    std::size_t left = imin;
    while (left > 0 && scan.counts[left - 1] < half_level) --left;
    std::size_t right = imin;
    while (right + 1 < n && scan.counts[right + 1] < half_level) ++right;
    double width = 0.5 * (scan.delays[std::min(right + 1, n - 1)] - scan.delays[left > 0 ? left - 1 : 0]);
    const double span = scan.delays.back() - scan.delays.front();
    if (!(width > 0.0) || width > span) width = span / 10.0;

    return {{slope, intercept, std::clamp(depth, 0.0, 1.0), center, width}};
}

}  // namespace detail

/**
 * Damped Gauss-Newton (Levenberg-Marquardt) fit of the Gaussian dip with a
 * linear baseline.
 *
 * The width is optimized in log space so it stays positive; the visibility
 * is projected onto [0, 1] after every step.
 */
inline DipFit fit_hom_dip(const HomScan& scan, int max_iterations = 2000) {
    validate(scan);
    const auto n = static_cast<Eigen::Index>(scan.delays.size());
    if (n < 8) throw ValidationError("HOM fit needs at least 8 scan points");

    // p = (a0, a1, a2, a3, log a4)
    auto to_a = [](const Eigen::Matrix<double, 5, 1>& p) {
        return std::array<double, 5>{p(0), p(1), p(2), p(3), std::exp(p(4))};
    };
    auto residuals = [&](const Eigen::Matrix<double, 5, 1>& p, Eigen::VectorXd& r) {
        const auto a = to_a(p);
        for (Eigen::Index i = 0; i < n; ++i) r(i) = dip_model(a, scan.delays[i]) - scan.counts[i];
        return r.squaredNorm();
    };
    auto jacobian = [&](const Eigen::Matrix<double, 5, 1>& p, Eigen::Matrix<double, Eigen::Dynamic, 5>& jac) {
        const auto a = to_a(p);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = scan.delays[i];
            const double d = x - a[3];
            const double g = std::exp(-d * d / (2.0 * a[4] * a[4]));
            const double line = a[0] * x + a[1];
            const double dip = 1.0 - a[2] * g;
            jac(i, 0) = x * dip;
            jac(i, 1) = dip;
            jac(i, 2) = -line * g;
            jac(i, 3) = -line * a[2] * g * d / (a[4] * a[4]);
            jac(i, 4) = -line * a[2] * g * d * d / (a[4] * a[4]);  // d/d(log a4)
        }
    };

    const auto init = detail::initial_dip_guess(scan);
    Eigen::Matrix<double, 5, 1> p;
    p << init.a[0], init.a[1], init.a[2], init.a[3], std::log(init.a[4]);

    Eigen::VectorXd r(n), r_trial(n);
    Eigen::Matrix<double, Eigen::Dynamic, 5> jac(n, 5);
    double cost = residuals(p, r);
    const double scale = std::max(1.0, Eigen::Map<const Eigen::VectorXd>(scan.counts.data(), n).squaredNorm());
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;
    for (; iter < max_iterations && !converged; ++iter) {
        jacobian(p, jac);
        const Eigen::Matrix<double, 5, 5> jtj = jac.transpose() * jac;
        const Eigen::Matrix<double, 5, 1> grad = jac.transpose() * r;
        Eigen::Matrix<double, 5, 1> damping = jtj.diagonal();
        const double floor = 1e-12 * std::max(1.0, damping.maxCoeff());
        damping = damping.cwiseMax(floor);

        bool accepted = false;
        while (!accepted) {
            Eigen::Matrix<double, 5, 5> a = jtj;
            a.diagonal() += lambda * damping;
            Eigen::Matrix<double, 5, 1> trial = p - a.ldlt().solve(grad);
            trial(2) = std::clamp(trial(2), 0.0, 1.0);
            if (!trial.allFinite()) {
                lambda *= 10.0;
            } else {
                const double trial_cost = residuals(trial, r_trial);
                if (trial_cost <= cost) {
                    const double step = (trial - p).cwiseAbs().maxCoeff();
                    const double drop = cost - trial_cost;
                    p = trial;
                    r.swap(r_trial);
                    cost = trial_cost;
                    lambda = std::max(lambda / 10.0, 1e-15);
                    accepted = true;
                    const double pscale = std::max(1.0, p.cwiseAbs().maxCoeff());
                    if (cost <= 1e-28 * scale || (drop <= 1e-15 * cost && step <= 1e-10 * pscale)) {
                        converged = true;
                    }
                } else {
                    lambda *= 10.0;
                }
            }
            if (lambda > 1e20) {
                // No downhill direction left: stationary point.
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        throw FitError("HOM dip fit did not converge after " + std::to_string(max_iterations) +
                           " iterations (residual " + std::to_string(cost) + ")",
                       cost);
    }

    DipFit fit;
    fit.a = to_a(p);
    fit.visibility = fit.a[2];
    fit.residual = cost;
    fit.iterations = iter;
    const auto ext = dip_extrema(fit, scan);
    fit.visibility_error = ext.n_max > 0.0 ? visibility_error(ext.n_max, ext.n_min) : 0.0;
    return fit;
}

}  // namespace wgarray
