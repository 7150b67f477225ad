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
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "wgarray/device_model.hpp"
#include "wgarray/errors.hpp"
#include "wgarray/evolution.hpp"
#include "wgarray/subcircuits.hpp"

namespace wgarray {

/// Which electrodes the optimizer may drive and which two subcircuits it
/// programs.
struct ElectrodeConfig {
    std::string name;
    std::vector<int> active_electrodes;  // 1-based, ascending
    std::array<SubcircuitPair, 2> pairs;
};

inline void validate(const ElectrodeConfig& config, const DeviceSpec& spec) {
    for (auto e : config.active_electrodes) {
        if (e < 1 || e > spec.n_electrodes) {
            throw ValidationError(config.name + ": electrode " + std::to_string(e) + " out of range");
        }
    }
    for (auto p : config.pairs) check_pair(p, spec.n_guides);
    if (config.pairs[0].overlaps(config.pairs[1])) throw ValidationError(config.name + ": subcircuits overlap");
}

/// config1: electrodes 1-8 on adjacent pairs (1,2), (3,4).
/// config2: electrodes 1-4 and 15-18 on pairs (1,2), (8,9).
/// config3: every electrode on pairs (1,2), (8,9).
inline ElectrodeConfig electrode_config(int which, const DeviceSpec& spec) {
    ElectrodeConfig c;
    switch (which) {
        case 1:
            c = {"config1", {1, 2, 3, 4, 5, 6, 7, 8}, {SubcircuitPair{1}, SubcircuitPair{3}}};
            break;
        case 2:
            c = {"config2", {1, 2, 3, 4, 15, 16, 17, 18}, {SubcircuitPair{1}, SubcircuitPair{8}}};
            break;
        case 3:
            c = {"config3", {}, {SubcircuitPair{1}, SubcircuitPair{8}}};
            for (int e = 1; e <= spec.n_electrodes; ++e) c.active_electrodes.push_back(e);
            break;
        default:
            throw ValidationError("unknown electrode configuration " + std::to_string(which));
    }
    validate(c, spec);
    return c;
}

inline ElectrodeConfig electrode_config(const std::string& name, const DeviceSpec& spec) {
    if (name == "1" || name == "config1") return electrode_config(1, spec);
    if (name == "2" || name == "config2") return electrode_config(2, spec);
    if (name == "3" || name == "config3") return electrode_config(3, spec);
    throw ValidationError("unknown electrode configuration '" + name + "'");
}

using GateTargets = std::array<TwoModeUnitary, 2>;

/// Per-subcircuit figures of merit. Crosstalk and leakage are fractions
/// summed over the subcircuit's two inputs.
struct ObjectiveTerms {
    std::array<double, 2> fidelity{};
    std::array<double, 2> crosstalk{};
    std::array<double, 2> leakage{};
    double value = 0.0;
};

/// The six-term sum over fidelity, crosstalk and leakage.
inline double objective_value(const ObjectiveTerms& t) {
    double value = 0.0;
    for (int s = 0; s < 2; ++s) {
        value += (1.0 - t.fidelity[s]) * (1.0 - t.fidelity[s]) + t.crosstalk[s] * t.crosstalk[s] +
                 t.leakage[s] * t.leakage[s];
    }
    return value;
}

/// (1-F1)^2 + (1-F2)^2 + ct1^2 + ct2^2 + leak1^2 + leak2^2 for a full
/// electrode vector. No bound check; see `objective`.
inline ObjectiveTerms evaluate_objective(const DeviceSpec& spec, const Eigen::VectorXd& volts,
                                         const ElectrodeConfig& config, const GateTargets& targets) {
    const Propagator prop(build_hamiltonian_unchecked(spec, volts));
    const Eigen::MatrixXcd u = prop.unitary(spec.coupling_length).matrix;
    ObjectiveTerms t;
    for (int s = 0; s < 2; ++s) {
        const auto own = config.pairs[s];
        const auto other = config.pairs[1 - s];
        const Eigen::Matrix2d target = targets[s].matrix.cwiseAbs2();
        double fid = 0.0;
        for (int in = 0; in < 2; ++in) {
            const Eigen::VectorXd p = u.col(own.k - 1 + in).cwiseAbs2();
            const double p1 = p(own.k - 1);
            const double p2 = p(own.k);
            const double kept = p1 + p2;
            if (kept > 0.0) fid += std::sqrt(target(0, in) * p1 / kept) + std::sqrt(target(1, in) * p2 / kept);
            t.crosstalk[s] += p(other.k - 1) + p(other.k);
            double lost = 0.0;
            for (Eigen::Index g = 0; g < p.size(); ++g) {
                if (!own.contains(static_cast<int>(g) + 1)) lost += p(g);
            }
            t.leakage[s] += lost;
        }
        t.fidelity[s] = fid / 2.0;
    }
    t.value = objective_value(t);
    return t;
}

/// Zero every electrode the configuration does not drive.
inline Eigen::VectorXd mask_inactive(const Eigen::VectorXd& volts, const ElectrodeConfig& config) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(volts.size());
    for (int e : config.active_electrodes) out(e - 1) = volts(e - 1);
    return out;
}

inline ObjectiveTerms objective(const DeviceSpec& spec, const VoltageConfig& v, const ElectrodeConfig& config,
                                const GateTargets& targets) {
    validate(config, spec);
    const VoltageConfig masked{mask_inactive(v.volts, config)};
    build_hamiltonian(spec, masked);  // bound and length check
    return evaluate_objective(spec, masked.volts, config, targets);
}

struct OptimizerOptions {
    double fd_step = 1e-4;        // V, central differences
    double step_tolerance = 1e-6;  // V
    int max_iterations = 500;
};

struct LocalMinimum {
    Eigen::VectorXd x;
    double value;
    int iterations;
};

/**
 * Projected quasi-Newton (BFGS on the free variables) inside the box
 * [-bound, bound]^n, with finite-difference gradients and a projected
 * Armijo backtracking search.
 */
inline LocalMinimum minimize_in_box(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                    double bound, const OptimizerOptions& opts = {}) {
    const auto n = x.size();
    auto project = [bound](Eigen::VectorXd v) { return v.cwiseMax(-bound).cwiseMin(bound); };
    auto gradient = [&](const Eigen::VectorXd& at, double f_at) {
        Eigen::VectorXd g(n);
        Eigen::VectorXd probe = at;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h = opts.fd_step;
            const double xi = at(i);
            if (xi + h > bound) {
                probe(i) = xi - h;
                g(i) = (f_at - f(probe)) / h;
            } else if (xi - h < -bound) {
                probe(i) = xi + h;
                g(i) = (f(probe) - f_at) / h;
            } else {
                probe(i) = xi + h;
                const double up = f(probe);
                probe(i) = xi - h;
                g(i) = (up - f(probe)) / (2.0 * h);
            }
            probe(i) = xi;
        }
        return g;
    };

    x = project(std::move(x));
    double fx = f(x);
    Eigen::VectorXd g = gradient(x, fx);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        Eigen::VectorXd g_free = g;
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((x(i) <= -bound && g(i) > 0) || (x(i) >= bound && g(i) < 0)) g_free(i) = 0.0;
        }
        if (g_free.lpNorm<Eigen::Infinity>() < 1e-14) break;

        Eigen::VectorXd d = -(hinv * g_free);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (g_free(i) == 0.0 && g(i) != 0.0) d(i) = 0.0;
        }
        if (!(d.dot(g_free) < 0.0)) {
            hinv.setIdentity();
            scaled = false;
            d = -g_free;
        }
        // Never try to cross more than the whole box in one step.
        const double longest = d.lpNorm<Eigen::Infinity>();
        if (longest > 2.0 * bound) d *= 2.0 * bound / longest;

        double t = 1.0;
        Eigen::VectorXd xn;
        double fn = fx;
        bool accepted = false;
        while (t > 1e-12) {
            xn = project(x + t * d);
            fn = f(xn);
            if (fn <= fx + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = xn - x;
        x = xn;
        fx = fn;
        if (s.norm() < opts.step_tolerance) break;

        const Eigen::VectorXd gn = gradient(x, fx);
        const Eigen::VectorXd y = gn - g;
        g = gn;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                hinv *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
        }
    }
    return {x, fx, it};
}

struct CompileResult {
    VoltageConfig best_voltages;
    double coupling_length = 0.0;
    ObjectiveTerms terms;
    std::vector<double> restart_trace;  // final objective of each restart

    double objective() const { return terms.value; }

    std::vector<double> best_so_far() const {
        std::vector<double> out(restart_trace.size());
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < restart_trace.size(); ++i) out[i] = best = std::min(best, restart_trace[i]);
        return out;
    }
};

/**
 * Multi-start local optimization of the active electrode voltages.
 *
 * Restart r starts from a point drawn uniformly from [-limit, limit] for
 * each active electrode, consuming the seeded generator in restart order.
 * The winner is the lowest objective, earliest restart on ties.
 */
inline CompileResult optimize_parallel_gates(const DeviceSpec& spec, const ElectrodeConfig& config,
                                             const GateTargets& targets, int restarts = 100, std::uint64_t seed = 0,
                                             const OptimizerOptions& opts = {}) {
    validate(spec);
    validate(config, spec);
    if (restarts < 1) throw ValidationError("restarts must be >= 1");
    const auto n_active = static_cast<Eigen::Index>(config.active_electrodes.size());
    const double bound = spec.voltage_limit;

    auto expand = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd volts = Eigen::VectorXd::Zero(spec.n_electrodes);
        for (Eigen::Index i = 0; i < n_active; ++i) volts(config.active_electrodes[i] - 1) = x(i);
        return volts;
    };
    const auto f = [&](const Eigen::VectorXd& x) { return evaluate_objective(spec, expand(x), config, targets).value; };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> draw(-bound, bound);
    CompileResult result;
    result.coupling_length = spec.coupling_length;
    result.restart_trace.reserve(restarts);
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = Eigen::VectorXd::Zero(n_active);
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd x0(n_active);
        for (Eigen::Index i = 0; i < n_active; ++i) x0(i) = draw(rng);
        auto local = n_active > 0 ? minimize_in_box(f, x0, bound, opts) : LocalMinimum{x0, f(x0), 0};
        result.restart_trace.push_back(local.value);
        if (local.value < best) {
            best = local.value;
            best_x = local.x;
        }
    }
    result.best_voltages = VoltageConfig{expand(best_x)};
    result.terms = evaluate_objective(spec, result.best_voltages.volts, config, targets);
    return result;
}

struct LengthSweepEntry {
    double length;
    CompileResult result;
};

inline std::vector<LengthSweepEntry> sweep_chip_length(const DeviceSpec& spec, const ElectrodeConfig& config,
                                                       const GateTargets& targets, const std::vector<double>& lengths,
                                                       int restarts, std::uint64_t seed,
                                                       const OptimizerOptions& opts = {}) {
    std::vector<LengthSweepEntry> out;
    out.reserve(lengths.size());
    for (double length : lengths) {
        if (!(length > 0)) throw ValidationError("chip lengths must be positive");
        DeviceSpec copy = spec;
        copy.coupling_length = length;
        out.push_back({length, optimize_parallel_gates(copy, config, targets, restarts, seed, opts)});
    }
    return out;
}

/// A static device with a fixed random Hamiltonian: beta_n ~ U[3.0, 3.2],
/// C ~ U[0.05, 0.15] rad/mm, default electrode pattern.
inline DeviceSpec random_static_device(std::uint64_t seed, int n_guides = 11, int n_electrodes = 22,
                                       double coupling_length = 24.0) {
    DeviceSpec spec = default_device(n_guides, n_electrodes, coupling_length);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> beta(3.0, 3.2);
    std::uniform_real_distribution<double> coupling(0.05, 0.15);
    for (Eigen::Index i = 0; i < spec.base_beta.size(); ++i) spec.base_beta(i) = beta(rng);
    for (Eigen::Index i = 0; i < spec.base_coupling.size(); ++i) spec.base_coupling(i) = coupling(rng);
    return spec;
}

}  // namespace wgarray
