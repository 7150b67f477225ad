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
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "wgarray/device_model.hpp"
#include "wgarray/errors.hpp"
#include "wgarray/evolution.hpp"
#include "wgarray/subcircuits.hpp"

namespace wgarray {

/// Reflectivity and leakage of one subcircuit over a grid of two electrode
/// voltages. Tables are indexed (i over grid_a, j over grid_b).
struct LookupMap {
    Electrode electrode_a{1};
    Electrode electrode_b{4};
    std::vector<double> grid_a;
    std::vector<double> grid_b;
    Eigen::MatrixXd eta;
    Eigen::MatrixXd leakage_in1;  // percent, light into the pair's first guide
    Eigen::MatrixXd leakage_in2;  // percent, light into the second guide
    SubcircuitPair pair{1};
    VoltageConfig fixed_voltages;
};

/// lo, lo+step, ..., hi (inclusive when hi is on the lattice).
inline std::vector<double> voltage_grid(double lo, double hi, double step) {
    if (!(step > 0)) throw ValidationError("grid step must be positive");
    if (!(hi >= lo)) throw ValidationError("grid range must satisfy lo <= hi");
    const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i) grid[i] = lo + step * i;
    return grid;
}

namespace detail {

inline void check_grid(const std::vector<double>& grid, double limit, const char* name) {
    if (grid.empty()) throw ValidationError(std::string(name) + " is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(std::abs(grid[i]) <= limit)) {
            throw ValidationError(std::string(name) + " value " + std::to_string(grid[i]) + " V exceeds limit " +
                                  std::to_string(limit) + " V");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) throw ValidationError(std::string(name) + " must be strictly increasing");
    }
}

inline void check_electrode(Electrode e, int n) {
    if (e.number < 1 || e.number > n) {
        throw ValidationError("electrode " + std::to_string(e.number) + " out of range 1.." + std::to_string(n));
    }
}

// A pair with no cross transmission at all reflects everything.
inline double map_reflectivity(const Eigen::MatrixXcd& u, SubcircuitPair pair) {
    const Eigen::Matrix2d p = u.block<2, 2>(pair.k - 1, pair.k - 1).cwiseAbs2();
    if (p(1, 0) * p(0, 1) == 0.0 && p(0, 0) * p(1, 1) > 0.0) return 1.0;
    return effective_reflectivity(u, pair);
}

}  // namespace detail

inline LookupMap build_lookup_map(const DeviceSpec& spec, SubcircuitPair pair, Electrode electrode_a,
                                  Electrode electrode_b, std::vector<double> grid_a, std::vector<double> grid_b,
                                  const VoltageConfig& fixed_voltages) {
    check_pair(pair, spec.n_guides);
    detail::check_electrode(electrode_a, spec.n_electrodes);
    detail::check_electrode(electrode_b, spec.n_electrodes);
    if (electrode_a.number == electrode_b.number) throw ValidationError("map electrodes must be distinct");
    detail::check_grid(grid_a, spec.voltage_limit, "grid_a");
    detail::check_grid(grid_b, spec.voltage_limit, "grid_b");

    LookupMap map;
    map.electrode_a = electrode_a;
    map.electrode_b = electrode_b;
    map.pair = pair;
    map.fixed_voltages = fixed_voltages;
    const auto na = static_cast<Eigen::Index>(grid_a.size());
    const auto nb = static_cast<Eigen::Index>(grid_b.size());
    map.grid_a = std::move(grid_a);
    map.grid_b = std::move(grid_b);
    map.eta.resize(na, nb);
    map.leakage_in1.resize(na, nb);
    map.leakage_in2.resize(na, nb);

    VoltageConfig v = fixed_voltages;
    for (Eigen::Index i = 0; i < na; ++i) {
        for (Eigen::Index j = 0; j < nb; ++j) {
            v[electrode_a] = map.grid_a[i];
            v[electrode_b] = map.grid_b[j];
            const auto u = device_unitary(spec, v);
            map.eta(i, j) = detail::map_reflectivity(u.matrix, pair);
            map.leakage_in1(i, j) = leakage(output_power(u, pair.first()), pair);
            map.leakage_in2(i, j) = leakage(output_power(u, pair.second()), pair);
        }
    }
    return map;
}

struct MapCell {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    double v_a = 0.0;
    double v_b = 0.0;
    double eta = 0.0;
    double leakage_in1 = 0.0;
    double leakage_in2 = 0.0;

    double max_leakage() const { return std::max(leakage_in1, leakage_in2); }
    double mean_leakage() const { return 0.5 * (leakage_in1 + leakage_in2); }
};

inline MapCell map_cell(const LookupMap& map, Eigen::Index i, Eigen::Index j) {
    return {i, j, map.grid_a[i], map.grid_b[j], map.eta(i, j), map.leakage_in1(i, j), map.leakage_in2(i, j)};
}

struct VoltageSolution {
    std::optional<MapCell> cell;            // empty: no cell met the leakage bound
    std::optional<MapCell> best_infeasible;  // least-violating cell when `cell` is empty

    bool found() const { return cell.has_value(); }
};

/**
 * Grid search for the cell closest to `target_eta` whose leakage (both
 * inputs) is at most `max_leakage` percent.
 *
 * Ties go to lower mean leakage, then to the smaller voltage norm, then to
 * grid order.
 */
inline VoltageSolution solve_voltage(const LookupMap& map, double target_eta, double max_leakage) {
    auto rank = [&](const MapCell& c) {
        return std::make_tuple(std::abs(c.eta - target_eta), c.mean_leakage(), std::hypot(c.v_a, c.v_b), c.i, c.j);
    };
    VoltageSolution out;
    for (Eigen::Index i = 0; i < map.eta.rows(); ++i) {
        for (Eigen::Index j = 0; j < map.eta.cols(); ++j) {
            const auto c = map_cell(map, i, j);
            if (c.max_leakage() <= max_leakage) {
                if (!out.cell || rank(c) < rank(*out.cell)) out.cell = c;
            } else if (!out.best_infeasible ||
                       std::tuple_cat(std::make_tuple(c.max_leakage()), rank(c)) <
                           std::tuple_cat(std::make_tuple(out.best_infeasible->max_leakage()),
                                          rank(*out.best_infeasible))) {
                out.best_infeasible = c;
            }
        }
    }
    if (out.cell) out.best_infeasible.reset();
    return out;
}

struct GateVoltage {
    double target_eta;
    double volts;
    bool clamped;
};

struct LinearGateFit {
    double slope;
    double intercept;
    std::size_t segment_begin;  // inclusive indices into grid_a
    std::size_t segment_end;
    std::vector<GateVoltage> gates;
};

/// Longest strictly monotone run of `y` that contains index `anchor`.
inline std::pair<std::size_t, std::size_t> monotone_segment(const std::vector<double>& y, std::size_t anchor) {
    auto run = [&](int sign) {
        std::size_t lo = anchor;
        while (lo > 0 && sign * (y[lo] - y[lo - 1]) > 0) --lo;
        std::size_t hi = anchor;
        while (hi + 1 < y.size() && sign * (y[hi + 1] - y[hi]) > 0) ++hi;
        return std::make_pair(lo, hi);
    };
    const auto up = run(+1);
    const auto down = run(-1);
    return (up.second - up.first) >= (down.second - down.first) ? up : down;
}

/**
 * Voltages on electrode_a for the requested reflectivities, read off a
 * least-squares line through the operating branch of the eta(v_a) slice at
 * v_b (nearest grid column).
 *
 * The branch is the longest monotone run around the point closest to
 * eta = 0.5. Results outside the voltage limit are clamped and flagged.
 */
inline LinearGateFit gate_voltages_by_linear_fit(const LookupMap& map, double v_b, const std::vector<double>& targets,
                                                 double voltage_limit = 10.0) {
    if (map.grid_a.size() < 3) throw ValidationError("linear fit needs a slice with at least 3 points");
    if (map.grid_b.empty()) throw ValidationError("map has no grid_b");
    const auto jb = static_cast<Eigen::Index>(
        std::min_element(map.grid_b.begin(), map.grid_b.end(),
                         [&](double a, double b) { return std::abs(a - v_b) < std::abs(b - v_b); }) -
        map.grid_b.begin());

    std::vector<double> slice(map.grid_a.size());
    for (std::size_t i = 0; i < slice.size(); ++i) slice[i] = map.eta(static_cast<Eigen::Index>(i), jb);
    const auto anchor = static_cast<std::size_t>(
        std::min_element(slice.begin(), slice.end(),
                         [](double a, double b) { return std::abs(a - 0.5) < std::abs(b - 0.5); }) -
        slice.begin());
    const auto [lo, hi] = monotone_segment(slice, anchor);

    double slope = 0.0;
    double intercept = slice[anchor];
    if (hi > lo) {
        const auto n = static_cast<double>(hi - lo + 1);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = lo; i <= hi; ++i) {
            sx += map.grid_a[i];
            sy += slice[i];
            sxx += map.grid_a[i] * map.grid_a[i];
            sxy += map.grid_a[i] * slice[i];
        }
        slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        intercept = (sy - slope * sx) / n;
    }
    if (!(std::abs(slope) >= 1e-6)) throw ValidationError("reflectivity slice is flat; cannot invert linear fit");

    LinearGateFit fit{slope, intercept, lo, hi, {}};
    for (double t : targets) {
        const double v = (t - intercept) / slope;
        const double c = std::clamp(v, -voltage_limit, voltage_limit);
        fit.gates.push_back({t, c, std::abs(v) > voltage_limit + 1e-9});
    }
    return fit;
}

}  // namespace wgarray
