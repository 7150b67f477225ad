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

#include "wgarray/calibration.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include "test_util.hpp"

using namespace wgarray;

namespace {

// eta(v_a) = 0.05 v_a + 0.5 on a -10..10 grid, no leakage.
LookupMap linear_map() {
    LookupMap map;
    map.grid_a = voltage_grid(-10, 10, 0.5);
    map.grid_b = voltage_grid(-2, 2, 1);
    const auto na = static_cast<Eigen::Index>(map.grid_a.size());
    const auto nb = static_cast<Eigen::Index>(map.grid_b.size());
    map.eta.resize(na, nb);
    for (Eigen::Index i = 0; i < na; ++i) map.eta.row(i).setConstant(0.05 * map.grid_a[i] + 0.5);
    map.leakage_in1 = Eigen::MatrixXd::Zero(na, nb);
    map.leakage_in2 = Eigen::MatrixXd::Zero(na, nb);
    map.fixed_voltages = VoltageConfig::zeros(22);
    return map;
}

const LookupMap& default_map() {
    static const LookupMap map = build_lookup_map(default_device(), SubcircuitPair{1}, Electrode{1}, Electrode{4},
                                                  voltage_grid(-10, 10, 0.5), voltage_grid(-10, 10, 0.5),
                                                  VoltageConfig::zeros(22));
    return map;
}

Eigen::Index index_of(const std::vector<double>& grid, double v) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(grid[i] - v) < 1e-12) return static_cast<Eigen::Index>(i);
    }
    return -1;
}

}  // namespace

TEST(calibration, voltage_grid) {
    const auto g = voltage_grid(-10, 10, 0.5);
    ASSERT_EQ(g.size(), 41u);
    EXPECT_EQ(g.front(), -10.0);
    EXPECT_EQ(g.back(), 10.0);
    EXPECT_EQ(g[20], 0.0);
    EXPECT_THROW(voltage_grid(0, 1, 0), ValidationError);
    EXPECT_THROW(voltage_grid(1, 0, 0.5), ValidationError);
}

TEST(calibration, small_grid_shape_and_invariants) {
    const auto map = build_lookup_map(default_device(), SubcircuitPair{1}, Electrode{1}, Electrode{4}, {-5, 0, 5},
                                      {-5, 0, 5}, VoltageConfig::zeros(22));
    EXPECT_EQ(map.eta.rows(), 3);
    EXPECT_EQ(map.eta.cols(), 3);
    EXPECT_EQ(map.leakage_in1.size(), 9);
    EXPECT_EQ(map.leakage_in2.size(), 9);
    EXPECT_GE(map.eta.minCoeff(), 0.0);
    EXPECT_LE(map.eta.maxCoeff(), 1.0);
    for (const auto* t : {&map.leakage_in1, &map.leakage_in2}) {
        EXPECT_GE(t->minCoeff(), -1e-12);
        EXPECT_LE(t->maxCoeff(), 100.0 + 1e-12);
    }
}

TEST(calibration, zero_sensitivity_map_is_constant) {
    auto spec = default_device();
    spec.beta_sensitivity.setZero();
    spec.coupling_sensitivity.setZero();
    const auto map = build_lookup_map(spec, SubcircuitPair{1}, Electrode{1}, Electrode{4}, {-10, 0, 10}, {-10, 0, 10},
                                      VoltageConfig::zeros(22));
    const auto u = device_unitary(spec, VoltageConfig::zeros(22));
    const double eta = effective_reflectivity(u, SubcircuitPair{1});
    const double l1 = leakage(output_power(u, Guide{1}), SubcircuitPair{1});
    const double l2 = leakage(output_power(u, Guide{2}), SubcircuitPair{1});
    EXPECT_EQ(map.eta, Eigen::MatrixXd::Constant(3, 3, eta));
    EXPECT_EQ(map.leakage_in1, Eigen::MatrixXd::Constant(3, 3, l1));
    EXPECT_EQ(map.leakage_in2, Eigen::MatrixXd::Constant(3, 3, l2));
}

TEST(calibration, map_errors) {
    const auto spec = default_device();
    const auto zero = VoltageConfig::zeros(22);
    EXPECT_THROW(build_lookup_map(spec, SubcircuitPair{1}, Electrode{1}, Electrode{1}, {0}, {0}, zero),
                 ValidationError);
    EXPECT_THROW(build_lookup_map(spec, SubcircuitPair{1}, Electrode{1}, Electrode{4}, {-12, 0}, {0}, zero),
                 ValidationError);
    EXPECT_THROW(build_lookup_map(spec, SubcircuitPair{1}, Electrode{1}, Electrode{4}, {1, 0}, {0}, zero),
                 ValidationError);
    EXPECT_THROW(build_lookup_map(spec, SubcircuitPair{1}, Electrode{23}, Electrode{4}, {0}, {0}, zero),
                 ValidationError);
    auto hot = zero;
    hot[Electrode{9}] = 11.0;
    EXPECT_THROW(build_lookup_map(spec, SubcircuitPair{1}, Electrode{1}, Electrode{4}, {0}, {0}, hot),
                 VoltageBoundError);
}

TEST(calibration, default_map_cells_match_direct_simulation) {
    const auto& map = default_map();
    ASSERT_EQ(map.eta.rows(), 41);
    ASSERT_EQ(map.eta.cols(), 41);
    const auto spec = default_device();
    for (auto [va, vb] : {std::pair{0.5, 0.0}, std::pair{-3.0, 7.0}}) {
        auto v = VoltageConfig::zeros(22);
        v[Electrode{1}] = va;
        v[Electrode{4}] = vb;
        const auto u = device_unitary(spec, v);
        const auto i = index_of(map.grid_a, va);
        const auto j = index_of(map.grid_b, vb);
        EXPECT_EQ(map.eta(i, j), effective_reflectivity(u, SubcircuitPair{1}));
        EXPECT_EQ(map.leakage_in1(i, j), leakage(output_power(u, Guide{1}), SubcircuitPair{1}));
        EXPECT_EQ(map.leakage_in2(i, j), leakage(output_power(u, Guide{2}), SubcircuitPair{1}));
    }
}

TEST(calibration, reflectivity_is_monotone_near_zero_volts) {
    const auto& map = default_map();
    const auto j0 = index_of(map.grid_b, 0.0);
    const auto i0 = index_of(map.grid_a, 0.0);
    const double d = map.eta(i0 + 1, j0) - map.eta(i0, j0);
    ASSERT_NE(d, 0.0);
    for (Eigen::Index i = i0 - 2; i < i0 + 2; ++i) {
        EXPECT_GT((map.eta(i + 1, j0) - map.eta(i, j0)) * d, 0.0) << "cell " << i;
    }
}

TEST(calibration, map_build_is_deterministic) {
    const auto again = build_lookup_map(default_device(), SubcircuitPair{1}, Electrode{1}, Electrode{4},
                                        voltage_grid(-10, 10, 0.5), voltage_grid(-10, 10, 0.5),
                                        VoltageConfig::zeros(22));
    const auto& map = default_map();
    EXPECT_EQ(std::memcmp(again.eta.data(), map.eta.data(), sizeof(double) * map.eta.size()), 0);
    EXPECT_EQ(std::memcmp(again.leakage_in1.data(), map.leakage_in1.data(), sizeof(double) * map.eta.size()), 0);
    EXPECT_EQ(std::memcmp(again.leakage_in2.data(), map.leakage_in2.data(), sizeof(double) * map.eta.size()), 0);
}

TEST(calibration, decoupling_voltage_reduces_leakage) {
    const auto& map = default_map();
    const auto j0 = index_of(map.grid_b, 0.0);
    const auto i0 = index_of(map.grid_a, 0.0);
    // Along the decoupling axis with V1 = 0.
    double best = map.leakage_in1(i0, j0);
    for (Eigen::Index j = 0; j < map.eta.cols(); ++j) best = std::min(best, map.leakage_in1(i0, j));
    EXPECT_LT(best, map.leakage_in1(i0, j0));
}

TEST(calibration, decoupling_regression_against_chip) {
    // V1-sweep-averaged leakage at V4 = 0 and 7 V. The chip went 63% -> 33% (WG1)
    // and 81% -> 35% (WG2); the stand-in model has to land within 15 points.
    const auto& map = default_map();
    const auto j0 = index_of(map.grid_b, 0.0);
    const auto j7 = index_of(map.grid_b, 7.0);
    EXPECT_NEAR(map.leakage_in1.col(j0).mean(), 63.0, 15.0);
    EXPECT_NEAR(map.leakage_in1.col(j7).mean(), 33.0, 15.0);
    EXPECT_NEAR(map.leakage_in2.col(j0).mean(), 81.0, 15.0);
    EXPECT_NEAR(map.leakage_in2.col(j7).mean(), 35.0, 15.0);
}

TEST(calibration, solve_voltage_exact_cell) {
    auto map = linear_map();
    map.eta(3, 2) = 0.123;
    const auto sol = solve_voltage(map, 0.123, 5.0);
    ASSERT_TRUE(sol.found());
    EXPECT_EQ(sol.cell->i, 3);
    EXPECT_EQ(sol.cell->j, 2);
    EXPECT_FALSE(sol.best_infeasible);
}

TEST(calibration, solve_voltage_linear_inversion) {
    const auto sol = solve_voltage(linear_map(), 0.6, 100.0);
    ASSERT_TRUE(sol.found());
    EXPECT_DOUBLE_EQ(sol.cell->v_a, 2.0);
    EXPECT_EQ(sol.cell->v_b, 0.0);  // smallest voltage norm among the tied column
}

TEST(calibration, solve_voltage_tie_breaks) {
    auto map = linear_map();
    // Same eta everywhere in row 24 (v_a = 2); make v_b = -2 the least leaky.
    map.leakage_in1.row(24).setConstant(3.0);
    map.leakage_in1(24, 0) = 1.0;
    const auto sol = solve_voltage(map, 0.6, 10.0);
    ASSERT_TRUE(sol.found());
    EXPECT_EQ(sol.cell->j, 0);
}

TEST(calibration, solve_voltage_infeasible) {
    auto map = linear_map();
    map.leakage_in1.array() += 1.0;
    map.leakage_in2.array() += 1.0;
    const auto sol = solve_voltage(map, 0.6, -1.0);
    EXPECT_FALSE(sol.found());
    ASSERT_TRUE(sol.best_infeasible);
    EXPECT_DOUBLE_EQ(sol.best_infeasible->max_leakage(), 1.0);
}

TEST(calibration, solve_then_simulate_round_trip) {
    const auto& map = default_map();
    const auto spec = default_device();
    double max_step = 0.0;
    for (Eigen::Index i = 0; i + 1 < map.eta.rows(); ++i) {
        max_step = std::max(max_step, (map.eta.row(i + 1) - map.eta.row(i)).cwiseAbs().maxCoeff());
    }
    for (Eigen::Index j = 0; j + 1 < map.eta.cols(); ++j) {
        max_step = std::max(max_step, (map.eta.col(j + 1) - map.eta.col(j)).cwiseAbs().maxCoeff());
    }
    for (double target : {map.eta.minCoeff() + 0.01, 0.5 * (map.eta.minCoeff() + map.eta.maxCoeff()),
                          map.eta.maxCoeff() - 0.01}) {
        const auto sol = solve_voltage(map, target, 100.0);
        ASSERT_TRUE(sol.found());
        auto v = VoltageConfig::zeros(22);
        v[Electrode{1}] = sol.cell->v_a;
        v[Electrode{4}] = sol.cell->v_b;
        const double eta = effective_reflectivity(device_unitary(spec, v), SubcircuitPair{1});
        EXPECT_LE(std::abs(eta - target), max_step) << target;
    }
}

TEST(calibration, linear_fit_gate_voltages) {
    const auto fit = gate_voltages_by_linear_fit(linear_map(), 0.0, {0.0, 0.5, 1.0});
    EXPECT_NEAR(fit.slope, 0.05, 1e-12);
    EXPECT_NEAR(fit.intercept, 0.5, 1e-12);
    ASSERT_EQ(fit.gates.size(), 3u);
    EXPECT_NEAR(fit.gates[0].volts, -10.0, 1e-9);
    EXPECT_NEAR(fit.gates[1].volts, 0.0, 1e-9);
    EXPECT_NEAR(fit.gates[2].volts, 10.0, 1e-9);
    for (const auto& g : fit.gates) EXPECT_FALSE(g.clamped);
}

TEST(calibration, linear_fit_clamps_and_flags) {
    auto map = linear_map();
    for (Eigen::Index i = 0; i < map.eta.rows(); ++i) map.eta.row(i).setConstant(0.02 * map.grid_a[i] + 0.5);
    const auto fit = gate_voltages_by_linear_fit(map, 0.0, {0.0, 0.5, 1.0});
    EXPECT_EQ(fit.gates[0].volts, -10.0);
    EXPECT_TRUE(fit.gates[0].clamped);
    EXPECT_NEAR(fit.gates[1].volts, 0.0, 1e-9);
    EXPECT_FALSE(fit.gates[1].clamped);
    EXPECT_EQ(fit.gates[2].volts, 10.0);
    EXPECT_TRUE(fit.gates[2].clamped);
}

TEST(calibration, linear_fit_uses_operating_branch) {
    // A tent: rising to 0.7 at v = 4, then falling. Point nearest 0.5 sits on the rising branch.
    auto map = linear_map();
    for (Eigen::Index i = 0; i < map.eta.rows(); ++i) {
        const double v = map.grid_a[i];
        map.eta.row(i).setConstant(v <= 4 ? 0.6 + 0.05 * (v - 2) : 0.7 - 0.1 * (v - 4));
    }
    const auto fit = gate_voltages_by_linear_fit(map, 0.0, {0.5});
    EXPECT_NEAR(fit.slope, 0.05, 1e-12);
    EXPECT_EQ(map.grid_a[fit.segment_end], 4.0);
    EXPECT_NEAR(fit.gates[0].volts, 0.0, 1e-9);
}

TEST(calibration, linear_fit_flat_and_short) {
    auto map = linear_map();
    map.eta.setConstant(0.5);
    EXPECT_THROW(gate_voltages_by_linear_fit(map, 0.0, {0.5}), ValidationError);
    LookupMap tiny = linear_map();
    tiny.grid_a = {0.0, 1.0};
    EXPECT_THROW(gate_voltages_by_linear_fit(tiny, 0.0, {0.5}), ValidationError);
}

TEST(calibration, monotone_segment) {
    const std::vector<double> y{0.1, 0.2, 0.3, 0.25, 0.2, 0.1, 0.05};
    EXPECT_EQ(monotone_segment(y, 1), (std::pair<std::size_t, std::size_t>{0, 2}));
    EXPECT_EQ(monotone_segment(y, 4), (std::pair<std::size_t, std::size_t>{2, 6}));
}
