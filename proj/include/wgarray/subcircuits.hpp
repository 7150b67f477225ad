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
#include <array>
#include <cmath>
#include <set>
#include <string>

#include "wgarray/device_model.hpp"
#include "wgarray/errors.hpp"
#include "wgarray/evolution.hpp"
#include "wgarray/photon_stats.hpp"

namespace wgarray {

/// Adjacent guides (k, k+1); `k` is 1-based.
struct SubcircuitPair {
    int k;

    Guide first() const { return {k}; }
    Guide second() const { return {k + 1}; }
    bool contains(int guide) const { return guide == k || guide == k + 1; }
    bool overlaps(SubcircuitPair other) const { return contains(other.k) || contains(other.k + 1); }

    bool operator==(const SubcircuitPair&) const = default;
};

inline void check_pair(SubcircuitPair pair, int n_guides) {
    if (pair.k < 1 || pair.k >= n_guides) {
        throw ValidationError("subcircuit (" + std::to_string(pair.k) + ", " + std::to_string(pair.k + 1) +
                              ") outside 1.." + std::to_string(n_guides));
    }
}

/// Phase shifter after a tunable coupler: R_z(phi) U_DC(eta).
struct TwoModeUnitary {
    Eigen::Matrix2cd matrix;
    double eta;
    double phi;
};

inline TwoModeUnitary two_mode_unitary(double eta, double phi = 0.0) {
    check_reflectivity(eta);
    const double t = std::sqrt(eta);
    const double s = std::sqrt(1.0 - eta);
    const Complex i(0.0, 1.0);
    const Complex phase = std::polar(1.0, phi);
    Eigen::Matrix2cd m;
    m << t, i * s, i * phase * s, phase * t;
    return {m, eta, phi};
}

enum class Gate { kI, kH, kX };

inline double gate_reflectivity(Gate g) {
    switch (g) {
        case Gate::kI:
            return 1.0;
        case Gate::kH:
            return 0.5;
        case Gate::kX:
            return 0.0;
    }
    return 1.0;
}

inline Gate parse_gate(char c) {
    switch (c) {
        case 'I':
        case 'i':
            return Gate::kI;
        case 'H':
        case 'h':
            return Gate::kH;
        case 'X':
        case 'x':
            return Gate::kX;
    }
    throw ValidationError(std::string("unknown gate '") + c + "', expected I, H or X");
}

namespace detail {
inline void check_normalized(const Eigen::VectorXd& p, double tol, const char* what) {
    if ((p.array() < -tol).any() || std::abs(p.sum() - 1.0) > tol) {
        throw ValidationError(std::string(what) + " must be a normalized distribution (sum " +
                              std::to_string(p.sum()) + ")");
    }
}
}  // namespace detail

/// Power outside the pair, in percent.
inline double leakage(const Eigen::VectorXd& powers, SubcircuitPair pair) {
    check_pair(pair, static_cast<int>(powers.size()));
    detail::check_normalized(powers, 1e-6, "output powers");
    double out = 0.0;
    for (Eigen::Index i = 0; i < powers.size(); ++i) {
        if (!pair.contains(static_cast<int>(i) + 1)) out += powers(i);
    }
    return 100.0 * out;
}

/// Power landing in another subcircuit's guides, in percent.
inline double crosstalk(const Eigen::VectorXd& powers, SubcircuitPair own, SubcircuitPair other) {
    const int n = static_cast<int>(powers.size());
    check_pair(own, n);
    check_pair(other, n);
    if (own.overlaps(other)) throw ValidationError("crosstalk needs disjoint subcircuits");
    detail::check_normalized(powers, 1e-6, "output powers");
    return 100.0 * (powers(other.k - 1) + powers(other.k));
}

/// Sets C_{k,k+1} = 0 for each 1-based k in `boundaries`.
inline TridiagonalHamiltonian decouple_blocks(TridiagonalHamiltonian h, const std::set<int>& boundaries) {
    for (int k : boundaries) {
        if (k < 1 || k > static_cast<int>(h.offdiag.size())) {
            throw ValidationError("coupling index " + std::to_string(k) + " out of range 1.." +
                                  std::to_string(h.offdiag.size()));
        }
        h.offdiag(k - 1) = 0.0;
    }
    return h;
}

struct PostSelected {
    Eigen::Matrix2cd matrix;            // unnormalized submatrix
    Eigen::Vector2d success_probability;  // per input column
};

inline PostSelected post_selected_two_mode_unitary(const Eigen::MatrixXcd& u, SubcircuitPair pair) {
    check_pair(pair, static_cast<int>(u.rows()));
    PostSelected out;
    out.matrix = u.block<2, 2>(pair.k - 1, pair.k - 1);
    out.success_probability = out.matrix.cwiseAbs2().colwise().sum().transpose();
    return out;
}

inline PostSelected post_selected_two_mode_unitary(const TransferUnitary& u, SubcircuitPair pair) {
    return post_selected_two_mode_unitary(u.matrix, pair);
}

/// eta of the pair seen through the power-ratio estimator. Leakage scales
/// each input column uniformly and cancels in the ratio.
inline double effective_reflectivity(const Eigen::MatrixXcd& u, SubcircuitPair pair) {
    const Eigen::Matrix2d p = post_selected_two_mode_unitary(u, pair).matrix.cwiseAbs2();
    // p(out, in); the estimator wants P_mn = power out of n for input m.
    return reflectivity_from_powers(p(0, 0), p(1, 0), p(0, 1), p(1, 1));
}

inline double effective_reflectivity(const TransferUnitary& u, SubcircuitPair pair) {
    return effective_reflectivity(u.matrix, pair);
}

/// Rows: inputs |00>,|01>,|10>,|11>. Columns: outputs in the same order.
struct TruthTable {
    Eigen::Matrix4d table;
};

/// Each subcircuit's post-selected power split, as column-stochastic 2x2
/// (entry (out, in)). Columns with no surviving power stay zero.
inline Eigen::Matrix2d post_selected_split(const Eigen::Matrix2cd& block) {
    Eigen::Matrix2d p = block.cwiseAbs2();
    for (int c = 0; c < 2; ++c) {
        const double s = p.col(c).sum();
        if (s > 0.0) p.col(c) /= s;
    }
    return p;
}

/**
 * Truth table of two path-encoded qubits (|0> on the pair's first guide,
 * |1> on the second) processed by two subcircuits under balanced classical
 * inputs.
 *
 * Each subcircuit's output powers are post-selected onto its own pair, so
 * leakage is ignored; the joint output distribution is the product of the
 * two normalized splits.
 */
inline TruthTable truth_table(const Eigen::Matrix2cd& block_a, const Eigen::Matrix2cd& block_b) {
    const Eigen::Matrix2d pa = post_selected_split(block_a);
    const Eigen::Matrix2d pb = post_selected_split(block_b);
    TruthTable t{Eigen::Matrix4d::Zero()};
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) {
                for (int d = 0; d < 2; ++d) t.table(2 * a + b, 2 * c + d) = pa(c, a) * pb(d, b);
            }
        }
    }
    return t;
}

inline TruthTable truth_table(const Eigen::MatrixXcd& u, SubcircuitPair pair_a, SubcircuitPair pair_b) {
    check_pair(pair_a, static_cast<int>(u.rows()));
    check_pair(pair_b, static_cast<int>(u.rows()));
    if (pair_a.overlaps(pair_b)) throw ValidationError("truth table needs disjoint subcircuits");
    return truth_table(post_selected_two_mode_unitary(u, pair_a).matrix,
                       post_selected_two_mode_unitary(u, pair_b).matrix);
}

/// Ideal table of two tunable couplers with the given reflectivities.
inline TruthTable gate_truth_table(double eta_a, double eta_b) {
    return truth_table(two_mode_unitary(eta_a).matrix, two_mode_unitary(eta_b).matrix);
}

/// Bhattacharyya coefficient sum_j sqrt(p_j q_j).
inline double distribution_fidelity(const Eigen::VectorXd& target, const Eigen::VectorXd& measured) {
    if (target.size() != measured.size()) throw ValidationError("distributions differ in length");
    detail::check_normalized(target, 1e-6, "target distribution");
    detail::check_normalized(measured, 1e-6, "measured distribution");
    return (target.cwiseMax(0.0).array() * measured.cwiseMax(0.0).array()).sqrt().sum();
}

inline double average_fidelity(const TruthTable& target, const TruthTable& measured) {
    double f = 0.0;
    for (int i = 0; i < 4; ++i) {
        f += distribution_fidelity(target.table.row(i).transpose(), measured.table.row(i).transpose());
    }
    return f / 4.0;
}

}  // namespace wgarray
