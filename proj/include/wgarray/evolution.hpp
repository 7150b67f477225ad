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
#include <complex>
#include <vector>

#include "wgarray/device_model.hpp"
#include "wgarray/errors.hpp"

namespace wgarray {

using Complex = std::complex<double>;

/// U = exp(-i H L) of the whole array.
struct TransferUnitary {
    Eigen::MatrixXcd matrix;
    double length = 0.0;

    int size() const { return static_cast<int>(matrix.rows()); }
};

/// Output power along the array; row k of `intensities` is the power
/// distribution at z_points[k].
struct IntensityProfile {
    std::vector<double> z_points;
    Eigen::MatrixXd intensities;
};

/**
 * Spectral form of a tridiagonal Hamiltonian, reusable for any length.
 *
 * The array is split at exactly-zero couplings and each irreducible block
 * is diagonalized on its own, so U is block diagonal with exact zeros
 * wherever the Hamiltonian is.
 */
class Propagator {
   public:
    explicit Propagator(const TridiagonalHamiltonian& h) : n_(h.size()) {
        if (n_ < 1 || h.offdiag.size() != n_ - 1) throw ValidationError("malformed tridiagonal Hamiltonian");
        int start = 0;
        for (int k = 0; k <= n_ - 1; ++k) {
            if (k == n_ - 1 || h.offdiag(k) == 0.0) {
                add_block(h, start, k - start + 1);
                start = k + 1;
            }
        }
    }

    int size() const { return n_; }

    TransferUnitary unitary(double length) const {
        TransferUnitary u{Eigen::MatrixXcd::Zero(n_, n_), length};
        for (const auto& b : blocks_) {
            Eigen::VectorXcd phases(b.eigenvalues.size());
            for (Eigen::Index i = 0; i < phases.size(); ++i) {
                phases(i) = std::exp(Complex(0.0, -b.eigenvalues(i) * length));
            }
            const Eigen::MatrixXcd q = b.eigenvectors.cast<Complex>();
            u.matrix.block(b.start, b.start, b.size, b.size) = q * phases.asDiagonal() * q.transpose();
        }
        return u;
    }

   private:
    struct Block {
        int start;
        int size;
        Eigen::VectorXd eigenvalues;
        Eigen::MatrixXd eigenvectors;
    };

    void add_block(const TridiagonalHamiltonian& h, int start, int size) {
        Block b{start, size, {}, {}};
        if (size == 1) {
            b.eigenvalues = h.diag.segment(start, 1);
            b.eigenvectors = Eigen::MatrixXd::Identity(1, 1);
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
            solver.computeFromTridiagonal(h.diag.segment(start, size), h.offdiag.segment(start, size - 1),
                                          Eigen::ComputeEigenvectors);
            if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver did not converge");
            b.eigenvalues = solver.eigenvalues();
            b.eigenvectors = solver.eigenvectors();
        }
        blocks_.push_back(std::move(b));
    }

    int n_;
    std::vector<Block> blocks_;
};

inline TransferUnitary unitary(const TridiagonalHamiltonian& h, double length) {
    if (!(length > 0)) throw ValidationError("coupling length must be positive");
    return Propagator(h).unitary(length);
}

inline TransferUnitary device_unitary(const DeviceSpec& spec, const VoltageConfig& v) {
    return unitary(build_hamiltonian(spec, v), spec.coupling_length);
}

inline void check_guide(Guide g, int n) {
    if (g.number < 1 || g.number > n) {
        throw ValidationError("guide " + std::to_string(g.number) + " out of range 1.." + std::to_string(n));
    }
}

/// P_m = |U[m, input]|^2.
inline Eigen::VectorXd output_power(const Eigen::MatrixXcd& u, Guide input) {
    check_guide(input, static_cast<int>(u.cols()));
    return u.col(input.number - 1).cwiseAbs2();
}

inline Eigen::VectorXd output_power(const TransferUnitary& u, Guide input) { return output_power(u.matrix, input); }

inline constexpr int kDefaultProfileSteps = 200;

/// Samples z_k = k L / (n_steps - 1), k = 0 .. n_steps-1.
inline IntensityProfile propagation_profile(const TridiagonalHamiltonian& h, double length, int n_steps,
                                            Guide input) {
    if (n_steps < 2) throw ValidationError("propagation profile needs n_steps >= 2");
    if (!(length > 0)) throw ValidationError("coupling length must be positive");
    check_guide(input, h.size());
    const Propagator prop(h);
    IntensityProfile profile;
    profile.z_points.resize(n_steps);
    profile.intensities.resize(n_steps, h.size());
    for (int k = 0; k < n_steps; ++k) {
        const double z = length * k / (n_steps - 1);
        profile.z_points[k] = z;
        profile.intensities.row(k) = output_power(prop.unitary(z), input).transpose();
    }
    return profile;
}

/// max |(U^dagger U - I)_ij|
inline double unitarity_defect(const Eigen::MatrixXcd& u) {
    const auto n = u.cols();
    return (u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

}  // namespace wgarray
