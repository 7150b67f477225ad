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
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wgarray/errors.hpp"

namespace wgarray {

/// 1-based waveguide label, as printed on the chip (WG_1 .. WG_N).
struct Guide {
    int number;
};

/// 1-based electrode label (V_1 .. V_E).
struct Electrode {
    int number;
};

/// Default linear sensitivities, rad/(mm V).
inline constexpr double kDefaultBetaGain = 0.02;
inline constexpr double kDefaultCouplingGain = -0.01;
inline constexpr double kDefaultBaseCoupling = 0.12;
// WG1 sits slightly off the rest of the array, so the (1,2) coupler is
// near balanced at 0 V and eta moves monotonically with V1 there.
inline constexpr double kDefaultGuide1Detuning = 0.05;

inline Eigen::VectorXd default_base_beta(int n_guides) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n_guides);
    if (n_guides > 0) beta(0) = kDefaultGuide1Detuning;
    return beta;
}

/**
 * Physical description of a programmable waveguide array together with the
 * linear voltage-to-Hamiltonian model.
 *
 * Units: propagation constants and couplings in rad/mm, lengths in mm,
 * voltages in V. The product H*L is therefore dimensionless.
 */
struct DeviceSpec {
    int n_guides = 11;
    int n_electrodes = 22;
    double coupling_length = 24.0;
    Eigen::VectorXd base_beta;
    Eigen::VectorXd base_coupling;
    Eigen::MatrixXd beta_sensitivity;      // N x E
    Eigen::MatrixXd coupling_sensitivity;  // (N-1) x E
    double voltage_limit = 10.0;
};

namespace detail {
template <class A, class B>
bool same(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}
}  // namespace detail

inline bool operator==(const DeviceSpec& a, const DeviceSpec& b) {
    return a.n_guides == b.n_guides && a.n_electrodes == b.n_electrodes && a.coupling_length == b.coupling_length &&
           a.voltage_limit == b.voltage_limit && detail::same(a.base_beta, b.base_beta) &&
           detail::same(a.base_coupling, b.base_coupling) && detail::same(a.beta_sensitivity, b.beta_sensitivity) &&
           detail::same(a.coupling_sensitivity, b.coupling_sensitivity);
}

/// Electrode 2n-1 drives beta_n, electrode 2n drives C_{n,n+1}. Anything
/// left over (e.g. electrode 22 on an 11-guide chip) has no effect.
inline void apply_default_sensitivities(DeviceSpec& spec, bool beta = true, bool coupling = true) {
    const int n = spec.n_guides;
    const int e = spec.n_electrodes;
    if (beta) {
        spec.beta_sensitivity = Eigen::MatrixXd::Zero(n, e);
        for (int g = 1; g <= n; ++g) {
            if (2 * g - 1 <= e) spec.beta_sensitivity(g - 1, 2 * g - 2) = kDefaultBetaGain;
        }
    }
    if (coupling) {
        spec.coupling_sensitivity = Eigen::MatrixXd::Zero(n - 1, e);
        for (int g = 1; g <= n - 1; ++g) {
            if (2 * g <= e) spec.coupling_sensitivity(g - 1, 2 * g - 1) = kDefaultCouplingGain;
        }
    }
}

inline void validate(const DeviceSpec& spec) {
    const auto n = spec.n_guides;
    const auto e = spec.n_electrodes;
    if (n < 2) throw ValidationError("n_guides must be >= 2, got " + std::to_string(n));
    if (e < 1) throw ValidationError("n_electrodes must be >= 1, got " + std::to_string(e));
    if (!(spec.coupling_length > 0)) throw ValidationError("coupling_length must be positive");
    if (!(spec.voltage_limit > 0)) throw ValidationError("voltage_limit must be positive");
    auto dim = [](const char* what, Eigen::Index got, Eigen::Index want) {
        if (got != want) {
            throw ValidationError(std::string("dimension mismatch: ") + what + " has " + std::to_string(got) +
                                  " entries, expected " + std::to_string(want));
        }
    };
    dim("base_beta", spec.base_beta.size(), n);
    dim("base_coupling", spec.base_coupling.size(), n - 1);
    dim("beta_sensitivity rows", spec.beta_sensitivity.rows(), n);
    dim("beta_sensitivity cols", spec.beta_sensitivity.cols(), e);
    dim("coupling_sensitivity rows", spec.coupling_sensitivity.rows(), n - 1);
    dim("coupling_sensitivity cols", spec.coupling_sensitivity.cols(), e);
    if ((spec.base_coupling.array() < 0).any()) throw ValidationError("base_coupling entries must be >= 0");
    if (!spec.base_beta.allFinite() || !spec.base_coupling.allFinite() || !spec.beta_sensitivity.allFinite() ||
        !spec.coupling_sensitivity.allFinite()) {
        throw ValidationError("device spec contains non-finite values");
    }
}

/// Default array: uniform couplings, detuned WG1, default electrode pattern.
inline DeviceSpec default_device(int n_guides = 11, int n_electrodes = 22, double coupling_length = 24.0) {
    DeviceSpec spec;
    spec.n_guides = n_guides;
    spec.n_electrodes = n_electrodes;
    spec.coupling_length = coupling_length;
    spec.base_beta = default_base_beta(n_guides);
    spec.base_coupling = Eigen::VectorXd::Constant(n_guides - 1, kDefaultBaseCoupling);
    apply_default_sensitivities(spec);
    validate(spec);
    return spec;
}

struct VoltageConfig {
    Eigen::VectorXd volts;

    static VoltageConfig zeros(int n_electrodes) { return {Eigen::VectorXd::Zero(n_electrodes)}; }

    double operator[](Electrode e) const { return volts(e.number - 1); }
    double& operator[](Electrode e) { return volts(e.number - 1); }
};

/// Real symmetric tridiagonal H: diag holds beta_n, offdiag holds C_{n,n+1}.
struct TridiagonalHamiltonian {
    Eigen::VectorXd diag;
    Eigen::VectorXd offdiag;

    int size() const { return static_cast<int>(diag.size()); }

    Eigen::MatrixXd dense() const {
        const auto n = diag.size();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        h.diagonal() = diag;
        if (n > 1) {
            h.diagonal(1) = offdiag;
            h.diagonal(-1) = offdiag;
        }
        return h;
    }
};

struct VoltageViolation {
    Electrode electrode;
    double volts;
};

struct VoltageReport {
    std::vector<VoltageViolation> violations;

    bool ok() const { return violations.empty(); }
};

/// Closed-interval bound check; also flags a wrong vector length or NaN.
inline VoltageReport validate_voltages(const DeviceSpec& spec, const VoltageConfig& v) {
    VoltageReport report;
    if (v.volts.size() != spec.n_electrodes) {
        // Missing electrodes are reported as NaN entries beyond the supplied vector.
        for (int i = static_cast<int>(v.volts.size()); i < spec.n_electrodes; ++i) {
            report.violations.push_back({Electrode{i + 1}, std::nan("")});
        }
        for (int i = spec.n_electrodes; i < static_cast<int>(v.volts.size()); ++i) {
            report.violations.push_back({Electrode{i + 1}, v.volts(i)});
        }
    }
    const auto m = std::min<Eigen::Index>(v.volts.size(), spec.n_electrodes);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double x = v.volts(i);
        if (!(std::abs(x) <= spec.voltage_limit)) {
            report.violations.push_back({Electrode{static_cast<int>(i) + 1}, x});
        }
    }
    return report;
}

/// H(v) = H(0) + S v, without the bound check. Used by optimizers probing
/// finite-difference stencils; everything user-facing goes through
/// build_hamiltonian.
inline TridiagonalHamiltonian build_hamiltonian_unchecked(const DeviceSpec& spec, const Eigen::VectorXd& volts) {
    return {spec.base_beta + spec.beta_sensitivity * volts, spec.base_coupling + spec.coupling_sensitivity * volts};
}

inline TridiagonalHamiltonian build_hamiltonian(const DeviceSpec& spec, const VoltageConfig& v) {
    if (v.volts.size() != spec.n_electrodes) {
        throw ValidationError("voltage vector has " + std::to_string(v.volts.size()) + " entries, device has " +
                              std::to_string(spec.n_electrodes) + " electrodes");
    }
    const auto report = validate_voltages(spec, v);
    if (!report.ok()) {
        const auto& bad = report.violations.front();
        throw VoltageBoundError(bad.electrode.number, bad.volts, spec.voltage_limit);
    }
    return build_hamiltonian_unchecked(spec, v.volts);
}

// ---------------------------------------------------------------------------
// Device spec documents (JSON).

namespace detail {

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* key) {
    if (!j.is_array()) throw ParseError(std::string(key) + " must be a numeric array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(std::string(key) + "[" + std::to_string(i) + "] is not a number");
        out(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return out;
}

// Dense: array of rows. Sparse: {"triplets": [[row, electrode, value], ...]}
// with 1-based row and electrode.
inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* key, int rows, int cols) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
    if (j.is_object()) {
        if (!j.contains("triplets") || !j["triplets"].is_array()) {
            throw ParseError(std::string(key) + ": sparse form needs a \"triplets\" array");
        }
        for (const auto& t : j["triplets"]) {
            if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
                !t[2].is_number()) {
                throw ParseError(std::string(key) + ": each triplet must be [row, electrode, value]");
            }
            const int r = t[0].get<int>();
            const int c = t[1].get<int>();
            if (r < 1 || r > rows || c < 1 || c > cols) {
                throw ParseError(std::string(key) + ": dimension mismatch, triplet (" + std::to_string(r) + ", " +
                                 std::to_string(c) + ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
            }
            out(r - 1, c - 1) = t[2].get<double>();
        }
        return out;
    }
    if (!j.is_array()) throw ParseError(std::string(key) + " must be an array of rows or a triplet object");
    if (static_cast<int>(j.size()) != rows) {
        throw ParseError(std::string(key) + ": dimension mismatch, " + std::to_string(j.size()) + " rows, expected " +
                         std::to_string(rows));
    }
    for (int r = 0; r < rows; ++r) {
        const auto row = vector_from_json(j[r], key);
        if (row.size() != cols) {
            throw ParseError(std::string(key) + ": dimension mismatch, row " + std::to_string(r + 1) + " has " +
                             std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
        }
        out.row(r) = row.transpose();
    }
    return out;
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
    return rows;
}

}  // namespace detail

inline DeviceSpec parse_device_spec(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("device spec is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("device spec must be a JSON object");
    for (const char* key : {"n_guides", "n_electrodes", "coupling_length"}) {
        if (!doc.contains(key)) throw ParseError(std::string("device spec: missing field \"") + key + "\"");
    }
    if (!doc["n_guides"].is_number_integer() || !doc["n_electrodes"].is_number_integer()) {
        throw ParseError("device spec: n_guides and n_electrodes must be integers");
    }
    if (!doc["coupling_length"].is_number()) throw ParseError("device spec: coupling_length must be a number");

    DeviceSpec spec;
    spec.n_guides = doc["n_guides"].get<int>();
    spec.n_electrodes = doc["n_electrodes"].get<int>();
    spec.coupling_length = doc["coupling_length"].get<double>();
    if (spec.n_guides < 2) throw ParseError("device spec: n_guides must be >= 2");
    if (spec.n_electrodes < 1) throw ParseError("device spec: n_electrodes must be >= 1");
    if (!(spec.coupling_length > 0)) throw ParseError("device spec: coupling_length must be positive");
    if (doc.contains("voltage_limit")) {
        if (!doc["voltage_limit"].is_number()) throw ParseError("device spec: voltage_limit must be a number");
        spec.voltage_limit = doc["voltage_limit"].get<double>();
        if (!(spec.voltage_limit > 0)) throw ParseError("device spec: voltage_limit must be positive");
    }

    const int n = spec.n_guides;
    const int e = spec.n_electrodes;
    spec.base_beta = doc.contains("base_beta") ? detail::vector_from_json(doc["base_beta"], "base_beta")
                                               : default_base_beta(n);
    spec.base_coupling = doc.contains("base_coupling")
                             ? detail::vector_from_json(doc["base_coupling"], "base_coupling")
                             : Eigen::VectorXd::Constant(n - 1, kDefaultBaseCoupling);
    if (spec.base_beta.size() != n) {
        throw ParseError("device spec: dimension mismatch, base_beta has " + std::to_string(spec.base_beta.size()) +
                         " entries, expected " + std::to_string(n));
    }
    if (spec.base_coupling.size() != n - 1) {
        throw ParseError("device spec: dimension mismatch, base_coupling has " +
                         std::to_string(spec.base_coupling.size()) + " entries, expected " + std::to_string(n - 1));
    }
    apply_default_sensitivities(spec, !doc.contains("beta_sensitivity"), !doc.contains("coupling_sensitivity"));
    if (doc.contains("beta_sensitivity")) {
        spec.beta_sensitivity = detail::matrix_from_json(doc["beta_sensitivity"], "beta_sensitivity", n, e);
    }
    if (doc.contains("coupling_sensitivity")) {
        spec.coupling_sensitivity =
            detail::matrix_from_json(doc["coupling_sensitivity"], "coupling_sensitivity", n - 1, e);
    }
    try {
        validate(spec);
    } catch (const ValidationError& err) {
        throw ParseError(std::string("device spec: ") + err.what());
    }
    return spec;
}

inline DeviceSpec load_device_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open device spec '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_device_spec(buf.str());
}

/// Dense serialization; doubles are written with round-trip precision.
inline std::string dump_device_spec(const DeviceSpec& spec) {
    nlohmann::ordered_json doc;
    doc["n_guides"] = spec.n_guides;
    doc["n_electrodes"] = spec.n_electrodes;
    doc["coupling_length"] = spec.coupling_length;
    doc["voltage_limit"] = spec.voltage_limit;
    doc["base_beta"] = detail::to_json(spec.base_beta);
    doc["base_coupling"] = detail::to_json(spec.base_coupling);
    doc["beta_sensitivity"] = detail::to_json(spec.beta_sensitivity);
    doc["coupling_sensitivity"] = detail::to_json(spec.coupling_sensitivity);
    return doc.dump(2) + "\n";
}

inline void save_device_spec(const DeviceSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write device spec '" + path + "'");
    out << dump_device_spec(spec);
}

}  // namespace wgarray
