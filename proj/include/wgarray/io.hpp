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

// CSV and JSON record formats shared by the CLI and the tests.

#include <Eigen/Dense>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wgarray/analysis.hpp"
#include "wgarray/calibration.hpp"
#include "wgarray/compiler.hpp"
#include "wgarray/device_model.hpp"
#include "wgarray/errors.hpp"
#include "wgarray/evolution.hpp"
#include "wgarray/photon_stats.hpp"
#include "wgarray/subcircuits.hpp"

namespace wgarray::io {

/// Shortest text that reads back to the same double.
inline std::string num(double x) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

inline std::string power_csv(const Eigen::VectorXd& powers) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < powers.size(); ++i) out << (i ? "," : "") << "P" << i + 1;
    out << "\n";
    for (Eigen::Index i = 0; i < powers.size(); ++i) out << (i ? "," : "") << num(powers(i));
    out << "\n";
    return out.str();
}

inline std::string profile_csv(const IntensityProfile& profile) {
    std::ostringstream out;
    out << "z_mm";
    for (Eigen::Index i = 0; i < profile.intensities.cols(); ++i) out << ",P" << i + 1;
    out << "\n";
    for (std::size_t k = 0; k < profile.z_points.size(); ++k) {
        out << num(profile.z_points[k]);
        for (Eigen::Index i = 0; i < profile.intensities.cols(); ++i) {
            out << "," << num(profile.intensities(static_cast<Eigen::Index>(k), i));
        }
        out << "\n";
    }
    return out.str();
}

/// Row-major, each entry as a (re, im) column pair.
inline std::string unitary_csv(const Eigen::MatrixXcd& u) {
    std::ostringstream out;
    for (Eigen::Index c = 0; c < u.cols(); ++c) out << (c ? "," : "") << "c" << c + 1 << "_re,c" << c + 1 << "_im";
    out << "\n";
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
            out << (c ? "," : "") << num(u(r, c).real()) << "," << num(u(r, c).imag());
        }
        out << "\n";
    }
    return out.str();
}

inline std::string scan_csv(const HomScan& scan) {
    std::ostringstream out;
    out << "delay_mm,counts\n";
    for (std::size_t i = 0; i < scan.delays.size(); ++i) out << num(scan.delays[i]) << "," << num(scan.counts[i]) << "\n";
    return out.str();
}

namespace detail {
inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

inline double to_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(context + ": '" + s + "' is not a number");
    }
}
}  // namespace detail

inline HomScan parse_scan_csv(const std::string& text, double integration_seconds = 60.0) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("scan CSV is empty");
    HomScan scan;
    scan.integration_seconds = integration_seconds;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != 2) throw ParseError("scan CSV row " + std::to_string(row) + ": expected 2 columns");
        scan.delays.push_back(detail::to_double(cells[0], "scan CSV row " + std::to_string(row)));
        scan.counts.push_back(detail::to_double(cells[1], "scan CSV row " + std::to_string(row)));
    }
    try {
        validate(scan);
    } catch (const ValidationError& e) {
        throw ParseError(std::string("scan CSV: ") + e.what());
    }
    return scan;
}

/// Voltages as a JSON array, a JSON object {"volts": [...]}, or plain
/// numbers separated by commas and/or whitespace.
inline VoltageConfig parse_voltages(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    std::vector<double> volts;
    if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("voltage file is not valid JSON: ") + e.what());
        }
        if (doc.is_object()) {
            if (!doc.contains("volts")) throw ParseError("voltage file: missing \"volts\"");
            doc = doc["volts"];
        }
        if (!doc.is_array()) throw ParseError("voltage file: expected an array of numbers");
        for (const auto& x : doc) {
            if (!x.is_number()) throw ParseError("voltage file: non-numeric entry");
            volts.push_back(x.get<double>());
        }
    } else {
        std::string cleaned = text;
        for (char& c : cleaned) {
            if (c == ',' || c == ';') c = ' ';
        }
        std::istringstream in(cleaned);
        std::string tok;
        while (in >> tok) volts.push_back(detail::to_double(tok, "voltage file"));
    }
    return {Eigen::Map<const Eigen::VectorXd>(volts.data(), static_cast<Eigen::Index>(volts.size()))};
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << contents;
}

inline nlohmann::ordered_json to_json(const DipFit& fit) {
    nlohmann::ordered_json j;
    for (int i = 0; i < 5; ++i) j["a" + std::to_string(i)] = fit.a[i];
    j["visibility"] = fit.visibility;
    j["visibility_error"] = fit.visibility_error;
    j["residual"] = fit.residual;
    j["iterations"] = fit.iterations;
    return j;
}

inline std::string truth_table_csv(const TruthTable& t) {
    static const char* labels[] = {"00", "01", "10", "11"};
    std::ostringstream out;
    out << "in,out00,out01,out10,out11\n";
    for (int i = 0; i < 4; ++i) {
        out << labels[i];
        for (int j = 0; j < 4; ++j) out << "," << num(t.table(i, j));
        out << "\n";
    }
    return out.str();
}

inline std::string map_csv(const LookupMap& map) {
    std::ostringstream out;
    out << "v_a,v_b,eta,leak_in1,leak_in2\n";
    for (Eigen::Index i = 0; i < map.eta.rows(); ++i) {
        for (Eigen::Index j = 0; j < map.eta.cols(); ++j) {
            out << num(map.grid_a[i]) << "," << num(map.grid_b[j]) << "," << num(map.eta(i, j)) << ","
                << num(map.leakage_in1(i, j)) << "," << num(map.leakage_in2(i, j)) << "\n";
        }
    }
    return out.str();
}

inline nlohmann::ordered_json map_metadata(const LookupMap& map) {
    nlohmann::ordered_json j;
    j["electrode_a"] = map.electrode_a.number;
    j["electrode_b"] = map.electrode_b.number;
    j["pair"] = {map.pair.k, map.pair.k + 1};
    j["grid_a"] = map.grid_a;
    j["grid_b"] = map.grid_b;
    j["fixed_voltages"] = std::vector<double>(map.fixed_voltages.volts.data(),
                                              map.fixed_voltages.volts.data() + map.fixed_voltages.volts.size());
    return j;
}

inline nlohmann::ordered_json to_json(const CompileResult& r, const ElectrodeConfig& config) {
    nlohmann::ordered_json j;
    j["config"] = config.name;
    j["active_electrodes"] = config.active_electrodes;
    j["pairs"] = {{config.pairs[0].k, config.pairs[0].k + 1}, {config.pairs[1].k, config.pairs[1].k + 1}};
    j["coupling_length_mm"] = r.coupling_length;
    j["objective"] = r.objective();
    j["best_voltages"] =
        std::vector<double>(r.best_voltages.volts.data(), r.best_voltages.volts.data() + r.best_voltages.volts.size());
    j["fidelity"] = r.terms.fidelity;
    j["crosstalk"] = r.terms.crosstalk;
    j["leakage"] = r.terms.leakage;
    j["restarts"] = r.restart_trace.size();
    return j;
}

inline std::string trace_csv(const CompileResult& r) {
    std::ostringstream out;
    out << "restart,objective,best_so_far\n";
    const auto best = r.best_so_far();
    for (std::size_t i = 0; i < r.restart_trace.size(); ++i) {
        out << i + 1 << "," << num(r.restart_trace[i]) << "," << num(best[i]) << "\n";
    }
    return out.str();
}

inline std::string loss_csv(const LossReport& r) {
    std::ostringstream out;
    out << "n_modes,mzi_count,mzi_depth,per_mzi_db,clements_loss_db,wa_length_cm,db_per_cm,wa_loss_db\n";
    out << r.n_modes << "," << r.mzi_count << "," << r.mzi_depth << "," << num(r.per_mzi_db) << ","
        << num(r.clements_loss_db) << "," << num(r.wa_length_cm) << "," << num(r.db_per_cm) << ","
        << num(r.wa_loss_db) << "\n";
    return out.str();
}

inline std::string loss_table(const LossReport& r) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "modes" << r.n_modes << "\n"
        << std::setw(28) << "Clements MZI count" << r.mzi_count << "\n"
        << std::setw(28) << "Clements depth" << r.mzi_depth << "\n"
        << std::setw(28) << "loss per MZI (dB)" << num(r.per_mzi_db) << "\n"
        << std::setw(28) << "Clements total loss (dB)" << num(r.clements_loss_db) << "\n"
        << std::setw(28) << "WA length (cm)" << num(r.wa_length_cm) << "\n"
        << std::setw(28) << "WA loss rate (dB/cm)" << num(r.db_per_cm) << "\n"
        << std::setw(28) << "WA propagation loss (dB)" << num(r.wa_loss_db) << "\n"
        << "note: " << r.note << "\n";
    return out.str();
}

}  // namespace wgarray::io
