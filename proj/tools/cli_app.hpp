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

// Command-line front end. Every command writes its results plus a
// manifest.json into --out; `replay` re-runs a manifest.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wgarray/wgarray.hpp"

namespace wgarray::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kValidation = 3, kNumerical = 4 };

inline constexpr const char* kDeviceEnv = "WGARRAY_DEVICE";

/// A usage problem detected after CLI11 has finished parsing.
class UsageError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

namespace detail {

namespace fs = std::filesystem;

inline std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::string cleaned = text;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + ": '" + tok + "' is not a number");
        }
    }
    return out;
}

struct Run {
    std::string command;
    std::vector<std::string> argv;
    fs::path out_dir;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();

    void emit(const std::string& name, const std::string& contents) {
        io::write_file((out_dir / name).string(), contents);
        outputs.push_back(name);
    }

    std::string read_input(const std::string& path) {
        inputs.push_back(fs::absolute(path).string());
        return io::read_file(path);
    }

    void write_manifest() {
        nlohmann::ordered_json m;
        m["command"] = command;
        m["argv"] = argv;
        m["inputs"] = inputs;
        m["parameters"] = parameters;
        m["seed"] = seed;
        m["version"] = kVersion;
        m["outputs"] = outputs;
        io::write_file((out_dir / "manifest.json").string(), m.dump(2) + "\n");
    }
};

inline void echo_parameters(const CLI::App& sub, Run& run) {
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->count() == 0 || opt->get_name() == "--help") continue;
        const auto& res = opt->results();
        std::string joined;
        for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? "," : "") + res[i];
        if (joined.empty()) joined = "true";
        run.parameters[opt->get_name()] = joined;
    }
}

inline DeviceSpec resolve_device(const std::string& path, Run& run) {
    std::string chosen = path;
    if (chosen.empty()) {
        if (const char* env = std::getenv(kDeviceEnv); env && *env) chosen = env;
    }
    if (chosen.empty()) return default_device();
    auto spec = parse_device_spec(run.read_input(chosen));
    run.parameters["device_file"] = fs::absolute(chosen).string();
    return spec;
}

inline VoltageConfig resolve_voltages(const std::string& path, const DeviceSpec& spec, Run& run) {
    if (path.empty()) return VoltageConfig::zeros(spec.n_electrodes);
    auto v = io::parse_voltages(run.read_input(path));
    if (v.volts.size() != spec.n_electrodes) {
        throw ValidationError("voltage file '" + path + "' has " + std::to_string(v.volts.size()) +
                              " entries, device has " + std::to_string(spec.n_electrodes) + " electrodes");
    }
    const auto report = validate_voltages(spec, v);
    if (!report.ok()) {
        const auto& bad = report.violations.front();
        throw VoltageBoundError(bad.electrode.number, bad.volts, spec.voltage_limit);
    }
    return v;
}

inline std::string fmt_length(double mm) {
    std::string s = io::num(mm);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

}  // namespace detail

/**
 * Runs one command. `args` excludes the program name. Returns the process
 * exit code; diagnostics go to `err`, summaries to `out`.
 */
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    namespace fs = std::filesystem;
    CLI::App app{"wgarray: simulate and program reconfigurable waveguide arrays", "wgarray"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // Shared option storage.
    std::string device_path, voltages_path, out_dir = ".", fixed_path, electrodes, range = "-10,10";
    std::string scan_range, scan_input, gates = "XX", config_name, lengths, manifest_path;
    int input_guide = 0, profile_steps = 0, pair_k = 1, modes = 0, restarts = 100;
    double length_override = 0.0, step = 0.5, scan_step = 0.0, eta = -1.0, baseline = 1000.0, slope = 0.0,
           center = 0.0, width = default_coherence_width_mm(), vis_factor = 1.0, per_mzi = kDefaultMziLossDb,
           length_cm = 2.4, db_per_cm = kDefaultPropagationLossDbPerCm, solve_eta = -1.0, max_leak = 100.0;
    std::uint64_t seed = 0;
    bool fit = false, noise = false;

    auto common = [&](CLI::App* sub, bool with_device = true) {
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Random seed (default 0)")->capture_default_str();
        if (with_device) sub->add_option("--device", device_path, std::string("Device spec JSON (or $") + kDeviceEnv + ")");
    };

    auto* sim = app.add_subcommand("simulate", "Output powers, unitary and optional propagation profile");
    common(sim);
    sim->add_option("--voltages", voltages_path, "Electrode voltages file (default all zero)");
    sim->add_option("--input-guide", input_guide, "Input waveguide (1-based)")->required();
    sim->add_option("--profile", profile_steps, "Emit a propagation profile with this many z samples");
    sim->add_option("--length", length_override, "Override the coupling length (mm)");

    auto* map = app.add_subcommand("map", "Reflectivity/leakage lookup map over two electrodes");
    common(map);
    map->add_option("--pair", pair_k, "First guide of the subcircuit (k, k+1)")->capture_default_str();
    map->add_option("--electrodes", electrodes, "Swept electrodes a,b")->required();
    map->add_option("--range", range, "Voltage range lo,hi")->capture_default_str();
    map->add_option("--step", step, "Voltage step")->capture_default_str();
    map->add_option("--fixed", fixed_path, "Voltages file for the electrodes that are not swept");
    map->add_option("--solve", solve_eta, "Also search the map for this reflectivity");
    map->add_option("--max-leakage", max_leak, "Leakage bound (percent) for --solve")->capture_default_str();

    auto* hom = app.add_subcommand("hom", "Synthesize and/or fit a HOM delay scan");
    common(hom);
    hom->add_option("--eta", eta, "Coupler reflectivity (instead of --device)");
    hom->add_option("--voltages", voltages_path, "Voltages when the reflectivity comes from --device");
    hom->add_option("--pair", pair_k, "Subcircuit when the reflectivity comes from --device")->capture_default_str();
    hom->add_option("--scan", scan_range, "Delay range lo,hi in mm");
    hom->add_option("--step", scan_step, "Delay step in mm");
    hom->add_option("--input", scan_input, "Fit an existing scan CSV instead of simulating");
    hom->add_option("--baseline", baseline, "Coincidences per window away from the dip")->capture_default_str();
    hom->add_option("--slope", slope, "Baseline slope per mm")->capture_default_str();
    hom->add_option("--center", center, "Dip center (mm)")->capture_default_str();
    hom->add_option("--width", width, "Gaussian width of the dip (mm)")->capture_default_str();
    hom->add_option("--visibility-factor", vis_factor, "Photon overlap factor in [0,1]")->capture_default_str();
    hom->add_flag("--noise", noise, "Draw Poisson counts from --seed");
    hom->add_flag("--fit", fit, "Fit the dip and write fit.json");

    auto* comp = app.add_subcommand("compile", "Optimize voltages for two parallel single-qubit gates");
    common(comp);
    comp->add_option("--config", config_name, "Electrode configuration")
        ->required()
        ->check(CLI::IsMember({"1", "2", "3", "config1", "config2", "config3"}));
    comp->add_option("--gates", gates, "Target gates, one letter per subcircuit from I/H/X")->capture_default_str();
    comp->add_option("--restarts", restarts, "Random restarts")->capture_default_str()->check(CLI::PositiveNumber);
    comp->add_option("--lengths", lengths, "Comma-separated chip lengths (mm) to sweep");
    std::optional<std::uint64_t> random_device;
    comp->add_option("--random-device", random_device, "Use a random static device drawn from this seed");

    auto* loss = app.add_subcommand("loss", "Clements mesh vs waveguide array loss budget");
    loss->add_option("--out", out_dir, "Output directory")->capture_default_str();
    loss->add_option("--seed", seed, "Unused; recorded in the manifest")->capture_default_str();
    loss->add_option("--modes", modes, "Number of modes")->required();
    loss->add_option("--per-mzi", per_mzi, "Loss per MZI (dB)")->capture_default_str();
    loss->add_option("--length-cm", length_cm, "Array length (cm)")->capture_default_str();
    loss->add_option("--db-per-cm", db_per_cm, "Propagation loss (dB/cm)")->capture_default_str();

    auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay->add_option("--manifest", manifest_path, "manifest.json to replay")->required();
    replay->add_option("--out", out_dir, "Output directory for the replay")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion& e) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        // Subcommand help surfaces as a ParseError with exit code 0.
        if (e.get_exit_code() == 0) {
            for (auto* sub : app.get_subcommands()) out << sub->help();
            return kOk;
        }
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    CLI::App* chosen = app.get_subcommands().front();
    detail::Run rec;
    rec.command = chosen->get_name();
    rec.argv = args;
    rec.seed = seed;

    try {
        if (chosen == replay) {
            const auto manifest = nlohmann::json::parse(io::read_file(manifest_path));
            std::vector<std::string> replay_args = manifest.at("argv").get<std::vector<std::string>>();
            bool replaced = false;
            for (std::size_t i = 0; i + 1 < replay_args.size(); ++i) {
                if (replay_args[i] == "--out") {
                    replay_args[i + 1] = out_dir;
                    replaced = true;
                }
            }
            for (auto& a : replay_args) {
                if (a.rfind("--out=", 0) == 0) {
                    a = "--out=" + out_dir;
                    replaced = true;
                }
            }
            if (!replaced) {
                replay_args.push_back("--out");
                replay_args.push_back(out_dir);
            }
            return run(replay_args, out, err);
        }

        rec.out_dir = out_dir;
        fs::create_directories(rec.out_dir);
        detail::echo_parameters(*chosen, rec);

        if (chosen == sim) {
            auto spec = detail::resolve_device(device_path, rec);
            if (length_override != 0.0) spec.coupling_length = length_override;
            validate(spec);
            const auto v = detail::resolve_voltages(voltages_path, spec, rec);
            const auto h = build_hamiltonian(spec, v);
            const auto u = unitary(h, spec.coupling_length);
            const auto p = output_power(u, Guide{input_guide});
            rec.emit("power.csv", io::power_csv(p));
            rec.emit("unitary.csv", io::unitary_csv(u.matrix));
            if (profile_steps != 0) {
                rec.emit("profile.csv",
                         io::profile_csv(propagation_profile(h, spec.coupling_length, profile_steps, Guide{input_guide})));
            }
            out << "simulate: " << spec.n_guides << " guides, L = " << io::num(spec.coupling_length)
                << " mm, input WG" << input_guide << "\n";
        } else if (chosen == map) {
            const auto spec = detail::resolve_device(device_path, rec);
            const auto ab = detail::parse_list(electrodes, "--electrodes");
            const auto lohi = detail::parse_list(range, "--range");
            if (ab.size() != 2) throw UsageError("--electrodes needs exactly two values a,b");
            if (lohi.size() != 2) throw UsageError("--range needs lo,hi");
            const auto fixed = detail::resolve_voltages(fixed_path, spec, rec);
            const auto grid = voltage_grid(lohi[0], lohi[1], step);
            const auto m = build_lookup_map(spec, SubcircuitPair{pair_k}, Electrode{static_cast<int>(ab[0])},
                                            Electrode{static_cast<int>(ab[1])}, grid, grid, fixed);
            rec.emit("map.csv", io::map_csv(m));
            rec.emit("map_meta.json", io::map_metadata(m).dump(2) + "\n");
            out << "map: " << m.grid_a.size() << " x " << m.grid_b.size() << " cells\n";
            if (solve_eta >= 0.0) {
                const auto sol = solve_voltage(m, solve_eta, max_leak);
                nlohmann::ordered_json j;
                j["target_eta"] = solve_eta;
                j["max_leakage"] = max_leak;
                j["found"] = sol.found();
                const auto& cell = sol.found() ? sol.cell : sol.best_infeasible;
                if (cell) {
                    j[sol.found() ? "solution" : "best_infeasible"] = {
                        {"v_a", cell->v_a},   {"v_b", cell->v_b},
                        {"eta", cell->eta},   {"leak_in1", cell->leakage_in1},
                        {"leak_in2", cell->leakage_in2}};
                }
                rec.emit("solution.json", j.dump(2) + "\n");
            }
        } else if (chosen == hom) {
            HomScan scan;
            double eta_used = eta;
            if (!scan_input.empty()) {
                scan = io::parse_scan_csv(rec.read_input(scan_input));
            } else {
                if (scan_range.empty() || scan_step <= 0.0) throw UsageError("hom needs --scan lo,hi and --step > 0 (or --input)");
                const auto lohi = detail::parse_list(scan_range, "--scan");
                if (lohi.size() != 2 || !(lohi[1] > lohi[0])) throw UsageError("--scan needs lo,hi with hi > lo");
                if (eta < 0.0) {
                    if (device_path.empty() && !std::getenv(kDeviceEnv)) {
                        throw UsageError("hom needs --eta or --device");
                    }
                    const auto spec = detail::resolve_device(device_path, rec);
                    const auto v = detail::resolve_voltages(voltages_path, spec, rec);
                    eta_used = effective_reflectivity(device_unitary(spec, v), SubcircuitPair{pair_k});
                }
                HomScanModel model;
                model.eta = eta_used;
                model.baseline_rate = baseline;
                model.slope = slope;
                model.dip_center = center;
                model.coherence_width = width;
                model.visibility_factor = vis_factor;
                const auto n = static_cast<int>(std::floor((lohi[1] - lohi[0]) / scan_step + 1e-9)) + 1;
                std::vector<double> delays(n);
                for (int i = 0; i < n; ++i) delays[i] = lohi[0] + scan_step * i;
                scan = simulate_hom_scan(model, delays, noise ? std::optional<std::uint64_t>(seed) : std::nullopt);
                rec.emit("scan.csv", io::scan_csv(scan));
                out << "hom: eta = " << io::num(eta_used) << ", ideal visibility " << io::num(ideal_visibility(eta_used))
                    << "\n";
            }
            if (fit || !scan_input.empty()) {
                const auto f = fit_hom_dip(scan);
                rec.emit("fit.json", io::to_json(f).dump(2) + "\n");
                out << "fit: visibility " << io::num(f.visibility) << " +- " << io::num(f.visibility_error) << "\n";
            }
        } else if (chosen == comp) {
            const auto spec = random_device ? random_static_device(*random_device)
                                            : detail::resolve_device(device_path, rec);
            const auto config = electrode_config(config_name, spec);
            if (gates.size() != 2) throw UsageError("--gates needs two letters, e.g. XX");
            GateTargets targets{two_mode_unitary(gate_reflectivity(parse_gate(gates[0]))),
                                two_mode_unitary(gate_reflectivity(parse_gate(gates[1])))};
            if (lengths.empty()) {
                const auto r = optimize_parallel_gates(spec, config, targets, restarts, seed);
                rec.emit("result.json", io::to_json(r, config).dump(2) + "\n");
                rec.emit("trace.csv", io::trace_csv(r));
                out << "compile: " << config.name << " objective " << io::num(r.objective()) << "\n";
            } else {
                const auto ls = detail::parse_list(lengths, "--lengths");
                if (ls.empty()) throw UsageError("--lengths is empty");
                const auto sweep = sweep_chip_length(spec, config, targets, ls, restarts, seed);
                std::ostringstream summary;
                summary << "length_mm,objective,fidelity1,fidelity2,crosstalk1,crosstalk2,leakage1,leakage2\n";
                for (const auto& e : sweep) {
                    const auto tag = detail::fmt_length(e.length);
                    rec.emit("result_L" + tag + ".json", io::to_json(e.result, config).dump(2) + "\n");
                    rec.emit("trace_L" + tag + ".csv", io::trace_csv(e.result));
                    const auto& t = e.result.terms;
                    summary << io::num(e.length) << "," << io::num(t.value) << "," << io::num(t.fidelity[0]) << ","
                            << io::num(t.fidelity[1]) << "," << io::num(t.crosstalk[0]) << ","
                            << io::num(t.crosstalk[1]) << "," << io::num(t.leakage[0]) << ","
                            << io::num(t.leakage[1]) << "\n";
                }
                rec.emit("sweep.csv", summary.str());
                out << "compile: " << config.name << " swept " << sweep.size() << " lengths\n";
            }
        } else if (chosen == loss) {
            const auto r = loss_report(modes, length_cm, per_mzi, db_per_cm);
            rec.emit("loss.csv", io::loss_csv(r));
            out << io::loss_table(r);
        }
        rec.write_manifest();
        return kOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }
}

}  // namespace wgarray::cli
