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

#include "cli_app.hpp"

#include <gtest/gtest.h>

#include "json.hpp"
#include <sstream>

#include "test_util.hpp"
#include "wgarray/io.hpp"

using namespace wgarray;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const fs::path& path) {
    std::istringstream in(io::read_file(path.string()));
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::size_t columns(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

nlohmann::json json_file(const fs::path& path) { return nlohmann::json::parse(io::read_file(path.string())); }

// Every recorded output must match byte for byte after a replay.
void expect_replay_identical(const fs::path& first) {
    const auto second = first.string() + "_replay";
    fs::remove_all(second);
    const auto r = invoke({"replay", "--manifest", (first / "manifest.json").string(), "--out", second});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto manifest = json_file(first / "manifest.json");
    ASSERT_FALSE(manifest["outputs"].empty());
    for (const auto& name : manifest["outputs"]) {
        const auto n = name.get<std::string>();
        EXPECT_EQ(io::read_file((first / n).string()), io::read_file((fs::path(second) / n).string())) << n;
    }
}

}  // namespace

TEST(cli, simulate_zero_voltage) {
    const auto dir = testutil::scratch_dir("cli_sim");
    const auto r = invoke({"simulate", "--input-guide", "1", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto power = lines(dir / "power.csv");
    ASSERT_EQ(power.size(), 2u);
    EXPECT_EQ(power[0], "P1,P2,P3,P4,P5,P6,P7,P8,P9,P10,P11");
    EXPECT_EQ(columns(power[1]), 11u);
    double total = 0;
    std::istringstream row(power[1]);
    for (std::string cell; std::getline(row, cell, ',');) total += std::stod(cell);
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(lines(dir / "unitary.csv").size(), 12u);
    EXPECT_FALSE(fs::exists(dir / "profile.csv"));
    const auto m = json_file(dir / "manifest.json");
    EXPECT_EQ(m["command"], "simulate");
    EXPECT_EQ(m["version"], kVersion);
}

TEST(cli, simulate_profile) {
    const auto dir = testutil::scratch_dir("cli_profile");
    const auto r = invoke({"simulate", "--input-guide", "6", "--profile", "200", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto profile = lines(dir / "profile.csv");
    ASSERT_EQ(profile.size(), 201u);
    EXPECT_EQ(columns(profile[0]), 12u);
    EXPECT_EQ(profile[1].substr(0, 2), "0,");
}

TEST(cli, simulate_device_and_voltage_files) {
    const auto dir = testutil::scratch_dir("cli_files");
    auto spec = default_device(4, 3, 10.0);
    save_device_spec(spec, (dir / "dev.json").string());
    io::write_file((dir / "v.json").string(), "[1, -2, 3]");
    const auto r = invoke({"simulate", "--device", (dir / "dev.json").string(), "--voltages", (dir / "v.json").string(),
                        "--input-guide", "2", "--out", (dir / "run").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(columns(lines(dir / "run" / "power.csv")[1]), 4u);
    EXPECT_EQ(json_file(dir / "run" / "manifest.json")["inputs"].size(), 2u);
}

TEST(cli, simulate_rejects_bad_input) {
    const auto dir = testutil::scratch_dir("cli_bad");
    io::write_file((dir / "over.json").string(), "{\"volts\": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,12]}");
    io::write_file((dir / "short.json").string(), "[1, 2]");
    io::write_file((dir / "junk.txt").string(), "one two");
    for (const char* f : {"over.json", "short.json", "junk.txt"}) {
        const auto r = invoke({"simulate", "--voltages", (dir / f).string(), "--input-guide", "1", "--out", dir.string()});
        EXPECT_EQ(r.code, 3) << f;
        EXPECT_FALSE(r.err.empty());
    }
    EXPECT_EQ(invoke({"simulate", "--input-guide", "12", "--out", dir.string()}).code, 3);
    EXPECT_EQ(invoke({"simulate", "--out", dir.string()}).code, 2);
    EXPECT_EQ(invoke({"simulate", "--voltages", (dir / "missing.json").string(), "--input-guide", "1"}).code, 3);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
}

TEST(cli, map_small_and_full) {
    const auto dir = testutil::scratch_dir("cli_map");
    auto r = invoke({"map", "--electrodes", "1,4", "--range", "-1,1", "--step", "1", "--out", (dir / "small").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rows = lines(dir / "small" / "map.csv");
    EXPECT_EQ(rows[0], "v_a,v_b,eta,leak_in1,leak_in2");
    EXPECT_EQ(rows.size(), 10u);
    r = invoke({"map", "--electrodes", "1,4", "--solve", "0.5", "--out", (dir / "full").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(dir / "full" / "map.csv").size(), 41u * 41u + 1u);
    const auto meta = json_file(dir / "full" / "map_meta.json");
    EXPECT_FALSE(meta.empty());
    EXPECT_TRUE(fs::exists(dir / "full" / "solution.json"));
}

TEST(cli, map_rejects_out_of_limit_range) {
    const auto dir = testutil::scratch_dir("cli_map_bad");
    EXPECT_EQ(invoke({"map", "--electrodes", "1,4", "--range", "-12,12", "--out", dir.string()}).code, 3);
    EXPECT_EQ(invoke({"map", "--electrodes", "1", "--out", dir.string()}).code, 2);
    EXPECT_EQ(invoke({"map", "--electrodes", "1,1", "--out", dir.string()}).code, 3);
}

TEST(cli, hom_fit) {
    const auto dir = testutil::scratch_dir("cli_hom");
    auto r = invoke({"hom", "--eta", "0.5", "--scan", "-0.4,0.4", "--step", "0.01", "--fit", "--out",
                  (dir / "half").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json_file(dir / "half" / "fit.json")["a2"].get<double>(), 1.0, 1e-6);
    r = invoke({"hom", "--eta", "1", "--scan", "-0.4,0.4", "--step", "0.01", "--fit", "--out", (dir / "one").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json_file(dir / "one" / "fit.json")["a2"].get<double>(), 0.0, 1e-6);
    // Refit the written scan.
    r = invoke({"hom", "--input", (dir / "half" / "scan.csv").string(), "--fit", "--out", (dir / "refit").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json_file(dir / "refit" / "fit.json")["a2"].get<double>(), 1.0, 1e-6);
}

TEST(cli, hom_requires_scan) {
    const auto dir = testutil::scratch_dir("cli_hom_bad");
    EXPECT_EQ(invoke({"hom", "--eta", "0.5", "--fit", "--out", dir.string()}).code, 2);
    EXPECT_EQ(invoke({"hom", "--eta", "1.5", "--scan", "-1,1", "--step", "0.1", "--out", dir.string()}).code, 3);
}

TEST(cli, compile) {
    const auto dir = testutil::scratch_dir("cli_compile");
    EXPECT_EQ(invoke({"compile", "--config", "7", "--out", dir.string()}).code, 2);
    EXPECT_EQ(invoke({"compile", "--config", "config4", "--out", dir.string()}).code, 2);
    auto r = invoke({"compile", "--config", "1", "--restarts", "2", "--out", (dir / "one").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(dir / "one" / "trace.csv").size(), 3u);
    const auto result = json_file(dir / "one" / "result.json");
    EXPECT_TRUE(result.contains("objective"));
    r = invoke({"compile", "--config", "config1", "--restarts", "1", "--lengths", "10,100,200", "--out",
             (dir / "sweep").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    int results = 0;
    for (const auto& e : fs::directory_iterator(dir / "sweep")) {
        if (e.path().filename().string().rfind("result_L", 0) == 0) ++results;
    }
    EXPECT_EQ(results, 3);
    EXPECT_EQ(lines(dir / "sweep" / "sweep.csv").size(), 4u);
}

TEST(cli, loss) {
    const auto dir = testutil::scratch_dir("cli_loss");
    const auto r = invoke({"loss", "--modes", "11", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("55"), std::string::npos);
    EXPECT_NE(r.out.find("2.2"), std::string::npos);
    EXPECT_NE(r.out.find("0.24"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "loss.csv"));
    EXPECT_EQ(invoke({"loss", "--modes", "1", "--out", dir.string()}).code, 3);
}

TEST(cli, help_and_version) {
    EXPECT_EQ(invoke({"--help"}).code, 0);
    EXPECT_EQ(invoke({"--version"}).out, std::string(kVersion) + "\n");
    EXPECT_EQ(invoke({}).code, 2);
}

TEST(cli, replay_is_byte_identical) {
    const auto dir = testutil::scratch_dir("cli_replay");
    ASSERT_EQ(invoke({"map", "--electrodes", "1,4", "--range", "-2,2", "--out", (dir / "map").string()}).code, 0);
    expect_replay_identical(dir / "map");
    ASSERT_EQ(invoke({"hom", "--eta", "0.8", "--scan", "-0.3,0.3", "--step", "0.02", "--noise", "--seed", "9", "--fit",
                   "--out", (dir / "hom").string()})
                  .code,
              0);
    expect_replay_identical(dir / "hom");
    ASSERT_EQ(invoke({"compile", "--config", "2", "--restarts", "2", "--seed", "4", "--random-device", "3", "--out",
                   (dir / "compile").string()})
                  .code,
              0);
    expect_replay_identical(dir / "compile");
    EXPECT_EQ(invoke({"replay", "--manifest", (dir / "nope.json").string(), "--out", dir.string()}).code, 3);
}
