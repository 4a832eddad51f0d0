// Copyright 2026 The readoutchar Authors
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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "readoutchar/cli.hpp"

namespace readout {
namespace {

namespace fs = std::filesystem;

const fs::path kSource = READOUTCHAR_SOURCE_DIR;

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() /
                ("readoutchar_" + std::string(info->test_suite_name()) + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        fs::remove_all(path_);
    }
    const fs::path &path() const {
        return path_;
    }
    fs::path write(const std::string &name, const std::string &text) const {
        write_text_file(path_ / name, text);
        return path_ / name;
    }

  private:
    fs::path path_;
};

std::string device_json(const std::string &extra = "") {
    return R"({"name": "q0", "omega_r": 43982.297150257104, "chi": 1.0, "kappa": 4.0, "eta": 0.5, "nbar": 1.0)" +
           extra + "}";
}

RunConfig parse(const std::string &text) {
    return parse_config_text(text);
}

void expect_violation(const std::string &text, const std::string &message) {
    try {
        parse(text);
        FAIL() << "accepted: " << text;
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::schema_violation);
        EXPECT_NE(e.detail().find(message), std::string::npos) << e.detail();
    }
}

int cli(std::vector<std::string> args, std::string *out_text = nullptr) {
    args.insert(args.begin(), "readoutchar");
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    if (out_text != nullptr) {
        *out_text = out.str() + err.str();
    }
    return code;
}

// ---------------------------------------------------------------------------
// configuration

TEST(Config, DeviceDefaults) {
    const auto c = parse(R"({"master_seed": 3, "devices": [)" + device_json() + "]}");
    ASSERT_EQ(c.devices.size(), 1u);
    const auto &d = c.devices[0];
    EXPECT_EQ(d.name, "q0");
    EXPECT_EQ(d.truth.kappa, 4.0);
    EXPECT_EQ(d.omega_op, d.truth.omega_r);
    EXPECT_EQ(d.design_chi, 1.0);
    EXPECT_EQ(d.design_kappa, 4.0);
    EXPECT_EQ(c.master_seed, 3u);
    EXPECT_EQ(c.output_dir, "out");
    EXPECT_EQ(c.settings.sweep_points, PipelineSettings{}.sweep_points);
    EXPECT_EQ(c.settings.tolerance, 0.10);
    EXPECT_EQ(c.readout.weights, "matched");
}

TEST(Config, UnnamedDevicesAreNumbered) {
    const auto c = parse(R"({"master_seed": 3, "devices": [
        {"omega_r": 100, "chi": 1, "kappa": 4, "eta": 0.5, "nbar": 1},
        {"omega_r": 100, "chi": 1, "kappa": 4, "eta": 0.5, "nbar": 1}]})");
    EXPECT_EQ(c.devices[0].name, "ch0");
    EXPECT_EQ(c.devices[1].name, "ch1");
}

TEST(Config, SettingsOverride) {
    const auto c = parse(R"({"master_seed": 1, "devices": [)" + device_json() +
                         R"(], "settings": {"sweep_points": 21, "tolerance": 0.2},
                         "readout": {"iq_shots": 500, "weights": "boxcar"}})");
    EXPECT_EQ(c.settings.sweep_points, 21u);
    EXPECT_EQ(c.settings.tolerance, 0.2);
    EXPECT_EQ(c.readout.iq_shots, 500u);
    EXPECT_EQ(c.readout.weights, "boxcar");
}

TEST(Config, ViolationsNameTheField) {
    expect_violation(R"({"master_seed": 1, "devices": [)" + device_json(R"(, "kappa": -1)") + "]}",
                     "devices[0].kappa: must be > 0");
    expect_violation(R"({"master_seed": 1, "devices": [{"omega_r": 1, "chi": 1, "kappa": 0, "eta": 0.5, "nbar": 1}]})",
                     "devices[0].kappa: must be > 0");
    expect_violation(R"({"master_seed": 1, "devices": [{"omega_r": 1, "chi": 1, "kappa": 1, "eta": 1.5, "nbar": 1}]})",
                     "devices[0].eta");
    expect_violation(R"({"master_seed": 1, "devices": [)" + device_json(R"(, "colour": 1)") + "]}",
                     "devices[0].colour: unknown field");
    expect_violation(R"({"master_seed": 1, "devices": [{"omega_r": 1, "kappa": 1, "eta": 0.5, "nbar": 1}]})",
                     "devices[0].chi: required field is missing");
    expect_violation(R"({"devices": [)" + device_json() + "]}", "master_seed: required field is missing");
    expect_violation(R"({"master_seed": -4, "devices": [)" + device_json() + "]}", "master_seed");
    expect_violation(R"({"master_seed": 1})", "exactly one of devices, grid or chip");
    expect_violation(R"({"master_seed": 1, "devices": [)" + device_json() + "," + device_json() + "]}",
                     "devices[1].name: duplicate device name");
    expect_violation(R"({"master_seed": 1, "protocol": "tarot", "devices": [)" + device_json() + "]}",
                     "unknown protocol 'tarot'");
    expect_violation(R"({"master_seed": 1, "devices": [)" + device_json() + R"(], "settings": {"sweep_points": 3}})",
                     "settings.sweep_points");
    expect_violation(R"({"master_seed": 1, "devices": [)" + device_json() + R"(], "settings": {"bogus": 3}})",
                     "settings.bogus: unknown field");
    expect_violation("{not json", "<root>: not valid JSON");
    expect_violation("[1, 2]", "<root>: must be an object");
}

TEST(Config, MissingFileIsConfigError) {
    try {
        load_config("/nonexistent/readoutchar.json");
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::schema_violation);
    }
}

TEST(Config, ShippedConfigsParse) {
    for (const char *name : {"single_device.json", "acceptance_grid.json", "chip54.json", "quick.json"}) {
        EXPECT_NO_THROW(load_config((kSource / "configs" / name).string())) << name;
    }
}

TEST(Config, GridExpansion) {
    const auto c = load_config((kSource / "configs" / "acceptance_grid.json").string());
    ASSERT_TRUE(c.grid);
    ASSERT_EQ(c.devices.size(), 54u);
    // kappa is the outermost loop.
    for (std::size_t i = 0; i < 18; ++i) {
        EXPECT_EQ(c.devices[i].truth.kappa, 2.0);
        EXPECT_EQ(c.devices[36 + i].truth.kappa, 8.0);
    }
    EXPECT_EQ(c.devices[0].name, "grid0");
    EXPECT_EQ(c.devices[53].name, "grid53");
    for (const auto &d : c.devices) {
        EXPECT_EQ(d.design_chi, d.truth.chi);
    }
}

TEST(Config, ChipSection) {
    const auto c = load_config((kSource / "configs" / "chip54.json").string());
    ASSERT_TRUE(c.chip);
    EXPECT_EQ(c.chip->channels, 54u);
    EXPECT_EQ(c.chip->kappa_spread, 2.0);
    EXPECT_TRUE(c.devices.empty());
}

// ---------------------------------------------------------------------------
// serialization

TEST(Format, AtLeastFifteenDigitsAndRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.100000000000000");
    EXPECT_EQ(format_number(1.0), "1.00000000000000");
    EXPECT_EQ(format_number(-2.5e-7), "-2.50000000000000e-07");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, 20.0 * u(rng));
        const std::string s = format_number(v);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
        // The mantissa always carries at least 15 significant digits.
        std::size_t digits = 0;
        for (char ch : s.substr(0, s.find('e'))) {
            digits += std::isdigit(static_cast<unsigned char>(ch)) ? 1 : 0;
        }
        EXPECT_GE(digits, 15u) << s;
    }
}

TEST(Serialize, RoundTripAndStability) {
    json j;
    j["b"] = 1.0 / 7.0;
    j["a"] = {{"list", {1.5, 2.0, -3.25}}, {"nested", json::array({json{{"x", 0.1}}, json{{"x", 0.2}}})}};
    j["missing"] = std::nan("");
    j["count"] = 42;
    j["name"] = "q\"0";
    const std::string text = serialize_report(j);
    // Keys are sorted and NaN becomes null.
    EXPECT_LT(text.find("\"a\""), text.find("\"b\""));
    EXPECT_NE(text.find("\"missing\": null"), std::string::npos);
    EXPECT_NE(text.find("[1.50000000000000, 2.00000000000000, -3.25000000000000]"), std::string::npos);
    const json back = parse_report(text);
    EXPECT_EQ(back["b"].get<double>(), 1.0 / 7.0);
    EXPECT_EQ(back["count"].get<int>(), 42);
    EXPECT_EQ(back["name"].get<std::string>(), "q\"0");
    EXPECT_TRUE(back["missing"].is_null());
    EXPECT_EQ(serialize_report(back), text);
}

TEST(Serialize, TraceHeader) {
    const std::string csv = serialize_trace({{1.0, "0", "phase", 0.5, 0.01}});
    EXPECT_EQ(csv, "sweep_value,state,observable,value,stderr\n"
                   "1.00000000000000,0,phase,0.500000000000000,0.0100000000000000\n");
}

TEST(Serialize, ErrorReportCarriesReason) {
    const json j = error_report("validate", Error(ErrorCode::schema_violation, "devices[0].kappa: must be > 0"));
    EXPECT_EQ(j["status"], "error");
    EXPECT_EQ(j["reason"], "schema_violation");
    EXPECT_EQ(j["message"], "devices[0].kappa: must be > 0");
}

// ---------------------------------------------------------------------------
// command line

TEST(Cli, PredictSnr) {
    TempDir tmp;
    const auto out = tmp.path() / "out";
    ASSERT_EQ(cli({"predict-snr", "--config", (kSource / "configs/single_device.json").string(), "--out",
                   out.string()}),
              kExitOk);
    const json r = parse_report(slurp(out / "report.json"));
    EXPECT_EQ(r["status"], "ok");
    EXPECT_EQ(r["command"], "predict-snr");
    const auto &ch = r["channels"][0];
    const double snr = ch["snr"].get<double>();
    EXPECT_NEAR(snr * snr, 4.0 * 0.5 * ch["d_exponent"].get<double>(), 1e-12 * snr * snr);
    EXPECT_LE(ch["snr_boxcar"].get<double>(), snr);
    EXPECT_TRUE(fs::exists(out / "run_info.json"));
}

TEST(Cli, SimulateIqWritesTrace) {
    TempDir tmp;
    const auto cfg = tmp.write("c.json", R"({"master_seed": 4, "devices": [)" + device_json() +
                                             R"(], "readout": {"iq_shots": 200}})");
    const auto out = tmp.path() / "out";
    ASSERT_EQ(cli({"simulate-iq", "--config", cfg.string(), "--out", out.string()}), kExitOk);
    const std::string csv = slurp(out / "traces" / "q0_iq.csv");
    EXPECT_EQ(csv.rfind("sweep_value,state,observable,value,stderr\n", 0), 0u);
    EXPECT_EQ(parse_report(slurp(out / "report.json"))["status"], "ok");
}

TEST(Cli, ConfigErrorsExitTwoWithReason) {
    TempDir tmp;
    const auto out = tmp.path() / "out";
    const auto bad = tmp.write("bad.json", R"({"master_seed": 1, "devices": [)" + device_json(R"(, "kappa": -1)") +
                                               "]}");
    std::string text;
    EXPECT_EQ(cli({"protocol", "chi-kappa-power", "--config", bad.string(), "--out", out.string()}, &text),
              kExitConfig);
    EXPECT_NE(text.find("devices[0].kappa: must be > 0"), std::string::npos);
    const json r = parse_report(slurp(out / "report.json"));
    EXPECT_EQ(r["status"], "error");
    EXPECT_EQ(r["reason"], "schema_violation");

    EXPECT_EQ(cli({"validate", "--config", (tmp.path() / "absent.json").string()}), kExitConfig);
    EXPECT_EQ(cli({"validate"}), kExitConfig);
    EXPECT_EQ(cli({"frobnicate", "--config", bad.string()}), kExitConfig);
    EXPECT_EQ(cli({"protocol", "tarot", "--config", bad.string()}), kExitConfig);
    EXPECT_EQ(cli({}), kExitConfig);
    const auto good = kSource / "configs/quick.json";
    EXPECT_EQ(cli({"validate", "--config", good.string(), "--out", out.string(), "--threads", "0"}), kExitConfig);
    EXPECT_EQ(cli({"validate", "--config", good.string(), "--out", out.string(), "--tolerance", "-1"}), kExitConfig);
}

TEST(Cli, UnwritableOutputIsReportedNotThrown) {
    TempDir tmp;
    const auto blocker = tmp.write("file", "not a directory");
    std::string text;
    EXPECT_EQ(cli({"predict-snr", "--config", (kSource / "configs/single_device.json").string(), "--out",
                   (blocker / "out").string()},
                  &text),
              kExitConfig);
    EXPECT_NE(text.find("cannot create directory"), std::string::npos);
}

TEST(Cli, InvalidThreadEnvironmentIsConfigError) {
    TempDir tmp;
    ::setenv("READOUTCHAR_THREADS", "many", 1);
    const int code = cli({"predict-snr", "--config", (kSource / "configs/single_device.json").string(), "--out",
                          (tmp.path() / "out").string()});
    ::unsetenv("READOUTCHAR_THREADS");
    EXPECT_EQ(code, kExitConfig);
    ::setenv("READOUTCHAR_THREADS", "3", 1);
    EXPECT_EQ(resolve_threads(std::nullopt), 3u);
    EXPECT_EQ(resolve_threads(2), 2u);
    ::unsetenv("READOUTCHAR_THREADS");
}

TEST(Cli, ProtocolWritesTraces) {
    TempDir tmp;
    const auto out = tmp.path() / "out";
    ASSERT_EQ(cli({"protocol", "ringdown", "--config", (kSource / "configs/quick.json").string(), "--out",
                   out.string(), "--threads", "1"}),
              kExitOk);
    EXPECT_TRUE(fs::exists(out / "traces" / "q0_chi_kappa_power.csv"));
    EXPECT_TRUE(fs::exists(out / "traces" / "q0_ringdown.csv"));
    EXPECT_FALSE(fs::exists(out / "traces" / "q0_efficiency.csv"));
    const json r = parse_report(slurp(out / "report.json"));
    EXPECT_EQ(r["command"], "ringdown");
    const auto &ch = r["channels"][0];
    EXPECT_GT(ch["chi_kappa_power"]["chi"]["value"].get<double>(), 0.0);
    EXPECT_GT(ch["ringdown"]["kappa"]["value"].get<double>(), 0.0);
}

TEST(Cli, FlaggedChannelExitsOne) {
    TempDir tmp;
    const auto cfg = tmp.write("zero.json", R"({"master_seed": 1, "devices": [)" +
                                                device_json(R"(, "chi": 0.0, "design_chi": 1.0)") +
                                                R"(], "settings": {"sweep_points": 21, "sweep_shots": 2000}})");
    const auto out = tmp.path() / "out";
    EXPECT_EQ(cli({"protocol", "chi-kappa-power", "--config", cfg.string(), "--out", out.string()}), kExitFlagged);
    const json r = parse_report(slurp(out / "report.json"));
    EXPECT_EQ(r["status"], "flagged");
    EXPECT_TRUE(r["reason"].is_string());
}

TEST(Cli, DeterministicAcrossThreadsAndRuns) {
    TempDir tmp;
    const auto cfg = (kSource / "configs/quick.json").string();
    const auto a = tmp.path() / "a";
    const auto b = tmp.path() / "b";
    const auto c = tmp.path() / "c";
    ASSERT_EQ(cli({"validate", "--config", cfg, "--out", a.string(), "--threads", "1"}), kExitOk);
    ASSERT_EQ(cli({"validate", "--config", cfg, "--out", b.string(), "--threads", "4"}), kExitOk);
    ASSERT_EQ(cli({"validate", "--config", cfg, "--out", c.string(), "--threads", "4"}), kExitOk);
    for (const auto &entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file() || entry.path().filename() == "run_info.json") {
            continue;
        }
        const auto rel = fs::relative(entry.path(), a);
        EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
        EXPECT_EQ(slurp(entry.path()), slurp(c / rel)) << rel;
    }
    EXPECT_TRUE(fs::exists(a / "table.txt"));
}

TEST(Cli, SeedOverrideChangesResults) {
    TempDir tmp;
    const auto cfg = (kSource / "configs/quick.json").string();
    const auto a = tmp.path() / "a";
    const auto b = tmp.path() / "b";
    ASSERT_EQ(cli({"protocol", "chi-kappa-power", "--config", cfg, "--out", a.string()}), kExitOk);
    ASSERT_EQ(cli({"protocol", "chi-kappa-power", "--config", cfg, "--out", b.string(), "--seed", "12"}), kExitOk);
    const json ra = parse_report(slurp(a / "report.json"));
    const json rb = parse_report(slurp(b / "report.json"));
    EXPECT_EQ(ra["master_seed"], 11);
    EXPECT_EQ(rb["master_seed"], 12);
    EXPECT_NE(ra["channels"], rb["channels"]);
}

}  // namespace
}  // namespace readout
