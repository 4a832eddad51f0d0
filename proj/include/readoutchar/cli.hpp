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

// Command-line front end. run_cli() is the whole program; tools/readoutchar.cpp
// only forwards argv. Exit status: 0 success, 1 flagged scientific failure,
// 2 configuration or usage error.

#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "readoutchar/chip.hpp"
#include "readoutchar/config.hpp"
#include "readoutchar/report.hpp"
#include "readoutchar/snr_model.hpp"
#ifdef READOUTCHAR_WITH_WIRE
#include "readoutchar/wire.hpp"
#endif

namespace readout {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFlagged = 1;
inline constexpr int kExitConfig = 2;

struct CliOptions {
    std::string command;
    std::string protocol;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> threads;
    std::optional<double> tolerance;
    std::optional<std::string> backend;
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    std::string device;
};

// --threads, then READOUTCHAR_THREADS, then the hardware concurrency.
inline std::size_t resolve_threads(const std::optional<std::size_t> &flag) {
    if (flag) {
        require(*flag >= 1, ErrorCode::schema_violation, "--threads: must be >= 1");
        return *flag;
    }
    if (const char *env = std::getenv("READOUTCHAR_THREADS"); env != nullptr && *env != '\0') {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        require(end != nullptr && *end == '\0' && v >= 1, ErrorCode::schema_violation,
                "READOUTCHAR_THREADS: must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline int stages_for(const std::string &protocol) {
    if (protocol == "chi-kappa-power") {
        return 1;
    }
    if (protocol == "ringdown") {
        return 2;
    }
    if (protocol == "efficiency") {
        return 3;
    }
    return 4;
}

namespace detail {

struct Outputs {
    std::filesystem::path dir;
    json report;
    std::vector<std::pair<std::string, std::string>> files;
};

inline void write_outputs(const Outputs &o, double wall_seconds, std::size_t threads) {
    write_text_file(o.dir / "report.json", serialize_report(o.report));
    for (const auto &[name, text] : o.files) {
        write_text_file(o.dir / name, text);
    }
    // Run metadata that legitimately differs between runs lives outside the report.
    const json info{{"wall_time_s", wall_seconds}, {"threads", threads}};
    write_text_file(o.dir / "run_info.json", serialize_report(info));
}

inline DrivePulse readout_pulse(const DeviceSpec &d, const ReadoutSpec &r) {
    return DrivePulse{d.omega_op, d.readout_eps(), 0.0, r.duration_kappa / d.truth.kappa};
}

inline Window readout_window(const DeviceSpec &d, const ReadoutSpec &r) {
    return Window{0.0, (r.duration_kappa + r.tail_kappa) / d.truth.kappa};
}

inline json predict_one(const DeviceSpec &d, const ReadoutSpec &r) {
    const DrivePulse pulse = readout_pulse(d, r);
    const Window window = readout_window(d, r);
    const SnrPrediction p = predict_snr(d.truth, pulse, window);
    json j;
    j["name"] = d.name;
    j["truth"] = to_json(d.truth);
    j["nbar"] = num(d.nbar);
    j["pulse"] = to_json(pulse);
    j["window"] = to_json(window);
    j["snr"] = num(p.snr);
    j["snr_boxcar"] = num(p.snr_boxcar);
    j["d_exponent"] = num(p.d_exponent);
    j["regime"] = to_string(p.regime);
    j["separation_error"] = num(separation_error(p.snr));
    // Closed form for a long pulse at omega_r; reported for comparison only.
    j["snr_steady_state"] =
        d.omega_op == d.truth.omega_r && d.truth.chi != 0.0
            ? num(steady_state_snr(d.truth.chi, d.truth.kappa, d.nbar, d.truth.eta, pulse.duration()))
            : json(nullptr);
    return j;
}

inline json simulate_iq_one(const DeviceSpec &d, const ReadoutSpec &r, std::uint64_t seed,
                            std::vector<TraceRow> &trace) {
    const DrivePulse pulse = readout_pulse(d, r);
    const Window window = readout_window(d, r);
    const std::vector<double> edges{pulse.t_on, pulse.t_off};
    const auto grid = make_grid(window.start, window.end, window.length() / 1200.0, edges);
    const FilterWeights weights =
        r.weights == "matched" ? matched_filter(AnalyticField(d.truth, pulse).sample(grid)) : boxcar_weights(grid);
    json j;
    j["name"] = d.name;
    j["truth"] = to_json(d.truth);
    j["pulse"] = to_json(pulse);
    j["window"] = to_json(window);
    j["weights"] = r.weights;
    json clouds = json::array();
    IQCloud c[2];
    for (int s = 0; s < 2; ++s) {
        const auto q = static_cast<QubitState>(s);
        c[s] = sample_iq(d.truth, pulse, q, weights, r.iq_shots, derive_seed(seed, {static_cast<std::uint64_t>(s)}));
        const complex m = c[s].mean();
        double vi = 0.0;
        double vq = 0.0;
        for (std::size_t i = 0; i < c[s].points.size(); ++i) {
            const complex z = c[s].points[i] - m;
            vi += z.real() * z.real();
            vq += z.imag() * z.imag();
            trace.push_back({static_cast<double>(i), to_string(q), "I", c[s].points[i].real(), 0.0});
            trace.push_back({static_cast<double>(i), to_string(q), "Q", c[s].points[i].imag(), 0.0});
        }
        const double n = static_cast<double>(c[s].points.size() - 1);
        clouds.push_back({{"state", s},
                          {"seed", c[s].seed},
                          {"shots", c[s].points.size()},
                          {"mean", {num(m.real()), num(m.imag())}},
                          {"variance", {num(vi / n), num(vq / n)}}});
    }
    j["clouds"] = clouds;
    const auto snr = measure_snr_detail(c[0], c[1]);
    j["snr_measured"] = {{"value", num(snr.snr)}, {"stderr", num(snr.stderr_snr)}};
    j["snr_predicted"] = num(predict_snr(d.truth, pulse, window).snr);
    return j;
}

}  // namespace detail

// Runs one command with parsed options. Never throws.
inline int run_command(const CliOptions &opt, std::ostream &out, std::ostream &err) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string command = opt.command == "protocol" ? opt.protocol : opt.command;
    RunConfig cfg;
    std::size_t threads = 1;
    std::optional<std::filesystem::path> out_dir = opt.out_dir;
    try {
        cfg = load_config(opt.config_path);
        if (!out_dir) {
            out_dir = cfg.output_dir;
        }
        threads = resolve_threads(opt.threads);
        if (opt.tolerance) {
            require(std::isfinite(*opt.tolerance) && *opt.tolerance > 0.0, ErrorCode::schema_violation,
                    "--tolerance: must be > 0");
            cfg.settings.tolerance = *opt.tolerance;
        }
        if (cfg.chip && cfg.devices.empty()) {
            cfg.devices = generate_chip(*cfg.chip, opt.seed.value_or(cfg.master_seed));
        }
        require(!opt.backend || cfg.devices.size() == 1, ErrorCode::schema_violation,
                "--backend: a remote backend serves exactly one device, the config lists " +
                    std::to_string(cfg.devices.size()));
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        if (out_dir) {
            try {
                write_text_file(*out_dir / "report.json", serialize_report(error_report(command, e)));
            } catch (const Error &) {
            }
        }
        return kExitConfig;
    }
    const std::uint64_t seed = opt.seed.value_or(cfg.master_seed);

    detail::Outputs o;
    o.dir = *out_dir;
    o.report = report_header(command, cfg, seed);
    int status = kExitOk;
    try {
        if (command == "predict-snr") {
            json rows = json::array();
            for (const auto &d : cfg.devices) {
                rows.push_back(detail::predict_one(d, cfg.readout));
            }
            o.report["channels"] = rows;
        } else if (command == "simulate-iq") {
            json rows = json::array();
            for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
                std::vector<TraceRow> trace;
                rows.push_back(detail::simulate_iq_one(cfg.devices[i], cfg.readout, derive_seed(seed, {i}), trace));
                o.files.emplace_back("traces/" + cfg.devices[i].name + "_iq.csv", serialize_trace(trace));
            }
            o.report["channels"] = rows;
        } else {
            BackendFactory factory = simulator_factory();
            if (opt.backend) {
#ifdef READOUTCHAR_WITH_WIRE
                const std::string endpoint = *opt.backend;
                factory = [endpoint](const DeviceSpec &) { return std::make_unique<WireBackend>(endpoint); };
#else
                throw Error(ErrorCode::backend_unavailable, "built without the wire backend");
#endif
            }
            const auto runs = run_channels(cfg.devices, cfg.settings, seed, threads, stages_for(command), factory);
            json rows = json::array();
            for (const auto &run : runs) {
                rows.push_back(to_json(run));
                const std::string base = "traces/" + run.spec.name;
                if (run.report.chi_kappa_power) {
                    o.files.emplace_back(base + "_chi_kappa_power.csv",
                                         serialize_trace(chi_kappa_power_trace(*run.report.chi_kappa_power)));
                }
                if (run.report.ringdown) {
                    o.files.emplace_back(base + "_ringdown.csv",
                                         serialize_trace(ringdown_trace(*run.report.ringdown, QubitState::ground)));
                }
                if (run.report.efficiency) {
                    o.files.emplace_back(base + "_efficiency.csv",
                                         serialize_trace(efficiency_trace(*run.report.efficiency)));
                }
            }
            o.report["channels"] = rows;
            o.report["summary"] = summary_json(runs);
            if (stages_for(command) == 4) {
                const std::string table = validation_table(runs);
                o.files.emplace_back("table.txt", table);
                out << table;
            }
            for (const auto &run : runs) {
                if (run.flagged()) {
                    status = kExitFlagged;
                    o.report["reason"] = channel_reason(run);
                    break;
                }
            }
        }
        o.report["status"] = status == kExitOk ? "ok" : "flagged";
        if (status == kExitOk) {
            o.report["reason"] = nullptr;
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        o.report["status"] = "error";
        o.report["reason"] = std::string(e.reason());
        o.report["message"] = e.detail();
        status = kExitFlagged;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        o.report["status"] = "error";
        o.report["reason"] = "internal_error";
        o.report["message"] = e.what();
        status = kExitFlagged;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        detail::write_outputs(o, wall, threads);
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    out << "report: " << (o.dir / "report.json").string() << " (" << o.report["status"].get<std::string>() << ")\n";
    return status;
}

#ifdef READOUTCHAR_WITH_WIRE
inline int run_serve(const CliOptions &opt, std::ostream &out, std::ostream &err) {
    RunConfig cfg;
    try {
        cfg = load_config(opt.config_path);
        if (cfg.chip && cfg.devices.empty()) {
            cfg.devices = generate_chip(*cfg.chip, opt.seed.value_or(cfg.master_seed));
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    const DeviceSpec *dev = &cfg.devices.front();
    if (!opt.device.empty()) {
        dev = nullptr;
        for (const auto &d : cfg.devices) {
            if (d.name == opt.device) {
                dev = &d;
            }
        }
        if (dev == nullptr) {
            err << "error: --device: no device named '" << opt.device << "'\n";
            return kExitConfig;
        }
    }
    try {
        SimulatorBackend backend(dev->truth);
        WireServer server(backend, opt.port, opt.host);
        out << "serving " << dev->name << " on " << opt.host << ":" << server.port() << std::endl;
        for (;;) {
            std::this_thread::sleep_for(std::chrono::hours(1));
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kExitFlagged;
    }
}
#endif

inline int run_cli(std::vector<std::string> args, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{"Dispersive readout simulator and characterization toolkit", "readoutchar"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("readoutchar ") + kToolVersion);
    CliOptions opt;

    auto common = [&](CLI::App *sub, bool with_backend, bool with_tolerance) {
        sub->add_option("--config", opt.config_path, "Run configuration (JSON)")->required();
        sub->add_option("--seed", opt.seed, "Override master_seed");
        sub->add_option("--out", opt.out_dir, "Output directory (overrides output_dir)");
        sub->add_option("--threads", opt.threads, "Worker threads (default: READOUTCHAR_THREADS or all cores)");
        if (with_tolerance) {
            sub->add_option("--tolerance", opt.tolerance, "Allowed |predicted/measured SNR - 1|");
        }
        if (with_backend) {
            sub->add_option("--backend", opt.backend, "Remote backend endpoint host:port (default: in-process)");
        }
    };
    common(app.add_subcommand("simulate-iq", "Sample IQ clouds of the readout pulse"), false, false);
    common(app.add_subcommand("predict-snr", "Model SNR of the readout pulse from device parameters"), false, false);
    common(app.add_subcommand("validate", "Full characterization and SNR validation per channel"), true, true);
    common(app.add_subcommand("chip-scenario", "Characterize every channel of a chip and aggregate"), true, true);
    auto *proto = app.add_subcommand("protocol", "Run one protocol (and the protocols it depends on)");
    proto->add_option("name", opt.protocol, "Protocol name")
        ->required()
        ->check(CLI::IsMember({"chi-kappa-power", "ringdown", "efficiency", "validate-snr", "chip-scenario"}));
    common(proto, true, true);
#ifdef READOUTCHAR_WITH_WIRE
    auto *serve = app.add_subcommand("serve", "Serve one simulated device over the line protocol");
    serve->add_option("--config", opt.config_path, "Run configuration (JSON)")->required();
    serve->add_option("--seed", opt.seed, "Override master_seed (chip generator)");
    serve->add_option("--host", opt.host, "Listen address");
    serve->add_option("--port", opt.port, "Listen port (0 picks a free one)");
    serve->add_option("--device", opt.device, "Device name (default: first)");
#endif

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();  // program name
    }
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    opt.command = app.get_subcommands().front()->get_name();
#ifdef READOUTCHAR_WITH_WIRE
    if (opt.command == "serve") {
        return run_serve(opt, out, err);
    }
#endif
    if (opt.command == "protocol" && opt.protocol == "chip-scenario") {
        opt.command = "chip-scenario";
    }
    return run_command(opt, out, err);
}

}  // namespace readout
