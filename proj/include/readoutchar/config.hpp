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

// Run configuration: one JSON document, validated in full before any
// computation. Unknown keys are rejected and every violation names the
// offending field by its path (e.g. "devices[2].kappa").

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "readoutchar/error.hpp"
#include "readoutchar/pipeline.hpp"

namespace readout {

using json = nlohmann::json;

struct GridSpec {
    double omega_r = 0.0;
    std::vector<double> kappa;
    std::vector<double> chi_over_kappa;
    std::vector<double> eta;
    std::vector<double> nbar;
};

struct ChipSpec {
    std::size_t channels = 54;
    double omega_r = 0.0;
    double kappa_min = 0.0;
    // max(kappa) / min(kappa) realized across the chip.
    double kappa_spread = 2.0;
    double chi_over_kappa = 0.5;
    double eta = 0.5;
    double nbar = 1.0;
    // Channels whose true chi is forced to zero (design values stay nominal).
    std::vector<std::size_t> zero_chi_channels;
};

// Readout pulse used by simulate-iq and predict-snr.
struct ReadoutSpec {
    double duration_kappa = 4.0;
    double tail_kappa = 4.0;
    std::size_t iq_shots = 10000;
    std::string weights = "matched";
};

struct RunConfig {
    std::string protocol;
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    std::vector<DeviceSpec> devices;
    std::optional<GridSpec> grid;
    std::optional<ChipSpec> chip;
    PipelineSettings settings;
    ReadoutSpec readout;
    // The document as given, echoed into reports.
    json source;
};

inline const std::vector<std::string> &protocol_names() {
    static const std::vector<std::string> names{"chi-kappa-power", "ringdown",    "efficiency",  "validate-snr",
                                                "chip-scenario",   "simulate-iq", "predict-snr", "validate"};
    return names;
}

namespace detail {

[[noreturn]] inline void violation(const std::string &path, const std::string &what) {
    throw Error(ErrorCode::schema_violation, path + ": " + what);
}

class Fields {
  public:
    Fields(const json &j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            violation(path_.empty() ? "<root>" : path_, "must be an object");
        }
        for (const auto &[key, value] : j_.items()) {
            if (!allowed.count(key)) {
                violation(at(key), "unknown field");
            }
        }
    }

    std::string at(const std::string &key) const {
        return path_.empty() ? key : path_ + "." + key;
    }
    bool has(const std::string &key) const {
        return j_.contains(key);
    }
    const json &raw(const std::string &key) const {
        return j_.at(key);
    }

    double number(const std::string &key, std::optional<double> fallback = std::nullopt) const {
        if (!has(key)) {
            if (!fallback) {
                violation(at(key), "required field is missing");
            }
            return *fallback;
        }
        const auto &v = j_.at(key);
        if (!v.is_number()) {
            violation(at(key), "must be a number");
        }
        return v.get<double>();
    }

    std::uint64_t count(const std::string &key, std::optional<std::uint64_t> fallback = std::nullopt) const {
        if (!has(key)) {
            if (!fallback) {
                violation(at(key), "required field is missing");
            }
            return *fallback;
        }
        const auto &v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            violation(at(key), "must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string &key, std::optional<std::string> fallback = std::nullopt) const {
        if (!has(key)) {
            if (!fallback) {
                violation(at(key), "required field is missing");
            }
            return *fallback;
        }
        const auto &v = j_.at(key);
        if (!v.is_string()) {
            violation(at(key), "must be a string");
        }
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string &key) const {
        if (!has(key)) {
            violation(at(key), "required field is missing");
        }
        const auto &v = j_.at(key);
        if (!v.is_array() || v.empty()) {
            violation(at(key), "must be a non-empty array of numbers");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                violation(at(key) + "[" + std::to_string(i) + "]", "must be a number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

  private:
    const json &j_;
    std::string path_;
};

inline void check(bool ok, const std::string &path, const std::string &what) {
    if (!ok) {
        violation(path, what);
    }
}

inline void check_positive(double v, const std::string &path) {
    check(std::isfinite(v) && v > 0.0, path, "must be > 0");
}

inline void check_eta(double v, const std::string &path) {
    check(std::isfinite(v) && v > 0.0 && v <= 1.0, path, "must be in (0, 1]");
}

inline DeviceSpec parse_device(const json &j, const std::string &path, std::size_t index) {
    const Fields f(j, path,
                   {"name", "omega_r", "chi", "kappa", "eta", "nbar", "omega_op", "design_chi", "design_kappa"});
    DeviceSpec d;
    d.name = f.text("name", "ch" + std::to_string(index));
    d.truth.omega_r = f.number("omega_r");
    d.truth.chi = f.number("chi");
    d.truth.kappa = f.number("kappa");
    d.truth.eta = f.number("eta");
    d.nbar = f.number("nbar");
    d.omega_op = f.number("omega_op", d.truth.omega_r);
    d.design_chi = f.number("design_chi", d.truth.chi);
    d.design_kappa = f.number("design_kappa", d.truth.kappa);
    check_positive(d.truth.omega_r, f.at("omega_r"));
    check(std::isfinite(d.truth.chi), f.at("chi"), "must be finite");
    check_positive(d.truth.kappa, f.at("kappa"));
    check_eta(d.truth.eta, f.at("eta"));
    check_positive(d.nbar, f.at("nbar"));
    check(std::isfinite(d.omega_op), f.at("omega_op"), "must be finite");
    check(std::isfinite(d.design_chi), f.at("design_chi"), "must be finite");
    check_positive(d.design_kappa, f.at("design_kappa"));
    return d;
}

inline GridSpec parse_grid(const json &j) {
    const Fields f(j, "grid", {"omega_r", "kappa", "chi_over_kappa", "eta", "nbar"});
    GridSpec g;
    g.omega_r = f.number("omega_r");
    check_positive(g.omega_r, "grid.omega_r");
    g.kappa = f.numbers("kappa");
    g.chi_over_kappa = f.numbers("chi_over_kappa");
    g.eta = f.numbers("eta");
    g.nbar = f.numbers("nbar");
    for (std::size_t i = 0; i < g.kappa.size(); ++i) {
        check_positive(g.kappa[i], "grid.kappa[" + std::to_string(i) + "]");
    }
    for (std::size_t i = 0; i < g.chi_over_kappa.size(); ++i) {
        check(std::isfinite(g.chi_over_kappa[i]), "grid.chi_over_kappa[" + std::to_string(i) + "]", "must be finite");
    }
    for (std::size_t i = 0; i < g.eta.size(); ++i) {
        check_eta(g.eta[i], "grid.eta[" + std::to_string(i) + "]");
    }
    for (std::size_t i = 0; i < g.nbar.size(); ++i) {
        check_positive(g.nbar[i], "grid.nbar[" + std::to_string(i) + "]");
    }
    return g;
}

inline ChipSpec parse_chip(const json &j) {
    const Fields f(j, "chip",
                   {"channels", "omega_r", "kappa_min", "kappa_spread", "chi_over_kappa", "eta", "nbar",
                    "zero_chi_channels"});
    ChipSpec c;
    c.channels = f.count("channels", 54);
    check(c.channels >= 1, "chip.channels", "must be >= 1");
    c.omega_r = f.number("omega_r");
    check_positive(c.omega_r, "chip.omega_r");
    c.kappa_min = f.number("kappa_min");
    check_positive(c.kappa_min, "chip.kappa_min");
    c.kappa_spread = f.number("kappa_spread", 2.0);
    check(std::isfinite(c.kappa_spread) && c.kappa_spread >= 1.0, "chip.kappa_spread", "must be >= 1");
    c.chi_over_kappa = f.number("chi_over_kappa", 0.5);
    check(std::isfinite(c.chi_over_kappa), "chip.chi_over_kappa", "must be finite");
    c.eta = f.number("eta", 0.5);
    check_eta(c.eta, "chip.eta");
    c.nbar = f.number("nbar", 1.0);
    check_positive(c.nbar, "chip.nbar");
    if (f.has("zero_chi_channels")) {
        const auto &v = f.raw("zero_chi_channels");
        check(v.is_array(), "chip.zero_chi_channels", "must be an array of channel indices");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = "chip.zero_chi_channels[" + std::to_string(i) + "]";
            check(v[i].is_number_unsigned() || (v[i].is_number_integer() && v[i].get<std::int64_t>() >= 0), p,
                  "must be a non-negative integer");
            const auto ch = v[i].get<std::size_t>();
            check(ch < c.channels, p, "channel index out of range");
            c.zero_chi_channels.push_back(ch);
        }
    }
    return c;
}

inline PipelineSettings parse_settings(const json &j) {
    PipelineSettings s;
    const Fields f(j, "settings",
                   {"sweep_points",        "sweep_shots",          "sweep_span_kappa",
                    "sweep_duration_kappa", "sweep_phase_target",   "sweep_d_target",
                    "ringdown_points",     "ringdown_shots",       "ringdown_fill_kappa",
                    "ringdown_span_kappa", "ringdown_slice_kappa", "ringdown_phase_target",
                    "ringdown_d_max",      "efficiency_ramsey_shots", "efficiency_iq_shots",
                    "efficiency_target_d", "validate_shots",       "validate_target_d",
                    "tolerance",           "window_tail_kappa",    "record_bins",
                    "grid_points"});
    auto pos = [&](const char *key, double &dst) {
        dst = f.number(key, dst);
        check_positive(dst, f.at(key));
    };
    auto cnt = [&](const char *key, std::size_t &dst, std::size_t min) {
        dst = f.count(key, dst);
        check(dst >= min, f.at(key), "must be >= " + std::to_string(min));
    };
    cnt("sweep_points", s.sweep_points, 8);
    cnt("sweep_shots", s.sweep_shots, 100);
    pos("sweep_span_kappa", s.sweep_span_kappa);
    pos("sweep_duration_kappa", s.sweep_duration_kappa);
    pos("sweep_phase_target", s.sweep_phase_target);
    pos("sweep_d_target", s.sweep_d_target);
    cnt("ringdown_points", s.ringdown_points, 6);
    cnt("ringdown_shots", s.ringdown_shots, 100);
    pos("ringdown_fill_kappa", s.ringdown_fill_kappa);
    pos("ringdown_span_kappa", s.ringdown_span_kappa);
    pos("ringdown_slice_kappa", s.ringdown_slice_kappa);
    pos("ringdown_phase_target", s.ringdown_phase_target);
    pos("ringdown_d_max", s.ringdown_d_max);
    cnt("efficiency_ramsey_shots", s.efficiency_ramsey_shots, 100);
    cnt("efficiency_iq_shots", s.efficiency_iq_shots, 2);
    pos("efficiency_target_d", s.efficiency_target_d);
    cnt("validate_shots", s.validate_shots, 2);
    pos("validate_target_d", s.validate_target_d);
    pos("tolerance", s.tolerance);
    s.window_tail_kappa = f.number("window_tail_kappa", s.window_tail_kappa);
    check(std::isfinite(s.window_tail_kappa) && s.window_tail_kappa >= 0.0, f.at("window_tail_kappa"),
          "must be >= 0");
    cnt("record_bins", s.record_bins, 1);
    cnt("grid_points", s.grid_points, 16);
    check(s.record_bins <= s.grid_points, f.at("record_bins"), "must not exceed grid_points");
    return s;
}

inline ReadoutSpec parse_readout(const json &j) {
    ReadoutSpec r;
    const Fields f(j, "readout", {"duration_kappa", "tail_kappa", "iq_shots", "weights"});
    r.duration_kappa = f.number("duration_kappa", r.duration_kappa);
    check_positive(r.duration_kappa, "readout.duration_kappa");
    r.tail_kappa = f.number("tail_kappa", r.tail_kappa);
    check(std::isfinite(r.tail_kappa) && r.tail_kappa >= 0.0, "readout.tail_kappa", "must be >= 0");
    r.iq_shots = f.count("iq_shots", r.iq_shots);
    check(r.iq_shots >= 2, "readout.iq_shots", "must be >= 2");
    r.weights = f.text("weights", r.weights);
    check(r.weights == "matched" || r.weights == "boxcar", "readout.weights", "must be \"matched\" or \"boxcar\"");
    return r;
}

}  // namespace detail

// Expands a grid into one device per combination, kappa outermost.
inline std::vector<DeviceSpec> expand_grid(const GridSpec &g) {
    std::vector<DeviceSpec> out;
    for (double k : g.kappa) {
        for (double r : g.chi_over_kappa) {
            for (double eta : g.eta) {
                for (double n : g.nbar) {
                    DeviceSpec d;
                    d.name = "grid" + std::to_string(out.size());
                    d.truth = DeviceParams{g.omega_r, r * k, k, eta};
                    d.nbar = n;
                    d.omega_op = g.omega_r;
                    d.design_chi = r * k;
                    d.design_kappa = k;
                    out.push_back(d);
                }
            }
        }
    }
    return out;
}

inline RunConfig parse_config(const json &j) {
    const detail::Fields f(j, "",
                           {"protocol", "master_seed", "output_dir", "devices", "grid", "chip", "settings", "readout"});
    RunConfig c;
    c.source = j;
    c.protocol = f.text("protocol", "");
    if (!c.protocol.empty()) {
        const auto &names = protocol_names();
        detail::check(std::find(names.begin(), names.end(), c.protocol) != names.end(), "protocol",
                      "unknown protocol '" + c.protocol + "'");
    }
    c.master_seed = f.count("master_seed");
    c.output_dir = f.text("output_dir", c.output_dir);

    const int sources = static_cast<int>(f.has("devices")) + static_cast<int>(f.has("grid")) +
                        static_cast<int>(f.has("chip"));
    detail::check(sources == 1, "devices", "exactly one of devices, grid or chip must be given");
    if (f.has("devices")) {
        const auto &v = f.raw("devices");
        detail::check(v.is_array() && !v.empty(), "devices", "must be a non-empty array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string path = "devices[" + std::to_string(i) + "]";
            c.devices.push_back(detail::parse_device(v[i], path, i));
            detail::check(names.insert(c.devices.back().name).second, path + ".name", "duplicate device name");
        }
    }
    if (f.has("grid")) {
        c.grid = detail::parse_grid(f.raw("grid"));
        c.devices = expand_grid(*c.grid);
    }
    if (f.has("chip")) {
        c.chip = detail::parse_chip(f.raw("chip"));
    }
    if (f.has("settings")) {
        c.settings = detail::parse_settings(f.raw("settings"));
    }
    if (f.has("readout")) {
        c.readout = detail::parse_readout(f.raw("readout"));
    }
    return c;
}

inline RunConfig parse_config_text(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(ErrorCode::schema_violation, std::string("<root>: not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::schema_violation, "config: cannot read file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace readout
