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

// Report documents. A report is a JSON value; numbers are written with at
// least 15 significant digits and always round-trip exactly, NaN is written as
// null. Nothing run-dependent (paths, timing, thread count) goes into a report,
// so pinned-seed runs are byte-identical.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "readoutchar/chip.hpp"
#include "readoutchar/config.hpp"
#include "readoutchar/pipeline.hpp"
#include "readoutchar/snr_model.hpp"

namespace readout {

inline constexpr const char *kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Serialization

inline std::string format_number(double v) {
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%#.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    return buf;
}

namespace detail {

inline void write_json(std::ostream &out, const json &j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << "{\n";
            bool first = true;
            for (const auto &[key, value] : j.items()) {
                out << (first ? "" : ",\n") << inner << json(key).dump() << ": ";
                write_json(out, value, indent + 1);
                first = false;
            }
            out << "\n" << pad << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out << "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            const bool flat = std::all_of(j.begin(), j.end(), [](const json &e) { return e.is_primitive(); });
            out << "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                out << (i ? "," : "");
                if (flat) {
                    out << (i ? " " : "");
                } else {
                    out << "\n" << inner;
                }
                write_json(out, j[i], indent + 1);
            }
            out << (flat ? "" : "\n" + pad) << "]";
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            out << (std::isfinite(v) ? format_number(v) : "null");
            return;
        }
        default:
            out << j.dump();
    }
}

}  // namespace detail

inline std::string serialize_report(const json &j) {
    std::ostringstream out;
    detail::write_json(out, j, 0);
    out << "\n";
    return out.str();
}

inline json parse_report(const std::string &text) {
    return json::parse(text);
}

inline void write_text_file(const std::filesystem::path &path, const std::string &text) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path(), ec);
    if (ec) {
        throw Error(ErrorCode::invalid_argument,
                    "cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::invalid_argument, "cannot write '" + path.string() + "'");
    }
    out << text;
}

// ---------------------------------------------------------------------------
// CSV traces: sweep_value,state,observable,value,stderr

struct TraceRow {
    double sweep_value = 0.0;
    std::string state;
    std::string observable;
    double value = 0.0;
    double stderr_value = 0.0;
};

inline std::string serialize_trace(const std::vector<TraceRow> &rows) {
    std::ostringstream out;
    out << "sweep_value,state,observable,value,stderr\n";
    for (const auto &r : rows) {
        out << format_number(r.sweep_value) << "," << r.state << "," << r.observable << ","
            << format_number(r.value) << "," << format_number(r.stderr_value) << "\n";
    }
    return out.str();
}

inline std::vector<TraceRow> chi_kappa_power_trace(const ChiKappaPowerResult &r) {
    std::vector<TraceRow> rows;
    for (const auto &p : r.points) {
        rows.push_back({p.omega_d, to_string(p.state), "phase", p.ramsey.phase, p.ramsey.phase_stderr});
        rows.push_back({p.omega_d, to_string(p.state), "contrast", p.ramsey.contrast, p.ramsey.contrast_stderr});
    }
    return rows;
}

inline std::vector<TraceRow> ringdown_trace(const RingdownResult &r, QubitState fill_state) {
    std::vector<TraceRow> rows;
    for (const auto &p : r.points) {
        rows.push_back({p.delay, to_string(fill_state), "phase", p.ramsey.phase, p.ramsey.phase_stderr});
        rows.push_back({p.delay, to_string(fill_state), "photons", p.photons, p.photons_err});
    }
    return rows;
}

// Mean-record difference per time bin, indexed by bin number.
inline std::vector<TraceRow> efficiency_trace(const EfficiencyResult &r) {
    std::vector<TraceRow> rows;
    for (std::size_t k = 0; k < r.record_difference.size(); ++k) {
        const double x = static_cast<double>(k);
        rows.push_back({x, "0-1", "record_difference_re", r.record_difference[k].real(), 0.0});
        rows.push_back({x, "0-1", "record_difference_im", r.record_difference[k].imag(), 0.0});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Builders

inline json num(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

inline json to_json(const Estimate &e) {
    return {{"value", num(e.value)}, {"stderr", num(e.error)}};
}

inline json to_json(const DeviceParams &p) {
    return {{"omega_r", num(p.omega_r)}, {"chi", num(p.chi)}, {"kappa", num(p.kappa)}, {"eta", num(p.eta)}};
}

inline json to_json(const DrivePulse &p) {
    return {{"omega_d", num(p.omega_d)}, {"eps", num(p.eps)}, {"t_on", num(p.t_on)}, {"t_off", num(p.t_off)}};
}

inline json to_json(const Window &w) {
    return {{"start", num(w.start)}, {"end", num(w.end)}};
}

inline json to_json(const RamseyResult &r) {
    return {{"phase", num(r.phase)},
            {"phase_stderr", num(r.phase_stderr)},
            {"contrast", num(r.contrast)},
            {"contrast_stderr", num(r.contrast_stderr)},
            {"shots", r.shots}};
}

inline json to_json(const FitResult &f) {
    json cov = json::array();
    for (const auto &row : f.covariance) {
        json r = json::array();
        for (double v : row) {
            r.push_back(num(v));
        }
        cov.push_back(r);
    }
    json params = json::object();
    for (std::size_t i = 0; i < f.params.size(); ++i) {
        params[f.param_names[i]] = {{"value", num(f.params[i])}, {"stderr", num(f.std_errors[i])}};
    }
    json trace = json::array();
    for (double v : f.chi2_trace) {
        trace.push_back(num(v));
    }
    return {{"model", f.model},
            {"param_names", f.param_names},
            {"params", params},
            {"covariance", cov},
            {"chi2", num(f.chi2)},
            {"chi2_reduced", num(f.chi2_reduced)},
            {"iterations", f.iterations},
            {"converged", f.converged},
            {"termination", f.termination},
            {"gradient_max", num(f.gradient_max)},
            {"chi2_trace", trace}};
}

inline json to_json(const ChiKappaPowerResult &r) {
    json points = json::array();
    for (const auto &p : r.points) {
        json pt = to_json(p.ramsey);
        pt["omega_d"] = num(p.omega_d);
        pt["state"] = static_cast<int>(p.state);
        points.push_back(pt);
    }
    return {{"omega_r", to_json(r.omega_r)},
            {"chi", to_json(r.chi)},
            {"kappa", to_json(r.kappa)},
            {"eps2", to_json(r.eps2)},
            {"eps2_readout", to_json(r.eps2_readout)},
            {"omega_op", num(r.omega_op)},
            {"nbar_op", {to_json(r.nbar_op[0]), to_json(r.nbar_op[1])}},
            {"fit", r.fit ? to_json(*r.fit) : json(nullptr)},
            {"flags", r.flags},
            {"points", points}};
}

inline json to_json(const RingdownResult &r) {
    json points = json::array();
    for (const auto &p : r.points) {
        json pt = to_json(p.ramsey);
        pt["delay"] = num(p.delay);
        pt["photons"] = num(p.photons);
        pt["photons_stderr"] = num(p.photons_err);
        points.push_back(pt);
    }
    return {{"kappa", to_json(r.kappa)},
            {"n0", to_json(r.n0)},
            {"fit", r.fit ? to_json(*r.fit) : json(nullptr)},
            {"flags", r.flags},
            {"points", points}};
}

inline json to_json(const EfficiencyResult &r) {
    json re = json::array();
    json im = json::array();
    for (auto z : r.record_difference) {
        re.push_back(num(z.real()));
        im.push_back(num(z.imag()));
    }
    return {{"eta", to_json(r.eta)},
            {"snr", to_json(r.snr)},
            {"contrast", to_json(r.contrast)},
            {"d_exponent", to_json(r.d_exponent)},
            {"ramsey", to_json(r.ramsey)},
            {"record_difference", {{"re", re}, {"im", im}}},
            {"flags", r.flags}};
}

inline json to_json(const SnrValidation &v) {
    return {{"snr_predicted", num(v.snr_predicted)},
            {"snr_measured", {{"value", num(v.snr_measured)}, {"stderr", num(v.snr_measured_err)}}},
            {"ratio", num(v.ratio)},
            {"tolerance", num(v.tolerance)},
            {"pass", v.pass},
            {"d_predicted", num(v.d_predicted)}};
}

inline json to_json(const ExperimentDesign &d) {
    json j;
    j["sweep"] = {{"omega_d_min", num(d.sweep.omega_d_values.empty() ? kNaN : d.sweep.omega_d_values.front())},
                  {"omega_d_max", num(d.sweep.omega_d_values.empty() ? kNaN : d.sweep.omega_d_values.back())},
                  {"points", d.sweep.omega_d_values.size()},
                  {"pulse", to_json(d.sweep.pulse_template)},
                  {"window", to_json(d.sweep.window)},
                  {"shots", d.sweep.shots}};
    j["readout_amplitude_ratio"] = num(d.readout_amplitude_ratio);
    json delays = json::array();
    for (double t : d.delays) {
        delays.push_back(num(t));
    }
    j["ringdown"] = {{"fill", to_json(d.fill)}, {"delays", delays}, {"slice", num(d.slice)}};
    j["efficiency"] = d.efficiency_pulse
                          ? json{{"pulse", to_json(*d.efficiency_pulse)}, {"window", to_json(*d.efficiency_window)}}
                          : json(nullptr);
    j["validate"] = d.validate_pulse
                        ? json{{"pulse", to_json(*d.validate_pulse)}, {"window", to_json(*d.validate_window)}}
                        : json(nullptr);
    return j;
}

// Relative deviations of the extracted parameters from simulator truth.
inline json recovery_json(const DeviceRun &run) {
    const auto &t = run.spec.truth;
    auto rel = [](double est, double truth) { return truth != 0.0 ? num(est / truth - 1.0) : json(nullptr); };
    json j = json::object();
    if (const auto &c = run.report.chi_kappa_power; c && c->fit) {
        j["chi"] = rel(c->chi.value, t.chi);
        j["kappa"] = rel(c->kappa.value, t.kappa);
        const double eps2_true = run.spec.readout_eps() * run.spec.readout_eps();
        const double nbar_true = readout_photons(run.spec.omega_op, t.omega_r, t.chi, t.kappa, eps2_true,
                                                 QubitState::ground);
        j["nbar"] = rel(c->nbar_op[0].value, nbar_true);
    }
    if (const auto &r = run.report.ringdown; r && r->fit) {
        j["kappa_ringdown"] = rel(r->kappa.value, t.kappa);
        if (const auto &c = run.report.chi_kappa_power; c && c->fit) {
            const double s = std::hypot(r->kappa.error, c->kappa.error);
            j["kappa_agreement_sigma"] = num((r->kappa.value - c->kappa.value) / s);
        }
    }
    if (const auto &e = run.report.efficiency) {
        j["eta"] = rel(e->eta.value, t.eta);
    }
    return j;
}

// First machine-readable reason why a channel is flagged, or null.
inline json channel_reason(const DeviceRun &run) {
    if (!run.errors.empty()) {
        return run.errors.front().reason;
    }
    for (const auto *flags : {run.report.chi_kappa_power ? &run.report.chi_kappa_power->flags : nullptr,
                              run.report.ringdown ? &run.report.ringdown->flags : nullptr,
                              run.report.efficiency ? &run.report.efficiency->flags : nullptr}) {
        if (flags && !flags->empty()) {
            return flags->front();
        }
    }
    if (run.validation && !run.validation->pass) {
        return "snr_out_of_tolerance";
    }
    return nullptr;
}

inline json to_json(const DeviceRun &run) {
    json j;
    j["name"] = run.spec.name;
    j["truth"] = to_json(run.spec.truth);
    j["nbar"] = num(run.spec.nbar);
    j["omega_op"] = num(run.spec.omega_op);
    j["design"] = to_json(run.design);
    const auto &r = run.report;
    j["chi_kappa_power"] = r.chi_kappa_power ? to_json(*r.chi_kappa_power) : json(nullptr);
    j["ringdown"] = r.ringdown ? to_json(*r.ringdown) : json(nullptr);
    j["efficiency"] = r.efficiency ? to_json(*r.efficiency) : json(nullptr);
    j["validation"] = run.validation ? to_json(*run.validation) : json(nullptr);
    j["recovery"] = recovery_json(run);
    json errors = json::array();
    for (const auto &e : run.errors) {
        errors.push_back({{"stage", e.stage}, {"reason", e.reason}, {"message", e.message}});
    }
    j["errors"] = errors;
    j["status"] = run.flagged() ? "flagged" : "ok";
    j["reason"] = channel_reason(run);
    return j;
}

inline json to_json(const Spread &s) {
    return {{"count", s.count}, {"min", num(s.min)}, {"max", num(s.max)}, {"median", num(s.median)}};
}

// Aggregate statistics over channels.
inline json summary_json(const std::vector<DeviceRun> &runs) {
    std::vector<double> chi, kappa, kappa_rd, nbar, eta, ratio;
    std::size_t flagged = 0;
    std::size_t validated = 0;
    std::size_t passed = 0;
    for (const auto &run : runs) {
        flagged += run.flagged() ? 1 : 0;
        if (const auto &c = run.report.chi_kappa_power; c && c->usable()) {
            chi.push_back(c->chi.value);
            kappa.push_back(c->kappa.value);
            nbar.push_back(c->nbar_op[0].value);
        }
        if (const auto &r = run.report.ringdown; r && r->fit) {
            kappa_rd.push_back(r->kappa.value);
        }
        if (const auto &e = run.report.efficiency) {
            eta.push_back(e->eta.value);
        }
        if (run.validation) {
            ++validated;
            passed += run.validation->pass ? 1 : 0;
            ratio.push_back(run.validation->ratio);
        }
    }
    json j;
    j["channels"] = runs.size();
    j["flagged"] = flagged;
    j["validated"] = validated;
    j["passed"] = passed;
    auto put = [&](const char *key, const std::vector<double> &v) {
        const auto s = spread_of(v);
        j[key] = s ? to_json(*s) : json(nullptr);
    };
    put("chi", chi);
    put("kappa", kappa);
    put("kappa_ringdown", kappa_rd);
    put("nbar", nbar);
    put("eta", eta);
    put("snr_ratio", ratio);
    const auto ks = spread_of(kappa);
    j["kappa_max_over_min"] = ks ? num(ks->max / ks->min) : json(nullptr);
    double worst = 0.0;
    for (double r : ratio) {
        worst = std::max(worst, std::abs(r - 1.0));
    }
    j["max_abs_ratio_deviation"] = ratio.empty() ? json(nullptr) : num(worst);
    return j;
}

inline json report_header(const std::string &command, const RunConfig &cfg, std::uint64_t seed) {
    json j;
    j["tool"] = "readoutchar";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["master_seed"] = seed;
    j["config"] = cfg.source;
    return j;
}

inline json error_report(const std::string &command, const Error &e) {
    return {{"tool", "readoutchar"},
            {"version", kToolVersion},
            {"command", command},
            {"status", "error"},
            {"reason", std::string(e.reason())},
            {"message", e.detail()}};
}

// Plain-text table of per-channel results.
inline std::string validation_table(const std::vector<DeviceRun> &runs) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s %8s %8s %6s %6s %10s %10s %8s  %s\n", "channel", "kappa", "chi", "eta",
                  "nbar", "snr_pred", "snr_meas", "ratio", "status");
    out << line;
    for (const auto &run : runs) {
        const auto &t = run.spec.truth;
        const double pred = run.validation ? run.validation->snr_predicted : kNaN;
        const double meas = run.validation ? run.validation->snr_measured : kNaN;
        const double ratio = run.validation ? run.validation->ratio : kNaN;
        const json reason = channel_reason(run);
        std::snprintf(line, sizeof(line), "%-10s %8.4g %8.4g %6.3g %6.3g %10.5g %10.5g %8.5f  %s\n",
                      run.spec.name.c_str(), t.kappa, t.chi, t.eta, run.spec.nbar, pred, meas, ratio,
                      reason.is_null() ? "ok" : reason.get<std::string>().c_str());
        out << line;
    }
    return out.str();
}

}  // namespace readout
