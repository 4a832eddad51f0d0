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

// Per-channel orchestration: designs each experiment from nominal device values
// (or from upstream estimates), runs the protocols in dependency order and
// collects their results. Failures are recorded per stage; later stages that
// depend on a failed one are skipped with a missing_dependency reason.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "readoutchar/backend.hpp"
#include "readoutchar/error.hpp"
#include "readoutchar/protocols.hpp"

namespace readout {

struct DeviceSpec {
    std::string name;
    DeviceParams truth;
    // Readout photon number of the |0> branch at omega_op.
    double nbar = 1.0;
    double omega_op = 0.0;
    // Values used only to design experiments.
    double design_chi = 0.0;
    double design_kappa = 0.0;

    double readout_eps() const {
        const double d = omega_op - truth.pulled_frequency(QubitState::ground);
        return std::sqrt(nbar * (d * d + truth.kappa * truth.kappa / 4.0));
    }
    DeviceParams design() const {
        return DeviceParams{omega_op, design_chi, design_kappa, 1.0};
    }
};

// Every tunable of the pipeline. Durations are in units of 1/kappa.
struct PipelineSettings {
    std::size_t sweep_points = 41;
    std::size_t sweep_shots = 100000;
    double sweep_span_kappa = 3.0;
    double sweep_duration_kappa = 4.0;
    double sweep_phase_target = 2.0;
    double sweep_d_target = 1.0;

    std::size_t ringdown_points = 12;
    std::size_t ringdown_shots = 100000;
    double ringdown_fill_kappa = 12.0;
    double ringdown_span_kappa = 3.0;
    double ringdown_slice_kappa = 0.25;
    double ringdown_phase_target = 2.5;
    double ringdown_d_max = 1.0;

    std::size_t efficiency_ramsey_shots = 100000;
    std::size_t efficiency_iq_shots = 100000;
    double efficiency_target_d = 1.5;

    std::size_t validate_shots = 100000;
    double validate_target_d = 3.0;
    double tolerance = 0.10;

    // Ring-down tail included after the pulse in every measurement window.
    double window_tail_kappa = 4.0;
    std::size_t record_bins = 48;
    std::size_t grid_points = 1200;
};

struct StageError {
    std::string stage;
    std::string reason;
    std::string message;
};

struct ExperimentDesign {
    SweepSpec sweep;
    double readout_amplitude_ratio = 1.0;
    DrivePulse fill;
    std::vector<double> delays;
    double slice = 0.0;
    std::optional<DrivePulse> efficiency_pulse;
    std::optional<Window> efficiency_window;
    std::optional<DrivePulse> validate_pulse;
    std::optional<Window> validate_window;
};

struct DeviceRun {
    DeviceSpec spec;
    ExperimentDesign design;
    CharacterizationReport report;
    std::optional<SnrValidation> validation;
    std::vector<StageError> errors;

    bool flagged() const {
        if (!errors.empty()) {
            return true;
        }
        if (report.chi_kappa_power && !report.chi_kappa_power->flags.empty()) {
            return true;
        }
        if (report.ringdown && !report.ringdown->flags.empty()) {
            return true;
        }
        if (report.efficiency && !report.efficiency->flags.empty()) {
            return true;
        }
        return validation && !validation->pass;
    }
};

namespace detail {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return v;
}

// Pulse length giving dephasing `target` over [0, tau + tail] for `est`.
inline double duration_for_dephasing(const DeviceParams &est, double omega_d, double eps, double tail, double target) {
    auto d_of = [&](double tau) {
        const DrivePulse p{omega_d, eps, 0.0, tau};
        return AnalyticField(est, p).dephasing_exponent(Window{0.0, tau + tail});
    };
    double lo = 0.0;
    double hi = 1.0 / est.kappa;
    for (int i = 0; i < 60 && d_of(hi) < target; ++i) {
        hi *= 2.0;
    }
    require(d_of(hi) >= target, ErrorCode::power_advisory, "cannot reach the target dephasing at this drive power");
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (d_of(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Sweep and ring-down designs need only nominal values.
inline ExperimentDesign design_experiments(const DeviceSpec &spec, const PipelineSettings &s) {
    const DeviceParams nominal = spec.design();
    nominal.validate();
    const double k = nominal.kappa;
    ExperimentDesign d;

    const double half = s.sweep_span_kappa * k + std::abs(nominal.chi);
    d.sweep.omega_d_values = detail::linspace(spec.omega_op - half, spec.omega_op + half, s.sweep_points);
    const double tau = s.sweep_duration_kappa / k;
    d.sweep.window = Window{0.0, tau + s.window_tail_kappa / k};
    d.sweep.shots = s.sweep_shots;
    // Phase and dephasing both scale with eps^2: size the drive so the strongest
    // point stays below both targets.
    double phase1 = 0.0;
    double d1 = 0.0;
    for (double w : d.sweep.omega_d_values) {
        const AnalyticField f(nominal, DrivePulse{w, 1.0, 0.0, tau});
        phase1 = std::max({phase1, std::abs(f.stark_phase(QubitState::ground, d.sweep.window)),
                           std::abs(f.stark_phase(QubitState::excited, d.sweep.window))});
        d1 = std::max(d1, f.dephasing_exponent(d.sweep.window));
    }
    require(phase1 > 0.0 && d1 > 0.0, ErrorCode::no_information,
            "nominal chi is zero; the drive carries no state information to design around");
    const double eps_sweep = std::sqrt(std::min(s.sweep_phase_target / phase1, s.sweep_d_target / d1));
    d.sweep.pulse_template = DrivePulse{spec.omega_op, eps_sweep, 0.0, tau};
    d.readout_amplitude_ratio = spec.readout_eps() / eps_sweep;

    const double fill_len = s.ringdown_fill_kappa / k;
    d.slice = s.ringdown_slice_kappa / k;
    d.delays = detail::linspace(0.0, s.ringdown_span_kappa / k, s.ringdown_points);
    {
        // Filling on the |0> line maximizes Stark phase per unit dephasing.
        const double fill_freq = nominal.pulled_frequency(QubitState::ground);
        const AnalyticField f(nominal, DrivePulse{fill_freq, 1.0, 0.0, fill_len});
        const Window w{fill_len, fill_len + d.slice};
        const double ph = std::abs(f.stark_phase(QubitState::ground, w));
        const double dd = f.dephasing_exponent(w);
        d.fill = DrivePulse{fill_freq, std::sqrt(std::min(s.ringdown_phase_target / ph, s.ringdown_d_max / dd)), 0.0,
                            fill_len};
    }
    return d;
}

inline void design_from_estimates(ExperimentDesign &d, const DeviceSpec &spec, const ChiKappaPowerResult &ckp,
                                  const PipelineSettings &s) {
    const DeviceParams est{ckp.omega_r.value, ckp.chi.value, ckp.kappa.value, 1.0};
    const double eps_hat = std::sqrt(ckp.eps2_readout.value);
    const double tail = s.window_tail_kappa / est.kappa;
    const double eps = spec.readout_eps();

    const double t_eff = detail::duration_for_dephasing(est, spec.omega_op, eps_hat, tail, s.efficiency_target_d);
    d.efficiency_pulse = DrivePulse{spec.omega_op, eps, 0.0, t_eff};
    d.efficiency_window = Window{0.0, t_eff + tail};

    const double t_val = detail::duration_for_dephasing(est, spec.omega_op, eps_hat, tail, s.validate_target_d);
    d.validate_pulse = DrivePulse{spec.omega_op, eps, 0.0, t_val};
    d.validate_window = Window{0.0, t_val + tail};
}

inline MatchedSnrOptions matched_options(const PipelineSettings &s, std::size_t shots, std::uint64_t seed,
                                         std::size_t threads) {
    MatchedSnrOptions o;
    o.grid_points = s.grid_points;
    o.record_bins = s.record_bins;
    o.shots = shots;
    o.seed = seed;
    o.threads = threads;
    return o;
}

// Runs chi-kappa-power, ring-down, efficiency and SNR validation for one
// channel. `stages` limits how far the chain goes (1 = sweep only ... 4 = all).
inline DeviceRun characterize_device(ExperimentBackend &backend, const DeviceSpec &spec, const PipelineSettings &s,
                                     std::uint64_t seed, std::size_t threads, int stages = 4) {
    DeviceRun run;
    run.spec = spec;
    auto record = [&](const std::string &stage, const Error &e) {
        run.errors.push_back({stage, std::string(e.reason()), e.detail()});
    };
    try {
        run.design = design_experiments(spec, s);
    } catch (const Error &e) {
        record("design", e);
        return run;
    }

    try {
        ChiKappaPowerOptions o;
        o.omega_op = spec.omega_op;
        o.readout_amplitude_ratio = run.design.readout_amplitude_ratio;
        o.seed = derive_seed(seed, {1});
        o.threads = threads;
        run.report.chi_kappa_power = run_chi_kappa_power(backend, run.design.sweep, o);
    } catch (const Error &e) {
        record("chi-kappa-power", e);
    }
    const bool have_ckp = run.report.chi_kappa_power && run.report.chi_kappa_power->usable();
    if (stages < 2) {
        return run;
    }

    if (have_ckp) {
        try {
            RingdownOptions o;
            o.chi_estimate = run.report.chi_kappa_power->chi.value;
            o.slice = run.design.slice;
            o.shots = s.ringdown_shots;
            o.seed = derive_seed(seed, {2});
            o.threads = threads;
            run.report.ringdown = run_ringdown(backend, run.design.fill, run.design.delays, o);
        } catch (const Error &e) {
            record("ringdown", e);
        }
    } else {
        run.errors.push_back({"ringdown", "missing_dependency", "needs a usable chi-kappa-power result"});
    }
    if (stages < 3) {
        return run;
    }

    if (have_ckp) {
        try {
            design_from_estimates(run.design, spec, *run.report.chi_kappa_power, s);
            EfficiencyOptions o;
            o.window = *run.design.efficiency_window;
            o.ramsey_shots = s.efficiency_ramsey_shots;
            o.iq = matched_options(s, s.efficiency_iq_shots, derive_seed(seed, {3}), threads);
            run.report.efficiency = run_efficiency(backend, *run.design.efficiency_pulse, o);
        } catch (const Error &e) {
            record("efficiency", e);
        }
    } else {
        run.errors.push_back({"efficiency", "missing_dependency", "needs a usable chi-kappa-power result"});
    }
    if (stages < 4) {
        return run;
    }

    try {
        require(run.design.validate_pulse.has_value(), ErrorCode::missing_dependency,
                "validation pulse needs estimates from protocol chi-kappa-power");
        ValidateOptions o;
        o.window = *run.design.validate_window;
        o.tolerance = s.tolerance;
        o.iq = matched_options(s, s.validate_shots, derive_seed(seed, {4}), threads);
        run.validation = validate_snr(backend, run.report, *run.design.validate_pulse, o);
    } catch (const Error &e) {
        record("validate-snr", e);
    }
    return run;
}

}  // namespace readout
