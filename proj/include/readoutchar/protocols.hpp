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

// Characterization protocols, written against ExperimentBackend so the same
// code drives the in-process simulator or a remote endpoint.
//
//   chi/kappa/power  Stark-phase Ramsey sweep of the drive frequency with the
//                    qubit in |0> and |1>; one joint fit of both pulled lines.
//   ring-down        Stark-phase slices at increasing delays after a fill pulse.
//   efficiency       Contrast loss and IQ-cloud SNR of the same pulse:
//                    eta = SNR^2 / (4 D).
//   SNR validation   Prediction from extracted parameters vs. direct SNR.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "readoutchar/backend.hpp"
#include "readoutchar/error.hpp"
#include "readoutchar/fit.hpp"
#include "readoutchar/lineshape.hpp"
#include "readoutchar/parallel.hpp"
#include "readoutchar/rng.hpp"
#include "readoutchar/signal.hpp"
#include "readoutchar/snr_model.hpp"

namespace readout {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Estimate {
    double value = kNaN;
    double error = kNaN;

    bool operator==(const Estimate &o) const {
        auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
        return same(value, o.value) && same(error, o.error);
    }
};

// Seed-path tags, one per kind of backend call.
namespace seed_tag {
inline constexpr std::uint64_t sweep = 1;
inline constexpr std::uint64_t ringdown = 2;
inline constexpr std::uint64_t efficiency_ramsey = 3;
inline constexpr std::uint64_t record_bins = 4;
inline constexpr std::uint64_t matched_clouds = 5;
}  // namespace seed_tag

// ---------------------------------------------------------------------------
// chi / kappa / power

struct SweepSpec {
    std::vector<double> omega_d_values;
    // omega_d is overridden per point.
    DrivePulse pulse_template;
    Window window;
    std::size_t shots = 10000;
    std::vector<QubitState> prepared_states{QubitState::ground, QubitState::excited};

    void validate() const {
        require(omega_d_values.size() >= 8, ErrorCode::invalid_argument, "sweep needs at least 8 frequency points");
        require(std::is_sorted(omega_d_values.begin(), omega_d_values.end()), ErrorCode::invalid_argument,
                "sweep frequencies must be increasing");
        require(shots >= 100, ErrorCode::invalid_argument, "sweep needs at least 100 shots per point");
        require(!prepared_states.empty(), ErrorCode::invalid_argument, "sweep needs at least one prepared state");
        pulse_template.validate();
        window.validate();
    }

    double span() const {
        return omega_d_values.back() - omega_d_values.front();
    }
};

struct SweepPoint {
    double omega_d = 0.0;
    QubitState state = QubitState::ground;
    RamseyResult ramsey;

    bool operator==(const SweepPoint &) const = default;
};

struct ChiKappaPowerOptions {
    // Frequency at which photon numbers are reported.
    double omega_op = 0.0;
    // eps_readout / eps_sweep, known from the relative drive amplitudes.
    double readout_amplitude_ratio = 1.0;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    double min_contrast = 0.05;
};

struct ChiKappaPowerResult {
    Estimate omega_r;
    Estimate chi;
    Estimate kappa;
    // eps^2 of the sweep pulse and of the readout pulse.
    Estimate eps2;
    Estimate eps2_readout;
    // Readout photon number at omega_op for each qubit state.
    Estimate nbar_op[2];
    double omega_op = 0.0;
    std::optional<FitResult> fit;
    std::vector<SweepPoint> points;
    std::vector<std::string> flags;

    bool usable() const {
        return fit.has_value() && fit->converged &&
               std::find(flags.begin(), flags.end(), "degenerate_fit") == flags.end() &&
               std::find(flags.begin(), flags.end(), "chi_not_significant") == flags.end();
    }
};

inline double readout_photons(double omega_op, double omega_r, double chi, double kappa, double eps2, QubitState q) {
    const double d = omega_op - omega_r - pull_sign(q) * chi;
    return eps2 / (d * d + kappa * kappa / 4.0);
}

namespace detail {

// Delta-method variance of f at p for a covariance over the same parameters.
template <typename F>
double propagate(F &&f, const std::vector<double> &p, const std::vector<std::vector<double>> &cov) {
    std::vector<double> grad(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double h = std::max(1e-7, 1e-7 * std::abs(p[j]));
        auto pp = p;
        auto pm = p;
        pp[j] += h;
        pm[j] -= h;
        grad[j] = (f(pp) - f(pm)) / (2.0 * h);
    }
    double var = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        for (std::size_t b = 0; b < p.size(); ++b) {
            var += grad[a] * cov[a][b] * grad[b];
        }
    }
    return std::sqrt(std::max(0.0, var));
}

}  // namespace detail

inline ChiKappaPowerResult run_chi_kappa_power(ExperimentBackend &backend, const SweepSpec &sweep,
                                               const ChiKappaPowerOptions &opts) {
    sweep.validate();
    const std::size_t nf = sweep.omega_d_values.size();
    const std::size_t ns = sweep.prepared_states.size();

    ChiKappaPowerResult out;
    out.omega_op = opts.omega_op;
    out.points.resize(nf * ns);
    parallel_for(nf * ns, opts.threads, [&](std::size_t idx) {
        const std::size_t i = idx / ns;
        const QubitState q = sweep.prepared_states[idx % ns];
        RamseyRequest req;
        req.pulse = sweep.pulse_template;
        req.pulse.omega_d = sweep.omega_d_values[i];
        req.window = sweep.window;
        req.probe = probe_for(q);
        req.shots = sweep.shots;
        req.seed = derive_seed(opts.seed, {seed_tag::sweep, i, static_cast<std::uint64_t>(q)});
        out.points[idx] = SweepPoint{req.pulse.omega_d, q, backend.ramsey_under_drive(req)};
    });

    double min_contrast = 1.0;
    for (const auto &pt : out.points) {
        min_contrast = std::min(min_contrast, pt.ramsey.contrast);
    }
    require(min_contrast >= opts.min_contrast, ErrorCode::overdrive,
            "Ramsey contrast fell to " + std::to_string(min_contrast) +
                " on the pulled lines; the phase is unmeasurable. Lower the sweep drive amplitude.");

    const bool both = std::find(sweep.prepared_states.begin(), sweep.prepared_states.end(), QubitState::ground) !=
                          sweep.prepared_states.end() &&
                      std::find(sweep.prepared_states.begin(), sweep.prepared_states.end(), QubitState::excited) !=
                          sweep.prepared_states.end();
    require(both, ErrorCode::invalid_argument, "the joint line fit needs both prepared states");

    FitProblem problem;
    std::vector<QubitState> states;
    for (const auto &pt : out.points) {
        problem.x.push_back(pt.omega_d);
        problem.y.push_back(pt.ramsey.phase);
        problem.sigma.push_back(std::max(pt.ramsey.phase_stderr, 1.0 / static_cast<double>(sweep.shots)));
        states.push_back(pt.state);
    }
    const LineShapeContext ctx{sweep.pulse_template.t_on, sweep.pulse_template.t_off, sweep.window,
                               LineShapeMode::exact};
    problem.model = two_state_lines_model(states, ctx);
    problem.periodic = true;
    problem.p0 = two_state_guess(problem.x, problem.y, states, ctx);

    try {
        out.fit = lm_fit(problem);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::degenerate_fit) {
            throw;
        }
        out.flags.push_back("degenerate_fit");
        return out;
    }
    const FitResult &fit = *out.fit;
    auto est = [&](std::size_t j) { return Estimate{fit.params[j], fit.std_errors[j]}; };
    out.omega_r = est(0);
    out.chi = est(1);
    out.kappa = Estimate{std::abs(fit.params[2]), fit.std_errors[2]};
    out.eps2 = est(3);
    const double r2 = opts.readout_amplitude_ratio * opts.readout_amplitude_ratio;
    out.eps2_readout = Estimate{out.eps2.value * r2, out.eps2.error * r2};
    for (QubitState q : {QubitState::ground, QubitState::excited}) {
        auto f = [&](const std::vector<double> &p) {
            return readout_photons(opts.omega_op, p[0], p[1], std::abs(p[2]), p[3] * r2, q);
        };
        out.nbar_op[static_cast<int>(q)] = Estimate{f(fit.params), detail::propagate(f, fit.params, fit.covariance)};
    }

    if (!fit.converged) {
        out.flags.push_back("not_converged");
    }
    if (!(std::abs(out.chi.value) > 5.0 * out.chi.error)) {
        out.flags.push_back("chi_not_significant");
    }
    if (2.0 * std::abs(out.chi.value) < out.kappa.value / 4.0) {
        out.flags.push_back("lines_unresolved");
    }
    if (sweep.span() < 3.0 * out.kappa.value) {
        out.flags.push_back("span_too_narrow");
    }
    return out;
}

// ---------------------------------------------------------------------------
// ring-down

struct RingdownOptions {
    // Dispersive shift used to convert Stark phase to photon number.
    double chi_estimate = 0.0;
    // Length of each Ramsey phase slice.
    double slice = 0.05;
    QubitState fill_state = QubitState::ground;
    std::size_t shots = 10000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct RingdownPoint {
    double delay = 0.0;
    RamseyResult ramsey;
    double photons = 0.0;
    double photons_err = 0.0;

    bool operator==(const RingdownPoint &) const = default;
};

struct RingdownResult {
    Estimate kappa;
    // Slice-averaged photon number at zero delay.
    Estimate n0;
    std::optional<FitResult> fit;
    std::vector<RingdownPoint> points;
    std::vector<std::string> flags;
};

inline std::vector<double> exp_decay_guess(std::span<const double> t, std::span<const double> y) {
    const double base = y.back();
    const double a = y.front() - base;
    double k = 1.0 / std::max(t.back() - t.front(), 1e-12);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double ratio = (y[i] - base) / a;
        if (ratio > 0.0 && ratio < 0.5) {
            k = -std::log(ratio) / (t[i] - t.front());
            break;
        }
    }
    return {a, k, base};
}

// Fills the resonator with `fill`, switches the drive off and probes the photon
// number at each delay through the Stark phase of a short Ramsey slice
// (phase = 2 s_q chi * integral n dt). An exponential fit of n(delay) gives
// kappa, independent of the fill detuning.
inline RingdownResult run_ringdown(ExperimentBackend &backend, const DrivePulse &fill, const std::vector<double> &delays,
                                   const RingdownOptions &opts) {
    fill.validate();
    require(fill.eps > 0.0 && fill.duration() > 0.0, ErrorCode::no_signal,
            "ring-down needs a non-zero fill pulse; nothing would populate the resonator");
    require(delays.size() >= 6, ErrorCode::invalid_argument, "ring-down needs at least 6 delay points");
    require(std::is_sorted(delays.begin(), delays.end()) && delays.front() >= 0.0, ErrorCode::invalid_argument,
            "delays must be non-negative and increasing");
    require(opts.chi_estimate != 0.0 && std::isfinite(opts.chi_estimate), ErrorCode::missing_dependency,
            "ring-down needs a chi estimate from chi-kappa-power to convert phase to photons");
    require(opts.slice > 0.0, ErrorCode::invalid_argument, "slice length must be > 0");

    RingdownResult out;
    out.points.resize(delays.size());
    const double scale = 2.0 * pull_sign(opts.fill_state) * opts.chi_estimate * opts.slice;
    parallel_for(delays.size(), opts.threads, [&](std::size_t i) {
        RamseyRequest req;
        req.pulse = fill;
        const double t0 = fill.t_off + delays[i];
        req.window = Window{t0, t0 + opts.slice};
        req.probe = probe_for(opts.fill_state);
        req.shots = opts.shots;
        req.seed = derive_seed(opts.seed, {seed_tag::ringdown, i});
        const auto r = backend.ramsey_under_drive(req);
        out.points[i] = RingdownPoint{delays[i], r, r.phase / scale, r.phase_stderr / std::abs(scale)};
    });

    FitProblem problem;
    for (const auto &pt : out.points) {
        problem.x.push_back(pt.delay);
        problem.y.push_back(pt.photons);
        problem.sigma.push_back(std::max(pt.photons_err, 1e-12));
    }
    problem.model = exp_decay_model();
    problem.p0 = exp_decay_guess(problem.x, problem.y);
    try {
        out.fit = lm_fit(problem);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::degenerate_fit) {
            throw;
        }
        out.flags.push_back("degenerate_fit");
        return out;
    }
    out.kappa = Estimate{out.fit->params[1], out.fit->std_errors[1]};
    out.n0 = Estimate{out.fit->params[0] + out.fit->params[2],
                      std::sqrt(std::max(0.0, out.fit->covariance[0][0] + out.fit->covariance[2][2] +
                                                  2.0 * out.fit->covariance[0][2]))};
    if (!out.fit->converged) {
        out.flags.push_back("not_converged");
    }
    if ((delays.back() - delays.front()) * out.kappa.value < 2.0) {
        out.flags.push_back("delays_too_short");
    }
    if (!(out.kappa.value > 5.0 * out.kappa.error)) {
        out.flags.push_back("kappa_not_significant");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data-driven matched filtering

struct MatchedSnrOptions {
    std::size_t grid_points = 1200;
    std::size_t record_bins = 48;
    std::size_t shots = 100000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct MatchedSnrMeasurement {
    SnrEstimate snr;
    FilterWeights weights;
    // Empirical mean-record difference per bin (state 0 minus state 1).
    std::vector<complex> record_difference;
};

inline std::vector<double> record_grid(const DrivePulse &pulse, const Window &window, std::size_t points) {
    const std::vector<double> edges{pulse.t_on, pulse.t_off};
    return make_grid(window.start, window.end, window.length() / static_cast<double>(points), edges);
}

// Resolves the mean records of both states with time-bin boxcars, builds
// weights proportional to the conjugated empirical difference, and measures the
// SNR of fresh clouds demodulated with those weights.
inline MatchedSnrMeasurement measure_matched_snr(ExperimentBackend &backend, const DrivePulse &pulse,
                                                 const Window &window, const MatchedSnrOptions &opts) {
    const auto grid = record_grid(pulse, window, opts.grid_points);
    const auto bins = bin_weights(grid, opts.record_bins);
    const std::size_t nb = bins.size();
    std::vector<complex> means(2 * nb);
    parallel_for(2 * nb, opts.threads, [&](std::size_t idx) {
        const std::size_t k = idx / 2;
        const auto q = static_cast<QubitState>(idx % 2);
        IqRequest req{pulse, q, bins[k], opts.shots, derive_seed(opts.seed, {seed_tag::record_bins, k, idx % 2})};
        means[idx] = backend.acquire_iq(req).mean();
    });

    MatchedSnrMeasurement out;
    const auto h = trapezoid_weights(grid);
    std::vector<complex> w(grid.size(), 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        const complex diff = means[2 * k] - means[2 * k + 1];
        out.record_difference.push_back(diff);
        // Bin k carries sqrt(kappa H_k) <dalpha>_k, so dividing by sqrt(H_k)
        // recovers the conjugated mean difference up to a global constant.
        double mass = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (bins[k].w[i] != 0.0) {
                mass += h[i];
            }
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (bins[k].w[i] != 0.0) {
                w[i] = std::conj(diff) / std::sqrt(mass);
            }
        }
    }
    out.weights = normalized(grid, std::move(w));

    IQCloud clouds[2];
    parallel_for(2, opts.threads, [&](std::size_t s) {
        IqRequest req{pulse, static_cast<QubitState>(s), out.weights, opts.shots,
                      derive_seed(opts.seed, {seed_tag::matched_clouds, s})};
        clouds[s] = backend.acquire_iq(req);
    });
    out.snr = measure_snr_detail(clouds[0], clouds[1]);
    return out;
}

// ---------------------------------------------------------------------------
// efficiency

struct EfficiencyOptions {
    Window window;
    std::size_t ramsey_shots = 100000;
    MatchedSnrOptions iq;
    double contrast_min = 0.1;
    double contrast_max = 0.8;
};

struct EfficiencyResult {
    Estimate eta;
    Estimate snr;
    Estimate contrast;
    Estimate d_exponent;
    RamseyResult ramsey;
    std::vector<complex> record_difference;
    std::vector<std::string> flags;
};

inline double efficiency_from(double snr, double contrast) {
    require(contrast > 0.0 && contrast < 1.0, ErrorCode::invalid_argument, "contrast must be in (0, 1)");
    return snr * snr / (4.0 * -std::log(contrast));
}

// One pulse, two observables: the Ramsey contrast C of a qubit superposition
// under the pulse gives D = -ln C, and the IQ clouds of the same pulse give the
// SNR. Free-qubit coherence is never measured.
inline EfficiencyResult run_efficiency(ExperimentBackend &backend, const DrivePulse &pulse,
                                       const EfficiencyOptions &opts) {
    pulse.validate();
    opts.window.validate();
    EfficiencyResult out;
    RamseyRequest req{pulse, opts.window, RamseyProbe::superposition, opts.ramsey_shots,
                      derive_seed(opts.iq.seed, {seed_tag::efficiency_ramsey})};
    out.ramsey = backend.ramsey_under_drive(req);
    const double c = out.ramsey.contrast;
    const double c_err = out.ramsey.contrast_stderr;
    out.contrast = Estimate{c, c_err};
    require(!(c >= 1.0 - 3.0 * c_err), ErrorCode::no_information,
            "no measurement-induced dephasing observed (contrast " + std::to_string(c) +
                "); the pulse carries no which-state information");
    require(c >= opts.contrast_min && c <= opts.contrast_max, ErrorCode::power_advisory,
            "contrast " + std::to_string(c) + " outside [" + std::to_string(opts.contrast_min) + ", " +
                std::to_string(opts.contrast_max) + "]; " +
                (c < opts.contrast_min ? "shorten or weaken the pulse" : "lengthen or strengthen the pulse"));
    out.d_exponent = Estimate{-std::log(c), c_err / c};

    const auto m = measure_matched_snr(backend, pulse, opts.window, opts.iq);
    out.record_difference = m.record_difference;
    out.snr = Estimate{m.snr.snr, m.snr.stderr_snr};

    const double eta = efficiency_from(m.snr.snr, c);
    const double rel = std::hypot(2.0 * m.snr.stderr_snr / m.snr.snr, out.d_exponent.error / out.d_exponent.value);
    out.eta = Estimate{eta, eta * rel};
    if (eta > 1.0 + 3.0 * out.eta.error) {
        out.flags.push_back("unphysical_efficiency");
    }
    return out;
}

// ---------------------------------------------------------------------------
// SNR validation

struct CharacterizationReport {
    std::optional<ChiKappaPowerResult> chi_kappa_power;
    std::optional<RingdownResult> ringdown;
    std::optional<EfficiencyResult> efficiency;
};

struct ValidateOptions {
    Window window;
    // eps of the validation pulse relative to the readout pulse.
    double amplitude_ratio = 1.0;
    double tolerance = 0.10;
    MatchedSnrOptions iq;
};

struct SnrValidation {
    double snr_predicted = 0.0;
    double snr_measured = 0.0;
    double snr_measured_err = 0.0;
    double ratio = 0.0;
    double tolerance = 0.10;
    bool pass = false;
    double d_predicted = 0.0;
};

// Model SNR from extracted parameters: sqrt(4 eta D) with D evaluated for
// (omega_r, chi, kappa, eps) as estimated.
inline double predicted_snr(const CharacterizationReport &report, const DrivePulse &pulse, const Window &window,
                            double amplitude_ratio, double *d_out = nullptr) {
    require(report.chi_kappa_power.has_value() && report.chi_kappa_power->usable(), ErrorCode::missing_dependency,
            "SNR prediction needs converged estimates from protocol chi-kappa-power");
    require(report.efficiency.has_value() && std::isfinite(report.efficiency->eta.value),
            ErrorCode::missing_dependency, "SNR prediction needs an estimate from protocol efficiency");
    const auto &ckp = *report.chi_kappa_power;
    const DeviceParams est{ckp.omega_r.value, ckp.chi.value, ckp.kappa.value, 1.0};
    DrivePulse p = pulse;
    p.eps = std::sqrt(ckp.eps2_readout.value) * amplitude_ratio;
    const double d = AnalyticField(est, p).dephasing_exponent(window);
    if (d_out != nullptr) {
        *d_out = d;
    }
    return std::sqrt(4.0 * report.efficiency->eta.value * d);
}

inline SnrValidation validate_snr(ExperimentBackend &backend, const CharacterizationReport &report,
                                  const DrivePulse &pulse, const ValidateOptions &opts) {
    SnrValidation out;
    out.tolerance = opts.tolerance;
    out.snr_predicted = predicted_snr(report, pulse, opts.window, opts.amplitude_ratio, &out.d_predicted);
    const auto m = measure_matched_snr(backend, pulse, opts.window, opts.iq);
    out.snr_measured = m.snr.snr;
    out.snr_measured_err = m.snr.stderr_snr;
    out.ratio = out.snr_predicted / out.snr_measured;
    out.pass = std::abs(out.ratio - 1.0) < opts.tolerance;
    return out;
}

}  // namespace readout
