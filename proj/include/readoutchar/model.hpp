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

// Dispersive-readout resonator model. Two evaluation paths are provided: a
// closed-form path that propagates the driven damped field segment by segment,
// and a fixed-step RK4 integrator used as its numerical cross-check.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "readoutchar/error.hpp"
#include "readoutchar/types.hpp"

namespace readout {

inline constexpr complex kI{0.0, 1.0};

// Field decay exponent lambda_q = i*Delta_q + kappa/2.
inline complex decay_exponent(const DeviceParams &p, double omega_d, QubitState q) {
    return complex(p.kappa / 2.0, detuning(p, omega_d, q));
}

inline complex steady_state_alpha(const DeviceParams &p, double omega_d, double eps, QubitState q) {
    return -kI * eps / decay_exponent(p, omega_d, q);
}

inline complex steady_state_alpha(const DeviceParams &p, const DrivePulse &pulse, QubitState q) {
    return steady_state_alpha(p, pulse.omega_d, pulse.eps, q);
}

// eps^2 / (Delta_q^2 + kappa^2/4)
inline double steady_state_photons(const DeviceParams &p, double omega_d, double eps, QubitState q) {
    const double d = detuning(p, omega_d, q);
    return eps * eps / (d * d + p.kappa * p.kappa / 4.0);
}

// Field after time t of constant drive (pulse.eps at pulse.omega_d) started
// from alpha_init at t = 0. Pulse timing is ignored here.
inline complex transient_alpha(const DeviceParams &p, const DrivePulse &pulse, QubitState q, double t,
                               complex alpha_init) {
    require(t >= 0.0, ErrorCode::invalid_argument, "transient_alpha requires t >= 0");
    const complex ss = steady_state_alpha(p, pulse, q);
    return ss + (alpha_init - ss) * std::exp(-decay_exponent(p, pulse.omega_d, q) * t);
}

// Qubit frequency shift 2 s_q chi n.
inline double stark_shift(const DeviceParams &p, QubitState q, double n) {
    require(n >= 0.0, ErrorCode::invalid_argument, "photon number must be >= 0");
    return 2.0 * pull_sign(q) * p.chi * n;
}

namespace detail {

// (1 - exp(-m L)) / m, the integral of exp(-m u) over [0, L].
inline complex exp_integral(complex m, double length) {
    const complex x = m * length;
    if (std::abs(x) < 1e-3) {
        // Alternating series of (1 - e^{-x}) / x.
        return length * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x * x * x * x / 120.0);
    }
    return (1.0 - std::exp(-x)) / m;
}

// f(u) = sum_k coef_k exp(-rate_k u) on one constant-drive segment.
struct ExpSum {
    std::array<complex, 3> coef{};
    std::array<complex, 3> rate{};
    int terms = 0;

    void add(complex c, complex r) {
        coef[terms] = c;
        rate[terms] = r;
        ++terms;
    }

    complex at(double u) const {
        complex v = 0.0;
        for (int k = 0; k < terms; ++k) {
            v += coef[k] * std::exp(-rate[k] * u);
        }
        return v;
    }

    complex integral(double length) const {
        complex v = 0.0;
        for (int k = 0; k < terms; ++k) {
            v += coef[k] * exp_integral(rate[k], length);
        }
        return v;
    }
};

// Integral over [0, L] of f(u) * conj(g(u)).
inline complex overlap(const ExpSum &f, const ExpSum &g, double length) {
    complex v = 0.0;
    for (int k = 0; k < f.terms; ++k) {
        for (int l = 0; l < g.terms; ++l) {
            v += f.coef[k] * std::conj(g.coef[l]) * exp_integral(f.rate[k] + std::conj(g.rate[l]), length);
        }
    }
    return v;
}

// One constant-drive interval [start, end) with the field of both branches at
// its start.
struct Segment {
    double start = 0.0;
    double end = 0.0;
    double eps = 0.0;
    std::array<complex, 2> alpha_start{};
};

inline ExpSum branch_field(const DeviceParams &p, double omega_d, const Segment &s, QubitState q) {
    const complex lambda = decay_exponent(p, omega_d, q);
    const complex ss = -kI * s.eps / lambda;
    ExpSum f;
    f.add(ss, 0.0);
    f.add(s.alpha_start[static_cast<int>(q)] - ss, lambda);
    return f;
}

inline ExpSum difference_field(const DeviceParams &p, double omega_d, const Segment &s) {
    const ExpSum f0 = branch_field(p, omega_d, s, QubitState::ground);
    const ExpSum f1 = branch_field(p, omega_d, s, QubitState::excited);
    ExpSum d;
    d.add(f0.coef[0] - f1.coef[0], 0.0);
    d.add(f0.coef[1], f0.rate[1]);
    d.add(-f1.coef[1], f1.rate[1]);
    return d;
}

inline std::vector<double> sorted_breakpoints(const PulseSequence &seq, double start, double end) {
    std::vector<double> pts{start, end};
    for (double e : seq.edges()) {
        if (e > start && e < end) {
            pts.push_back(e);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace detail

// Closed-form field propagation for a piecewise-constant pulse sequence. The
// resonator is empty at t = 0 (pulses never start earlier).
class AnalyticField {
  public:
    AnalyticField(const DeviceParams &params, PulseSequence seq) : params_(params), seq_(std::move(seq)) {
        params_.validate();
    }

    const DeviceParams &params() const {
        return params_;
    }
    const PulseSequence &sequence() const {
        return seq_;
    }

    // Constant-drive segments covering [start, end], fields filled in.
    std::vector<detail::Segment> segments(double start, double end) const {
        require(start >= 0.0 && end >= start, ErrorCode::invalid_argument, "segment range requires end >= start >= 0");
        const auto pts = detail::sorted_breakpoints(seq_, 0.0, std::max(end, 0.0));
        std::vector<detail::Segment> out;
        std::array<complex, 2> alpha{};
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            detail::Segment s{pts[i], pts[i + 1], seq_.amplitude_at(pts[i]), alpha};
            if (s.end > start) {
                detail::Segment clipped = s;
                if (s.start < start) {
                    clipped.start = start;
                    clipped.alpha_start = evolve(s, start - s.start);
                }
                out.push_back(clipped);
            }
            alpha = evolve(s, s.end - s.start);
        }
        return out;
    }

    complex field_at(QubitState q, double t) const {
        if (t <= 0.0) {
            return 0.0;
        }
        const auto segs = segments(0.0, t);
        const auto &last = segs.back();
        return evolve(last, t - last.start)[static_cast<int>(q)];
    }

    // Samples both branches on a strictly increasing grid.
    FieldTrajectory sample(std::span<const double> grid) const {
        FieldTrajectory traj;
        traj.times.assign(grid.begin(), grid.end());
        traj.alpha0.resize(grid.size());
        traj.alpha1.resize(grid.size());
        traj.validate();
        if (grid.empty()) {
            return traj;
        }
        const auto segs = segments(0.0, grid.back());
        std::size_t k = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid[i];
            if (t <= 0.0 || segs.empty()) {
                continue;
            }
            while (k + 1 < segs.size() && segs[k].end <= t) {
                ++k;
            }
            const auto a = evolve(segs[k], t - segs[k].start);
            traj.alpha0[i] = a[0];
            traj.alpha1[i] = a[1];
        }
        return traj;
    }

    // Integral over the window of (kappa/2) |alpha_0 - alpha_1|^2.
    double dephasing_exponent(const Window &w) const {
        w.validate();
        double total = 0.0;
        for (const auto &s : segments(w.start, w.end)) {
            const auto d = detail::difference_field(params_, seq_.omega_d(), s);
            total += detail::overlap(d, d, s.end - s.start).real();
        }
        return std::max(0.0, params_.kappa / 2.0 * total);
    }

    // 2 chi * integral of Re[alpha_0 conj(alpha_1)].
    double differential_phase(const Window &w) const {
        w.validate();
        double total = 0.0;
        for (const auto &s : segments(w.start, w.end)) {
            const auto f0 = detail::branch_field(params_, seq_.omega_d(), s, QubitState::ground);
            const auto f1 = detail::branch_field(params_, seq_.omega_d(), s, QubitState::excited);
            total += detail::overlap(f0, f1, s.end - s.start).real();
        }
        return 2.0 * params_.chi * total;
    }

    // Integral of |alpha_q|^2 over the window, in photon-microseconds.
    double photon_integral(QubitState q, const Window &w) const {
        w.validate();
        double total = 0.0;
        for (const auto &s : segments(w.start, w.end)) {
            const auto f = detail::branch_field(params_, seq_.omega_d(), s, q);
            total += detail::overlap(f, f, s.end - s.start).real();
        }
        return std::max(0.0, total);
    }

    // Accumulated Stark phase of branch q: integral of 2 s_q chi n_q(t).
    double stark_phase(QubitState q, const Window &w) const {
        return 2.0 * pull_sign(q) * params_.chi * photon_integral(q, w);
    }

    // Integral of alpha_0 - alpha_1 over the window.
    complex difference_integral(const Window &w) const {
        w.validate();
        complex total = 0.0;
        for (const auto &s : segments(w.start, w.end)) {
            total += detail::difference_field(params_, seq_.omega_d(), s).integral(s.end - s.start);
        }
        return total;
    }

  private:
    std::array<complex, 2> evolve(const detail::Segment &s, double u) const {
        std::array<complex, 2> out{};
        for (QubitState q : {QubitState::ground, QubitState::excited}) {
            out[static_cast<int>(q)] = detail::branch_field(params_, seq_.omega_d(), s, q).at(u);
        }
        return out;
    }

    DeviceParams params_;
    PulseSequence seq_;
};

inline double dephasing_exponent(const DeviceParams &p, const PulseSequence &seq, const Window &w) {
    return AnalyticField(p, seq).dephasing_exponent(w);
}

inline double differential_phase(const DeviceParams &p, const PulseSequence &seq, const Window &w) {
    return AnalyticField(p, seq).differential_phase(w);
}

// Uniform-ish grid over [start, end] with spacing <= max_dt that contains every
// breakpoint exactly.
inline std::vector<double> make_grid(double start, double end, double max_dt, std::span<const double> breakpoints = {}) {
    require(end > start && max_dt > 0.0, ErrorCode::invalid_argument, "grid requires end > start and max_dt > 0");
    std::vector<double> pts{start, end};
    for (double b : breakpoints) {
        if (b > start && b < end) {
            pts.push_back(b);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<double> grid{pts.front()};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        const auto n = static_cast<std::size_t>(std::ceil((b - a) / max_dt - 1e-12));
        for (std::size_t k = 1; k < n; ++k) {
            grid.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
        }
        grid.push_back(b);
    }
    return grid;
}

inline std::vector<double> make_grid(const PulseSequence &seq, const Window &w, double max_dt) {
    const auto edges = seq.edges();
    return make_grid(w.start, w.end, max_dt, edges);
}

// Largest grid spacing accepted by the RK4 integrator.
inline double max_ode_step(const DeviceParams &p, const PulseSequence &seq, QubitState q) {
    const double rate = std::max({p.kappa, std::abs(detuning(p, seq.omega_d(), q)), 1.0});
    return 0.05 / rate;
}

// Classical RK4 on d alpha/dt = -(i Delta_q + kappa/2) alpha - i eps(t). Steps
// that straddle a pulse edge are split there so the drive is constant within
// every sub-step.
inline std::vector<complex> integrate_alpha_ode(const DeviceParams &p, const PulseSequence &seq, QubitState q,
                                                std::span<const double> grid, complex alpha_init = 0.0) {
    p.validate();
    require(grid.size() >= 2, ErrorCode::invalid_argument, "ODE grid needs at least two points");
    const double guard = max_ode_step(p, seq, q);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double dt = grid[i] - grid[i - 1];
        require(dt > 0.0, ErrorCode::invalid_argument, "ODE grid must be strictly increasing");
        require(dt <= guard * (1.0 + 1e-12), ErrorCode::resolution_guard,
                "grid spacing " + std::to_string(dt) + " us exceeds the resolution limit " + std::to_string(guard) +
                    " us (0.05 / max(kappa, |Delta|, 1))");
    }
    const complex lambda = decay_exponent(p, seq.omega_d(), q);
    const auto edges = seq.edges();

    std::vector<complex> out(grid.size());
    complex a = alpha_init;
    out[0] = a;
    std::vector<double> cuts;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        cuts.assign({grid[i - 1], grid[i]});
        for (double e : edges) {
            if (e > grid[i - 1] && e < grid[i]) {
                cuts.push_back(e);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double h = cuts[k + 1] - cuts[k];
            const complex drive = -kI * seq.amplitude_at(cuts[k]);
            auto rhs = [&](complex y) { return -lambda * y + drive; };
            const complex k1 = rhs(a);
            const complex k2 = rhs(a + 0.5 * h * k1);
            const complex k3 = rhs(a + 0.5 * h * k2);
            const complex k4 = rhs(a + h * k3);
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out[i] = a;
    }
    return out;
}

inline FieldTrajectory integrate_trajectory(const DeviceParams &p, const PulseSequence &seq,
                                            std::span<const double> grid) {
    FieldTrajectory traj;
    traj.times.assign(grid.begin(), grid.end());
    traj.alpha0 = integrate_alpha_ode(p, seq, QubitState::ground, grid);
    traj.alpha1 = integrate_alpha_ode(p, seq, QubitState::excited, grid);
    return traj;
}

}  // namespace readout
