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

// Joint line-shape model of the per-state Stark phase versus drive frequency.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "readoutchar/fit.hpp"
#include "readoutchar/model.hpp"
#include "readoutchar/types.hpp"

namespace readout {

enum class LineShapeMode {
    // 2 s_q chi nbar_q (tau - 2/kappa)
    steady_state,
    // Stark phase integrated over the measurement window from the closed-form
    // field trajectory.
    exact,
    // steady_state when the pulse lasts at least 10/kappa, exact otherwise.
    automatic,
};

// Pulse timing and phase-integration window shared by every sweep point.
struct LineShapeContext {
    double t_on = 0.0;
    double t_off = 1.0;
    Window window{0.0, 1.0};
    LineShapeMode mode = LineShapeMode::exact;
};

// Parameter order of the joint fit.
struct LineParams {
    double omega_r = 0.0;
    double chi = 0.0;
    double kappa = 1.0;
    double eps2 = 0.0;

    static std::vector<std::string> names() {
        return {"omega_r", "chi", "kappa", "eps2"};
    }
    static LineParams from(std::span<const double> p) {
        return {p[0], p[1], std::abs(p[2]), std::max(0.0, p[3])};
    }
};

inline double line_photons(const LineParams &lp, double omega_d, QubitState q) {
    const double d = omega_d - lp.omega_r - pull_sign(q) * lp.chi;
    return lp.eps2 / (d * d + lp.kappa * lp.kappa / 4.0);
}

inline double model_two_state_lines(double omega_d, const LineParams &lp, QubitState q, const LineShapeContext &ctx) {
    require(lp.kappa > 0.0 && lp.eps2 >= 0.0, ErrorCode::invalid_argument, "line model needs kappa > 0, eps2 >= 0");
    const double tau = ctx.t_off - ctx.t_on;
    const bool steady = ctx.mode == LineShapeMode::steady_state ||
                        (ctx.mode == LineShapeMode::automatic && tau >= 10.0 / lp.kappa);
    if (steady) {
        return 2.0 * pull_sign(q) * lp.chi * line_photons(lp, omega_d, q) * (tau - 2.0 / lp.kappa);
    }
    const DeviceParams dev{lp.omega_r, lp.chi, lp.kappa, 1.0};
    const DrivePulse pulse{omega_d, std::sqrt(lp.eps2), ctx.t_on, ctx.t_off};
    return AnalyticField(dev, pulse).stark_phase(q, ctx.window);
}

// x holds drive frequencies; states[i] tags which branch point i observed.
inline Model two_state_lines_model(std::vector<QubitState> states, LineShapeContext ctx) {
    return Model{"two_state_lines", LineParams::names(),
                 [states = std::move(states), ctx](std::span<const double> x, std::span<const double> p,
                                                   std::span<double> out) {
                     const LineParams lp = LineParams::from(p);
                     for (std::size_t i = 0; i < x.size(); ++i) {
                         out[i] = model_two_state_lines(x[i], lp, states[i], ctx);
                     }
                 }};
}

// Starting point for the joint fit. Each state's line center comes from its
// extremal phase, the width from the state-0 half-maximum crossings and eps2
// from the peak height. When the sign of the lines is ambiguous the
// positive-phase line is taken as state 0.
inline std::vector<double> two_state_guess(std::span<const double> omega_d, std::span<const double> phase,
                                           std::span<const QubitState> states, const LineShapeContext &ctx) {
    std::vector<double> x0, y0, x1, y1;
    for (std::size_t i = 0; i < omega_d.size(); ++i) {
        (states[i] == QubitState::ground ? x0 : x1).push_back(omega_d[i]);
        (states[i] == QubitState::ground ? y0 : y1).push_back(phase[i]);
    }
    require(x0.size() >= 3 && x1.size() >= 3, ErrorCode::invalid_argument, "each state needs >= 3 sweep points");
    const auto g0 = lorentzian_guess(x0, y0);
    const auto g1 = lorentzian_guess(x1, y1);
    double c0 = g0[1];
    double c1 = g1[1];
    // The pulled lines carry opposite phase signs; if both extrema share a sign
    // the positive one is the state-0 line.
    if (g0[0] < 0.0 && g1[0] < 0.0) {
        std::swap(c0, c1);
    }
    double chi = (c0 - c1) / 2.0;
    const double span = omega_d.back() - omega_d.front();
    const double kappa = std::clamp(g0[2], std::abs(span) / 100.0, std::abs(span));
    if (std::abs(chi) < kappa / 100.0) {
        chi = (g0[0] >= 0.0 ? 1.0 : -1.0) * kappa / 100.0;
    }
    const double omega_r = (c0 + c1) / 2.0;
    const double tau = std::max(ctx.t_off - ctx.t_on, 1e-12);
    const double peak = std::max(std::abs(g0[0]), std::abs(g1[0]));
    const double eps2 = std::max(peak * kappa * kappa / (8.0 * std::abs(chi) * tau), 1e-12);
    return {omega_r, chi, kappa, eps2};
}

}  // namespace readout
