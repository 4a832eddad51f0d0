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

#pragma once

#include <cmath>
#include <string>

#include "readoutchar/error.hpp"
#include "readoutchar/model.hpp"
#include "readoutchar/types.hpp"

namespace readout {

enum class SnrRegime { steady_state, numeric_transient };

inline std::string to_string(SnrRegime r) {
    return r == SnrRegime::steady_state ? "steady_state" : "numeric_transient";
}

struct SnrPrediction {
    // Matched-filter SNR: snr^2 = 4 eta D.
    double snr = 0.0;
    double d_exponent = 0.0;
    // SNR of a boxcar over the same window; never exceeds snr.
    double snr_boxcar = 0.0;
    SnrRegime regime = SnrRegime::numeric_transient;
    DeviceParams params;
    DrivePulse pulse;
    Window window;
};

inline SnrPrediction predict_snr(const DeviceParams &p, const DrivePulse &pulse, const Window &w) {
    p.validate();
    pulse.validate();
    w.validate();
    const AnalyticField field(p, pulse);
    SnrPrediction out;
    out.d_exponent = field.dephasing_exponent(w);
    out.snr = std::sqrt(4.0 * p.eta * out.d_exponent);
    // Boxcar w = 1/sqrt(T): separation sqrt(kappa/T) |integral dalpha|, noise 1/sqrt(2 eta).
    const complex integral = field.difference_integral(w);
    out.snr_boxcar = std::sqrt(2.0 * p.eta * p.kappa / w.length()) * std::abs(integral);
    out.regime = SnrRegime::numeric_transient;
    out.params = p;
    out.pulse = pulse;
    out.window = w;
    return out;
}

// Long constant drive at omega_d = omega_r:
// SNR^2 = 8 eta kappa tau nbar chi^2 / (chi^2 + kappa^2/4).
inline double steady_state_snr(double chi, double kappa, double nbar, double eta, double tau) {
    require(kappa > 0.0 && nbar >= 0.0 && eta > 0.0 && tau > 0.0, ErrorCode::invalid_argument,
            "steady_state_snr needs kappa, eta, tau > 0 and nbar >= 0");
    return std::sqrt(8.0 * eta * kappa * tau * nbar * chi * chi / (chi * chi + kappa * kappa / 4.0));
}

// |alpha_0 - alpha_1|^2 in steady state at omega_d = omega_r for fixed eps.
inline double steady_state_separation(double chi, double kappa, double eps) {
    const double den = chi * chi + kappa * kappa / 4.0;
    return 4.0 * eps * eps * chi * chi / (den * den);
}

// The chi maximizing steady_state_separation at fixed drive amplitude.
inline double optimal_chi_fixed_drive(double kappa) {
    require(kappa > 0.0, ErrorCode::invalid_argument, "kappa must be > 0");
    return kappa / 2.0;
}

// Per-state assignment error with the threshold midway between the clouds.
inline double separation_error(double snr) {
    require(snr >= 0.0, ErrorCode::invalid_argument, "snr must be >= 0");
    return 0.5 * std::erfc(snr / (2.0 * std::sqrt(2.0)));
}

}  // namespace readout
