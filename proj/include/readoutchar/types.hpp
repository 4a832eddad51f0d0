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
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "readoutchar/error.hpp"

namespace readout {

using complex = std::complex<double>;

// Units throughout: angular frequencies and rates in rad/us, times in us,
// resonator fields in sqrt(photons).

enum class QubitState { ground = 0, excited = 1 };

// Resonator pull direction: +1 for |0>, -1 for |1>.
constexpr double pull_sign(QubitState q) {
    return q == QubitState::ground ? 1.0 : -1.0;
}

constexpr QubitState other(QubitState q) {
    return q == QubitState::ground ? QubitState::excited : QubitState::ground;
}

inline std::string to_string(QubitState q) {
    return q == QubitState::ground ? "0" : "1";
}

struct DeviceParams {
    double omega_r = 0.0;
    double chi = 0.0;
    double kappa = 1.0;
    double eta = 1.0;

    void validate() const {
        require(std::isfinite(omega_r) && omega_r > 0.0, ErrorCode::invalid_argument, "omega_r must be > 0");
        require(std::isfinite(chi), ErrorCode::invalid_argument, "chi must be finite");
        require(std::isfinite(kappa) && kappa > 0.0, ErrorCode::invalid_argument, "kappa must be > 0");
        require(std::isfinite(eta) && eta > 0.0 && eta <= 1.0, ErrorCode::invalid_argument, "eta must be in (0, 1]");
    }

    // Resonator frequency with the qubit in state q.
    double pulled_frequency(QubitState q) const {
        return omega_r + pull_sign(q) * chi;
    }

    bool operator==(const DeviceParams &) const = default;
};

// Square drive envelope in the frame rotating at omega_d. eps is zero outside
// [t_on, t_off].
struct DrivePulse {
    double omega_d = 0.0;
    double eps = 0.0;
    double t_on = 0.0;
    double t_off = 0.0;

    void validate() const {
        require(std::isfinite(omega_d), ErrorCode::invalid_argument, "omega_d must be finite");
        require(std::isfinite(eps) && eps >= 0.0, ErrorCode::invalid_argument, "eps must be >= 0");
        require(t_on >= 0.0 && t_off >= t_on, ErrorCode::invalid_argument, "pulse timing requires t_off >= t_on >= 0");
    }

    double duration() const {
        return t_off - t_on;
    }

    bool operator==(const DrivePulse &) const = default;
};

// Detuning of the drive from the state-q pulled resonator.
inline double detuning(const DeviceParams &p, double omega_d, QubitState q) {
    return omega_d - p.omega_r - pull_sign(q) * p.chi;
}

// Pulses that are active at the same time add. All pulses of a sequence share
// one drive frequency, which defines the rotating frame.
class PulseSequence {
  public:
    PulseSequence() = default;
    PulseSequence(DrivePulse pulse) : pulses_{pulse} {  // NOLINT(google-explicit-constructor)
        pulse.validate();
    }
    explicit PulseSequence(std::vector<DrivePulse> pulses) : pulses_(std::move(pulses)) {
        for (const auto &p : pulses_) {
            p.validate();
            require(p.omega_d == pulses_.front().omega_d, ErrorCode::invalid_argument,
                    "all pulses of a sequence must share one drive frequency");
        }
    }

    std::span<const DrivePulse> pulses() const {
        return pulses_;
    }
    bool empty() const {
        return pulses_.empty();
    }

    double omega_d() const {
        return pulses_.empty() ? 0.0 : pulses_.front().omega_d;
    }

    // Total amplitude at time t; edges belong to the later segment.
    double amplitude_at(double t) const {
        double eps = 0.0;
        for (const auto &p : pulses_) {
            if (t >= p.t_on && t < p.t_off) {
                eps += p.eps;
            }
        }
        return eps;
    }

    std::vector<double> edges() const {
        std::vector<double> out;
        for (const auto &p : pulses_) {
            out.push_back(p.t_on);
            out.push_back(p.t_off);
        }
        return out;
    }

  private:
    std::vector<DrivePulse> pulses_;
};

struct Window {
    double start = 0.0;
    double end = 0.0;

    void validate() const {
        require(std::isfinite(start) && std::isfinite(end) && start >= 0.0 && end > start,
                ErrorCode::invalid_argument, "window requires end > start >= 0");
    }
    double length() const {
        return end - start;
    }
    bool operator==(const Window &) const = default;
};

struct FieldTrajectory {
    std::vector<double> times;
    std::vector<complex> alpha0;
    std::vector<complex> alpha1;

    std::size_t size() const {
        return times.size();
    }

    std::span<const complex> alpha(QubitState q) const {
        return q == QubitState::ground ? std::span<const complex>(alpha0) : std::span<const complex>(alpha1);
    }

    void validate() const {
        require(times.size() == alpha0.size() && times.size() == alpha1.size(), ErrorCode::invalid_argument,
                "trajectory arrays must have equal length");
        for (std::size_t i = 1; i < times.size(); ++i) {
            require(times[i] > times[i - 1], ErrorCode::invalid_argument, "trajectory grid must be strictly increasing");
        }
    }
};

}  // namespace readout
