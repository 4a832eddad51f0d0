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

// Detection-chain simulation: demodulation weights, single-shot IQ clouds with
// efficiency-limited Gaussian noise, cloud SNR, and Ramsey contrast/phase
// measurements under a resonator drive.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "readoutchar/error.hpp"
#include "readoutchar/model.hpp"
#include "readoutchar/rng.hpp"
#include "readoutchar/types.hpp"

namespace readout {

// Trapezoid quadrature weights of a grid: integral f dt ~ sum_i h_i f_i.
inline std::vector<double> trapezoid_weights(std::span<const double> times) {
    std::vector<double> h(times.size(), 0.0);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double dt = times[i + 1] - times[i];
        h[i] += dt / 2.0;
        h[i + 1] += dt / 2.0;
    }
    return h;
}

// Demodulation weights on a time grid. A shot integrates
// sqrt(kappa) * integral w(t) alpha(t) dt, evaluated with trapezoid weights.
// Valid weights have unit norm: sum |w|^2 h = 1.
struct FilterWeights {
    std::vector<double> times;
    std::vector<complex> w;

    double norm_squared() const {
        const auto h = trapezoid_weights(times);
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            s += std::norm(w[i]) * h[i];
        }
        return s;
    }

    complex project(std::span<const complex> alpha) const {
        require(alpha.size() == w.size(), ErrorCode::invalid_argument, "record and weights differ in length");
        const auto h = trapezoid_weights(times);
        complex s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            s += w[i] * alpha[i] * h[i];
        }
        return s;
    }

    void validate() const {
        require(times.size() == w.size() && times.size() >= 2, ErrorCode::invalid_argument,
                "weights need matching times and values (>= 2 points)");
        for (std::size_t i = 1; i < times.size(); ++i) {
            require(times[i] > times[i - 1], ErrorCode::invalid_argument, "weight grid must be strictly increasing");
        }
        require(std::abs(norm_squared() - 1.0) < 1e-9, ErrorCode::invalid_argument, "weights must have unit norm");
    }

    bool operator==(const FilterWeights &) const = default;
};

inline FilterWeights normalized(std::vector<double> times, std::vector<complex> w) {
    FilterWeights f{std::move(times), std::move(w)};
    const double n2 = f.norm_squared();
    require(n2 > 0.0 && std::isfinite(n2), ErrorCode::degenerate_separation, "weights have zero norm");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto &x : f.w) {
        x *= scale;
    }
    return f;
}

// Weights proportional to conj(alpha_0 - alpha_1). Identical branches carry no
// state information and are rejected.
inline FilterWeights matched_filter(const FieldTrajectory &traj) {
    traj.validate();
    require(traj.size() >= 2, ErrorCode::invalid_argument, "trajectory needs at least two samples");
    std::vector<complex> w(traj.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        w[i] = std::conj(traj.alpha0[i] - traj.alpha1[i]);
        scale = std::max({scale, std::abs(traj.alpha0[i]), std::abs(traj.alpha1[i])});
    }
    FilterWeights f{traj.times, w};
    const double n2 = f.norm_squared();
    const double span = traj.times.back() - traj.times.front();
    require(n2 > 1e-24 * scale * scale * span && n2 > 0.0, ErrorCode::degenerate_separation,
            "pointer-state trajectories are identical; no separating weights exist");
    return normalized(std::move(f.times), std::move(f.w));
}

inline FilterWeights boxcar_weights(std::vector<double> times) {
    std::vector<complex> w(times.size(), complex(1.0, 0.0));
    return normalized(std::move(times), std::move(w));
}

// Unit-norm boxcars over consecutive index ranges of the grid. Disjoint
// support makes the set orthonormal; together they resolve the mean record in
// time.
inline std::vector<FilterWeights> bin_weights(const std::vector<double> &times, std::size_t bins) {
    require(bins >= 1 && times.size() >= 2 * bins + 1, ErrorCode::invalid_argument, "too many bins for the grid");
    std::vector<FilterWeights> out;
    const std::size_t n = times.size();
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * n / bins;
        const std::size_t hi = (b + 1) * n / bins;
        std::vector<complex> w(n, 0.0);
        for (std::size_t i = lo; i < hi; ++i) {
            w[i] = 1.0;
        }
        out.push_back(normalized(times, std::move(w)));
    }
    return out;
}

struct IQCloud {
    QubitState state = QubitState::ground;
    std::vector<complex> points;
    std::uint64_t seed = 0;

    complex mean() const {
        complex s = 0.0;
        for (auto z : points) {
            s += z;
        }
        return s / static_cast<double>(points.size());
    }

    bool operator==(const IQCloud &) const = default;
};

// Noise-free mean outcome sqrt(kappa) * integral w alpha_q dt.
inline complex mean_outcome(const DeviceParams &p, const PulseSequence &seq, QubitState q,
                            const FilterWeights &weights) {
    const auto traj = AnalyticField(p, seq).sample(weights.times);
    return std::sqrt(p.kappa) * weights.project(traj.alpha(q));
}

// Single shots: mean outcome plus complex Gaussian noise with per-quadrature
// variance 1/(2 eta). Shot i draws from counter i of the (seed, state) stream.
inline IQCloud sample_iq(const DeviceParams &p, const PulseSequence &seq, QubitState q, const FilterWeights &weights,
                         std::size_t shots, std::uint64_t seed) {
    p.validate();
    weights.validate();
    require(shots >= 1, ErrorCode::invalid_argument, "shots must be >= 1");
    const complex mu = mean_outcome(p, seq, q, weights);
    const double sigma = std::sqrt(1.0 / (2.0 * p.eta));
    const CounterRng rng(seed, static_cast<std::uint64_t>(q));
    IQCloud cloud{q, {}, seed};
    cloud.points.resize(shots);
    for (std::size_t i = 0; i < shots; ++i) {
        cloud.points[i] = mu + sigma * rng.normal_pair(i);
    }
    return cloud;
}

struct SnrEstimate {
    double snr = 0.0;
    double separation = 0.0;
    double sigma = 0.0;
    // First-order standard error of snr from both clouds' sampling noise.
    double stderr_snr = 0.0;
};

// Separation of the empirical means divided by the pooled standard deviation of
// both clouds projected on the axis joining the means.
inline SnrEstimate measure_snr_detail(const IQCloud &c0, const IQCloud &c1) {
    const std::size_t n0 = c0.points.size();
    const std::size_t n1 = c1.points.size();
    require(n0 >= 2 && n1 >= 2, ErrorCode::invalid_argument, "each cloud needs at least two points");
    const complex m0 = c0.mean();
    const complex m1 = c1.mean();
    const double sep = std::abs(m1 - m0);
    const complex axis = sep > 0.0 ? (m1 - m0) / sep : complex(1.0, 0.0);
    auto along = [&](complex z, complex m) { return (std::conj(axis) * (z - m)).real(); };
    double ss = 0.0;
    for (auto z : c0.points) {
        ss += std::pow(along(z, m0), 2);
    }
    for (auto z : c1.points) {
        ss += std::pow(along(z, m1), 2);
    }
    const double pooled = std::sqrt(ss / static_cast<double>(n0 + n1 - 2));
    require(pooled > 0.0, ErrorCode::undefined_snr,
            sep > 0.0 ? "clouds have zero spread" : "coincident means with zero variance");
    SnrEstimate out;
    out.separation = sep;
    out.sigma = pooled;
    out.snr = sep / pooled;
    const double nn0 = static_cast<double>(n0);
    const double nn1 = static_cast<double>(n1);
    out.stderr_snr = std::sqrt(1.0 / nn0 + 1.0 / nn1 + out.snr * out.snr / (2.0 * (nn0 + nn1 - 2.0)));
    return out;
}

inline double measure_snr(const IQCloud &c0, const IQCloud &c1) {
    return measure_snr_detail(c0, c1).snr;
}

// Which qubit observable a Ramsey sequence reports. `superposition` gives the
// differential phase of the two pointer branches; `ground` / `excited` give the
// Stark phase accumulated by that branch's photons.
enum class RamseyProbe { ground, excited, superposition };

inline std::string to_string(RamseyProbe p) {
    switch (p) {
        case RamseyProbe::ground: return "0";
        case RamseyProbe::excited: return "1";
        case RamseyProbe::superposition: return "superposition";
    }
    return "?";
}

inline RamseyProbe probe_for(QubitState q) {
    return q == QubitState::ground ? RamseyProbe::ground : RamseyProbe::excited;
}

struct RamseyResult {
    double phase = 0.0;
    double contrast = 0.0;
    std::size_t shots = 0;
    double phase_stderr = 0.0;
    double contrast_stderr = 0.0;

    bool operator==(const RamseyResult &) const = default;
};

// Qubit coherence c = exp(-D + i phase) over the window.
inline complex ramsey_coherence(const DeviceParams &p, const PulseSequence &seq, const Window &w, RamseyProbe probe) {
    const AnalyticField field(p, seq);
    const double d = field.dephasing_exponent(w);
    double phase = 0.0;
    switch (probe) {
        case RamseyProbe::superposition: phase = field.differential_phase(w); break;
        case RamseyProbe::ground: phase = field.stark_phase(QubitState::ground, w); break;
        case RamseyProbe::excited: phase = field.stark_phase(QubitState::excited, w); break;
    }
    return std::polar(std::exp(-d), phase);
}

// Estimates contrast and phase from <sigma_x> and <sigma_y>, each measured
// with `shots` ideal projective shots. The contrast estimator removes the
// binomial bias of X^2 + Y^2 before taking the root.
inline RamseyResult estimate_ramsey(std::size_t kx, std::size_t ky, std::size_t shots) {
    const double n = static_cast<double>(shots);
    const double x = 2.0 * static_cast<double>(kx) / n - 1.0;
    const double y = 2.0 * static_cast<double>(ky) / n - 1.0;
    const double r2 = (n * (x * x + y * y) - 2.0) / (n - 1.0);
    RamseyResult out;
    out.shots = shots;
    out.phase = std::atan2(y, x);
    out.contrast = std::clamp(std::sqrt(std::max(0.0, r2)), 0.0, 1.0);
    const double c = std::cos(out.phase);
    const double s = std::sin(out.phase);
    const double vx = (1.0 - x * x) / n;
    const double vy = (1.0 - y * y) / n;
    out.contrast_stderr = std::sqrt(c * c * vx + s * s * vy);
    const double tangential = std::sqrt(s * s * vx + c * c * vy);
    out.phase_stderr = tangential / std::max(out.contrast, tangential);
    return out;
}

inline RamseyResult simulate_ramsey(const DeviceParams &p, const PulseSequence &seq, const Window &w,
                                    RamseyProbe probe, std::size_t shots, std::uint64_t seed) {
    require(shots >= 100, ErrorCode::invalid_argument, "Ramsey estimates need at least 100 shots");
    const complex c = ramsey_coherence(p, seq, w, probe);
    const double px = (1.0 + c.real()) / 2.0;
    const double py = (1.0 + c.imag()) / 2.0;
    const CounterRng rx(seed, 0);
    const CounterRng ry(seed, 1);
    std::size_t kx = 0;
    std::size_t ky = 0;
    for (std::size_t i = 0; i < shots; ++i) {
        kx += rx.uniform(i) < px ? 1 : 0;
        ky += ry.uniform(i) < py ? 1 : 0;
    }
    return estimate_ramsey(kx, ky, shots);
}

}  // namespace readout
