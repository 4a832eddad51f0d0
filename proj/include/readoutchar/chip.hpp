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

// Multi-channel runs: a seeded chip generator with a controlled linewidth
// spread, a batch runner that isolates per-channel failures, and the
// aggregate statistics reported for a chip.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "readoutchar/config.hpp"
#include "readoutchar/parallel.hpp"
#include "readoutchar/pipeline.hpp"
#include "readoutchar/rng.hpp"

namespace readout {

inline constexpr std::uint64_t kChipTag = 0xC41F;

// kappa_i = kappa_min * spread^u_i with u_i uniform, then affinely rescaled so
// the smallest draw maps to kappa_min and the largest to kappa_min * spread.
inline std::vector<DeviceSpec> generate_chip(const ChipSpec &c, std::uint64_t seed) {
    const CounterRng rng(derive_seed(seed, {kChipTag}), 0);
    std::vector<double> u(c.channels);
    for (std::size_t i = 0; i < c.channels; ++i) {
        u[i] = rng.uniform(i);
    }
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    const double u_lo = *lo;
    const double span = *hi - *lo;
    std::vector<DeviceSpec> out;
    for (std::size_t i = 0; i < c.channels; ++i) {
        const double x = span > 0.0 ? (u[i] - u_lo) / span : 0.0;
        const double kappa = c.kappa_min * std::pow(c.kappa_spread, x);
        DeviceSpec d;
        d.name = "q" + std::to_string(i);
        d.truth = DeviceParams{c.omega_r, c.chi_over_kappa * kappa, kappa, c.eta};
        d.nbar = c.nbar;
        d.omega_op = c.omega_r;
        d.design_chi = d.truth.chi;
        d.design_kappa = kappa;
        if (std::find(c.zero_chi_channels.begin(), c.zero_chi_channels.end(), i) != c.zero_chi_channels.end()) {
            d.truth.chi = 0.0;
        }
        out.push_back(d);
    }
    return out;
}

using BackendFactory = std::function<std::unique_ptr<ExperimentBackend>(const DeviceSpec &)>;

inline BackendFactory simulator_factory() {
    return [](const DeviceSpec &d) { return std::make_unique<SimulatorBackend>(d.truth); };
}

// Characterizes every channel. Channel i uses seed derive_seed(seed, {i});
// channels run concurrently when there are several, otherwise the protocol
// sweeps do. Results do not depend on `threads`.
inline std::vector<DeviceRun> run_channels(const std::vector<DeviceSpec> &devices, const PipelineSettings &s,
                                           std::uint64_t seed, std::size_t threads, int stages,
                                           const BackendFactory &factory) {
    std::vector<DeviceRun> runs(devices.size());
    const bool outer = devices.size() > 1;
    parallel_for(devices.size(), outer ? threads : 1, [&](std::size_t i) {
        const std::uint64_t channel_seed = derive_seed(seed, {i});
        try {
            auto backend = factory(devices[i]);
            runs[i] = characterize_device(*backend, devices[i], s, channel_seed, outer ? 1 : threads, stages);
        } catch (const Error &e) {
            runs[i].spec = devices[i];
            runs[i].errors.push_back({"backend", std::string(e.reason()), e.detail()});
        }
    });
    return runs;
}

struct Spread {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
};

inline std::optional<Spread> spread_of(std::vector<double> v) {
    std::erase_if(v, [](double x) { return !std::isfinite(x); });
    if (v.empty()) {
        return std::nullopt;
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double med = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return Spread{n, v.front(), v.back(), med};
}

}  // namespace readout
