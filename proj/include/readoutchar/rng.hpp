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

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, counter), so sweep points and shots can be evaluated in any
// order or on any thread and still reproduce a serial run bit for bit.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace readout {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives a child seed from a parent seed and a path of integer tags, e.g.
// derive_seed(master, {protocol_id, sweep_index, state}).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix64(parent ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t t : tags) {
        h = mix64(h ^ mix64(t + 0x3c6ef372fe94f82bULL));
    }
    return h;
}

class CounterRng {
  public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(derive_seed(seed, {stream})) {
    }

    constexpr std::uint64_t bits(std::uint64_t counter, std::uint64_t lane = 0) const {
        return mix64(mix64(key_ ^ (counter * 0xd1b54a32d192ed03ULL)) + lane * 0x8cb92ba72f3d8dd7ULL);
    }

    // Uniform on the open interval (0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t counter, std::uint64_t lane = 0) const {
        return (static_cast<double>(bits(counter, lane) >> 11) + 0.5) * 0x1.0p-53;
    }

    // One standard complex normal pair (independent N(0,1) real and imaginary
    // parts) per counter value, by Box-Muller.
    std::complex<double> normal_pair(std::uint64_t counter) const {
        const double u1 = uniform(counter, 0);
        const double u2 = uniform(counter, 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

  private:
    std::uint64_t key_;
};

}  // namespace readout
