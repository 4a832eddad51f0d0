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

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "readoutchar/signal.hpp"
#include "readoutchar/types.hpp"

namespace readout {

struct RamseyRequest {
    DrivePulse pulse;
    Window window;
    RamseyProbe probe = RamseyProbe::superposition;
    std::size_t shots = 0;
    std::uint64_t seed = 0;

    bool operator==(const RamseyRequest &) const = default;
};

struct IqRequest {
    DrivePulse pulse;
    QubitState state = QubitState::ground;
    FilterWeights weights;
    std::size_t shots = 0;
    std::uint64_t seed = 0;

    bool operator==(const IqRequest &) const = default;
};

// What a protocol may ask of an experiment. Implementations must tolerate
// concurrent calls.
class ExperimentBackend {
  public:
    virtual ~ExperimentBackend() = default;
    virtual RamseyResult ramsey_under_drive(const RamseyRequest &req) = 0;
    virtual IQCloud acquire_iq(const IqRequest &req) = 0;
};

// In-process simulator of one readout channel with known device parameters.
class SimulatorBackend final : public ExperimentBackend {
  public:
    explicit SimulatorBackend(DeviceParams truth) : truth_(truth) {
        truth_.validate();
    }

    const DeviceParams &truth() const {
        return truth_;
    }

    RamseyResult ramsey_under_drive(const RamseyRequest &req) override {
        return simulate_ramsey(truth_, req.pulse, req.window, req.probe, req.shots, req.seed);
    }

    IQCloud acquire_iq(const IqRequest &req) override {
        return sample_iq(truth_, req.pulse, req.state, req.weights, req.shots, req.seed);
    }

  private:
    DeviceParams truth_;
};

// Forwards to another backend and records which operations were requested.
class RecordingBackend final : public ExperimentBackend {
  public:
    explicit RecordingBackend(ExperimentBackend &inner) : inner_(inner) {
    }

    RamseyResult ramsey_under_drive(const RamseyRequest &req) override {
        {
            std::lock_guard lock(mu_);
            ramsey_.push_back(req);
        }
        return inner_.ramsey_under_drive(req);
    }

    IQCloud acquire_iq(const IqRequest &req) override {
        {
            std::lock_guard lock(mu_);
            iq_.push_back(req);
        }
        return inner_.acquire_iq(req);
    }

    std::vector<RamseyRequest> ramsey_calls() const {
        std::lock_guard lock(mu_);
        return ramsey_;
    }
    std::vector<IqRequest> iq_calls() const {
        std::lock_guard lock(mu_);
        return iq_;
    }

  private:
    ExperimentBackend &inner_;
    mutable std::mutex mu_;
    std::vector<RamseyRequest> ramsey_;
    std::vector<IqRequest> iq_;
};

}  // namespace readout
