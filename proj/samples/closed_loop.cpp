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

// Characterizes one simulated readout channel end to end and compares the
// extracted parameters with the simulator's truth.

#include <cstdio>

#include "readoutchar/pipeline.hpp"

int main() {
    using namespace readout;

    DeviceSpec dev;
    dev.name = "demo";
    dev.truth = DeviceParams{/*omega_r=*/2 * 3.141592653589793 * 7000.0, /*chi=*/1.0, /*kappa=*/4.0, /*eta=*/0.4};
    dev.nbar = 1.5;
    dev.omega_op = dev.truth.omega_r;
    dev.design_chi = 1.0;
    dev.design_kappa = 4.0;

    SimulatorBackend backend(dev.truth);
    const DeviceRun run = characterize_device(backend, dev, PipelineSettings{}, /*seed=*/2026, /*threads=*/1);
    for (const auto &e : run.errors) {
        std::printf("%s failed: %s (%s)\n", e.stage.c_str(), e.reason.c_str(), e.message.c_str());
    }
    if (run.errors.size() > 0) {
        return 1;
    }

    const auto &ckp = *run.report.chi_kappa_power;
    const auto &rd = *run.report.ringdown;
    const auto &eff = *run.report.efficiency;
    std::printf("chi      %.4f +- %.4f   (truth %.4f)\n", ckp.chi.value, ckp.chi.error, dev.truth.chi);
    std::printf("kappa    %.4f +- %.4f   (truth %.4f)\n", ckp.kappa.value, ckp.kappa.error, dev.truth.kappa);
    std::printf("kappa_rd %.4f +- %.4f\n", rd.kappa.value, rd.kappa.error);
    std::printf("nbar     %.4f +- %.4f   (truth %.4f)\n", ckp.nbar_op[0].value, ckp.nbar_op[0].error, dev.nbar);
    std::printf("eta      %.4f +- %.4f   (truth %.4f)\n", eff.eta.value, eff.eta.error, dev.truth.eta);
    std::printf("SNR predicted %.4f, measured %.4f, ratio %.4f\n", run.validation->snr_predicted,
                run.validation->snr_measured, run.validation->ratio);
    return run.flagged() ? 1 : 0;
}
