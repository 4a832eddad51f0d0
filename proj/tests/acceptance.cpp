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

// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "oracle.hpp"
#include "readoutchar/cli.hpp"
#ifdef READOUTCHAR_WITH_WIRE
#include "readoutchar/wire.hpp"
#endif

namespace {

using namespace readout;
namespace fs = std::filesystem;

const fs::path kSource = READOUTCHAR_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

std::size_t threads() {
    return std::max(1u, std::thread::hardware_concurrency());
}

bool chi2_monotone(const FitResult &f) {
    for (std::size_t i = 1; i < f.chi2_trace.size(); ++i) {
        if (f.chi2_trace[i] > f.chi2_trace[i - 1]) {
            return false;
        }
    }
    return true;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// True when every output except run metadata is byte-identical.
bool same_outputs(const fs::path &a, const fs::path &b, std::string &why) {
    std::size_t files = 0;
    for (const auto &entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file() || entry.path().filename() == "run_info.json") {
            continue;
        }
        const auto rel = fs::relative(entry.path(), a);
        ++files;
        if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) {
            why = rel.string() + " differs";
            return false;
        }
    }
    why = std::to_string(files) + " files identical";
    return files > 0;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "readoutchar");
    std::ostringstream sink;
    return run_cli(args, sink, sink);
}

// ---------------------------------------------------------------------------

struct GridRun {
    std::vector<DeviceRun> runs;
    double seconds = 0.0;
};

GridRun run_grid() {
    const auto cfg = load_config((kSource / "configs/acceptance_grid.json").string());
    const auto t0 = std::chrono::steady_clock::now();
    GridRun g;
    g.runs = run_channels(cfg.devices, cfg.settings, cfg.master_seed, threads(), 4, simulator_factory());
    g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g;
}

Outcome criterion1(const GridRun &g) {
    double worst = 0.0;
    std::size_t ok = 0;
    for (const auto &r : g.runs) {
        if (r.validation && std::isfinite(r.validation->ratio)) {
            worst = std::max(worst, std::abs(r.validation->ratio - 1.0));
            ok += std::abs(r.validation->ratio - 1.0) < 0.10 ? 1 : 0;
        }
    }
    const bool pass = ok == g.runs.size() && g.runs.size() >= 18 && g.seconds < 600.0;
    return {pass, fmt("%zu/%zu points with |ratio-1| < 0.10, worst %.4f, runtime %.1f s", ok, g.runs.size(), worst,
                      g.seconds)};
}

Outcome criterion2(const GridRun &g) {
    double chi = 0.0, kappa = 0.0, nbar = 0.0, eta = 0.0, z = 0.0;
    bool complete = true;
    for (const auto &r : g.runs) {
        const auto &t = r.spec.truth;
        const auto &rep = r.report;
        if (!rep.chi_kappa_power || !rep.chi_kappa_power->usable() || !rep.ringdown || !rep.efficiency) {
            complete = false;
            continue;
        }
        const auto &ckp = *rep.chi_kappa_power;
        chi = std::max(chi, std::abs(ckp.chi.value / t.chi - 1.0));
        kappa = std::max(kappa, std::abs(ckp.kappa.value / t.kappa - 1.0));
        nbar = std::max(nbar, std::abs(ckp.nbar_op[0].value / r.spec.nbar - 1.0));
        eta = std::max(eta, std::abs(rep.efficiency->eta.value / t.eta - 1.0));
        const auto &rd = rep.ringdown->kappa;
        z = std::max(z, std::abs(rd.value - ckp.kappa.value) / std::hypot(rd.error, ckp.kappa.error));
    }
    const bool pass = complete && chi <= 0.02 && kappa <= 0.02 && nbar <= 0.05 && eta <= 0.05 && z <= 3.0;
    return {pass, fmt("worst |chi|%.4f |kappa|%.4f |nbar|%.4f |eta|%.4f, ring-down vs sweep kappa %.2f sigma%s", chi,
                      kappa, nbar, eta, z, complete ? "" : ", some channels incomplete")};
}

Outcome criterion3() {
    std::mt19937_64 rng(20260417);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const DeviceParams p{100.0, 10.0 * u(rng) - 5.0, 0.3 + 9.7 * u(rng), 1.0};
        const double omega_d = p.omega_r + 16.0 * u(rng) - 8.0;
        const double eps = 0.1 + 2.9 * u(rng);
        for (auto q : {QubitState::ground, QubitState::excited}) {
            const double s = pull_sign(q);
            const double rate = std::max({p.kappa, std::abs(omega_d - p.omega_r - s * p.chi), 1.0});
            // Fill for half of [0, T], then ring down; the switch-off lands on the grid.
            const double T = (2.0 + 6.0 * u(rng)) / p.kappa;
            int n = static_cast<int>(std::ceil(T * rate / 0.0025));
            n += n % 2;
            // Same expression as the oracle's grid times, so the edge is exact.
            const double t_off = (n / 2) * (T / n);
            const DrivePulse pulse{omega_d, eps, 0.0, t_off};
            const auto ode = oracle::rk4({p.omega_r, p.chi, p.kappa, omega_d, eps, 0.0, t_off}, s, T, n);
            const AnalyticField field(p, pulse);
            double num = 0.0;
            double den = 0.0;
            for (int i = 0; i <= n; ++i) {
                const complex a = field.field_at(q, i * (T / n));
                num = std::max(num, std::abs(ode[i] - a));
                den = std::max(den, std::abs(a));
            }
            worst = std::max(worst, num / den);
        }
    }
    // Half-life of the free decay by bisection on the photon number.
    double half_err = 0.0;
    for (double kappa : {0.5, 2.0, 4.0, 8.0}) {
        const DeviceParams p{100.0, 1.0, kappa, 1.0};
        const DrivePulse off{100.0, 0.0, 0.0, 0.0};
        const complex init(0.8, -0.3);
        auto n = [&](double t) { return std::norm(transient_alpha(p, off, QubitState::ground, t, init)); };
        double lo = 0.0;
        double hi = 10.0 / kappa;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (n(mid) > 0.5 * n(0.0) ? lo : hi) = mid;
        }
        half_err = std::max(half_err, std::abs(0.5 * (lo + hi) - std::log(2.0) / kappa));
    }
    return {worst < 1e-9 && half_err < 1e-9,
            fmt("max relative deviation %.2e over 100 draws, half-life error %.1e", worst, half_err)};
}

double noiseless_error(const Model &m, const std::vector<double> &x, const std::vector<double> &truth,
                       double perturb, bool periodic = false) {
    FitProblem pr;
    pr.x = x;
    pr.y = m(x, truth);
    pr.sigma.assign(x.size(), 1.0);
    pr.model = m;
    pr.periodic = periodic;
    for (double v : truth) {
        pr.p0.push_back(v == 0.0 ? perturb : v * (1.0 + perturb));
    }
    const auto f = lm_fit(pr);
    double worst = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        worst = std::max(worst, std::abs(f.params[j] - truth[j]) / std::max(1.0, std::abs(truth[j])));
    }
    return f.converged ? worst : 1.0;
}

Outcome criterion4(const GridRun &g) {
    std::vector<double> xs;
    for (int i = 0; i <= 60; ++i) {
        xs.push_back(-6.0 + 0.2 * i);
    }
    std::vector<double> ts;
    for (int i = 0; i <= 24; ++i) {
        ts.push_back(i / 24.0);
    }
    const LineShapeContext ctx{0.0, 1.0, Window{0.0, 2.0}, LineShapeMode::exact};
    std::vector<double> ws;
    std::vector<QubitState> states;
    for (int i = 0; i <= 40; ++i) {
        for (auto q : {QubitState::ground, QubitState::excited}) {
            ws.push_back(88.0 + 0.6 * i);
            states.push_back(q);
        }
    }
    const Model two = two_state_lines_model(states, ctx);
    const double rec = std::max({noiseless_error(lorentzian_model(), xs, {1.0, 0.5, 2.0, 0.1}, 0.2),
                                 noiseless_error(exp_decay_model(), ts, {3.0, 4.0, 0.2}, 0.2),
                                 noiseless_error(two, ws, {100.0, 1.0, 4.0, 1.0}, 0.002, true)});

    // Jacobian against a central difference of the model itself.
    double jac = 0.0;
    const std::vector<double> p{100.3, 0.8, 3.5, 1.2};
    FitProblem pr;
    pr.x = ws;
    pr.y = two(ws, p);
    pr.sigma.assign(ws.size(), 1.0);
    pr.model = two;
    pr.p0 = p;
    const Eigen::MatrixXd J = detail::LeastSquares(pr).jacobian(p);
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(p[j]));
        auto pp = p;
        auto pm = p;
        pp[j] += h;
        pm[j] -= h;
        const auto fp = two(ws, pp);
        const auto fm = two(ws, pm);
        double scale = 0.0;
        double diff = 0.0;
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const double fd = (fp[i] - fm[i]) / (2.0 * h);
            scale = std::max(scale, std::abs(fd));
            diff = std::max(diff, std::abs(-J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - fd));
        }
        jac = std::max(jac, diff / scale);
    }

    // Every fit recorded during the grid run.
    std::size_t traces = 0;
    std::size_t monotone = 0;
    for (const auto &r : g.runs) {
        for (const auto *f : {r.report.chi_kappa_power ? &r.report.chi_kappa_power->fit : nullptr,
                              r.report.ringdown ? &r.report.ringdown->fit : nullptr}) {
            if (f != nullptr && f->has_value()) {
                ++traces;
                monotone += chi2_monotone(**f) ? 1 : 0;
            }
        }
    }
    return {rec < 1e-8 && jac < 1e-6 && traces > 0 && monotone == traces,
            fmt("noiseless recovery %.1e, Jacobian deviation %.1e, chi2 monotone on %zu/%zu traces", rec, jac,
                monotone, traces)};
}

Outcome criterion5() {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int c = 0; c < 10; ++c) {
        const double kappa = 2.0 + 6.0 * u(rng);
        const DeviceParams p{100.0, kappa * (0.2 + 0.8 * u(rng)), kappa, 0.1 + 0.8 * u(rng)};
        const double tau = (1.0 + 3.0 * u(rng)) / kappa;
        const Window w{0.0, tau + 4.0 / kappa};
        const double omega_d = p.omega_r + kappa * (u(rng) - 0.5);
        // Scale the drive for a dephasing exponent between 0.5 and 3.
        const double d1 = dephasing_exponent(p, DrivePulse{omega_d, 1.0, 0.0, tau}, w);
        const DrivePulse pulse{omega_d, std::sqrt((0.5 + 2.5 * u(rng)) / d1), 0.0, tau};
        const double d = dephasing_exponent(p, pulse, w);
        const auto grid = record_grid(pulse, w, 2000);
        const auto weights = matched_filter(AnalyticField(p, pulse).sample(grid));
        const double snr = measure_snr(sample_iq(p, pulse, QubitState::ground, weights, 100000, 1000 + c),
                                       sample_iq(p, pulse, QubitState::excited, weights, 100000, 1000 + c));
        worst = std::max(worst, std::abs(snr * snr / (4.0 * p.eta * d) - 1.0));
    }

    // Assignment error of simulated clouds at SNR = 2 with a midpoint threshold.
    const DeviceParams p{100.0, 2.0, 4.0, 1.0};
    const Window w{0.0, 3.0};
    const double d1 = dephasing_exponent(p, DrivePulse{100.0, 1.0, 0.0, 2.0}, w);
    const DrivePulse pulse{100.0, 1.0 / std::sqrt(d1), 0.0, 2.0};
    const auto weights = matched_filter(AnalyticField(p, pulse).sample(record_grid(pulse, w, 2000)));
    const complex m0 = mean_outcome(p, pulse, QubitState::ground, weights);
    const complex m1 = mean_outcome(p, pulse, QubitState::excited, weights);
    const complex axis = (m1 - m0) / std::abs(m1 - m0);
    const double mid = std::real(std::conj(axis) * (m0 + m1)) / 2.0;
    const std::size_t shots = 200000;
    std::size_t wrong = 0;
    for (auto q : {QubitState::ground, QubitState::excited}) {
        for (auto z : sample_iq(p, pulse, q, weights, shots, 77).points) {
            const bool says_one = std::real(std::conj(axis) * z) > mid;
            wrong += says_one != (q == QubitState::excited) ? 1 : 0;
        }
    }
    const double expected = separation_error(std::sqrt(4.0 * p.eta * dephasing_exponent(p, pulse, w)));
    const double observed = static_cast<double>(wrong) / (2.0 * shots);
    const double sigma = std::sqrt(expected * (1.0 - expected) / (2.0 * shots));
    const double zscore = std::abs(observed - expected) / sigma;
    return {worst < 0.02 && zscore < 3.0,
            fmt("worst |SNR^2/(4 eta D) - 1| = %.4f over 10 configs; assignment error %.5f vs %.5f (%.2f sigma)",
                worst, observed, expected, zscore)};
}

Outcome criterion6() {
    double worst = 0.0;
    for (double kappa : {1.0, 2.0, 4.0, 8.0}) {
        const double step = kappa / 100.0;
        double best = -1.0;
        double best_chi = 0.0;
        for (int i = 1; i <= 500; ++i) {
            const double v = steady_state_separation(i * step, kappa, 1.0);
            if (v > best) {
                best = v;
                best_chi = i * step;
            }
        }
        worst = std::max(worst, std::abs(best_chi - kappa / 2.0) / step);
    }
    return {worst < 0.5, fmt("argmax chi within %.2f grid steps of kappa/2", worst)};
}

Outcome criterion7() {
    const auto cfg = load_config((kSource / "configs/chip54.json").string());
    const auto devices = generate_chip(*cfg.chip, cfg.master_seed);
    const auto runs = run_channels(devices, cfg.settings, cfg.master_seed, threads(), 4, simulator_factory());
    double lo = 1e300;
    double hi = 0.0;
    double worst = 0.0;
    std::size_t ok = 0;
    for (const auto &r : runs) {
        if (r.report.chi_kappa_power && r.report.chi_kappa_power->usable()) {
            lo = std::min(lo, r.report.chi_kappa_power->kappa.value);
            hi = std::max(hi, r.report.chi_kappa_power->kappa.value);
        }
        if (r.validation) {
            worst = std::max(worst, std::abs(r.validation->ratio - 1.0));
            ok += r.validation->pass ? 1 : 0;
        }
    }
    const double spread = hi / lo;
    return {runs.size() == 54 && spread >= 1.9 && spread <= 2.1 && ok == 54 && worst < 0.10,
            fmt("%zu channels, max/min kappa %.4f, %zu/54 ratios within 10%% (worst %.4f)", runs.size(), spread, ok,
                worst)};
}

Outcome criterion8() {
    const fs::path dir = fs::temp_directory_path() / "readoutchar_acceptance_determinism";
    fs::remove_all(dir);
    const std::string cfg = (kSource / "configs/single_device.json").string();
    const int a = cli({"validate", "--config", cfg, "--out", (dir / "t1").string(), "--threads", "1"});
    const int b = cli({"validate", "--config", cfg, "--out", (dir / "t4").string(), "--threads", "4"});
    const int c = cli({"validate", "--config", cfg, "--out", (dir / "again").string(), "--threads", "1"});
    std::string why1;
    std::string why2;
    const bool same = same_outputs(dir / "t1", dir / "t4", why1) && same_outputs(dir / "t1", dir / "again", why2);
    fs::remove_all(dir);
    return {a == 0 && b == 0 && c == 0 && same,
            fmt("exit codes %d/%d/%d; threads 1 vs 4: %s; repeat: %s", a, b, c, why1.c_str(), why2.c_str())};
}

Outcome criterion9() {
#ifdef READOUTCHAR_WITH_WIRE
    const fs::path dir = fs::temp_directory_path() / "readoutchar_acceptance_wire";
    fs::remove_all(dir);
    // Reduced shot counts keep the loopback quick; identity does not depend on them.
    const std::string cfg = (kSource / "configs/quick.json").string();
    SimulatorBackend sim(load_config(cfg).devices.at(0).truth);
    WireServer server(sim);
    const int a = cli({"validate", "--config", cfg, "--out", (dir / "local").string()});
    const int b = cli({"validate", "--config", cfg, "--out", (dir / "wire").string(), "--backend",
                       "127.0.0.1:" + std::to_string(server.port())});
    std::string why;
    const bool same = same_outputs(dir / "local", dir / "wire", why);
    fs::remove_all(dir);
    return {a == 0 && b == 0 && same, fmt("exit codes %d/%d; %s", a, b, why.c_str())};
#else
    return {true, "wire backend not built; criterion skipped"};
#endif
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    int failures = 0;
    auto report = [&](int n, const char *name, const Outcome &o) {
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
        failures += o.pass ? 0 : 1;
    };
    auto guarded = [](const std::function<Outcome()> &f) {
        try {
            return f();
        } catch (const std::exception &e) {
            return Outcome{false, std::string("threw: ") + e.what()};
        }
    };
    GridRun grid;
    try {
        grid = run_grid();
    } catch (const std::exception &e) {
        std::printf("grid run threw: %s\n", e.what());
    }
    report(1, "SNR model accuracy", guarded([&] { return criterion1(grid); }));
    report(2, "parameter recovery", guarded([&] { return criterion2(grid); }));
    report(3, "analytic vs numeric field", guarded(criterion3));
    report(4, "fit engine", guarded([&] { return criterion4(grid); }));
    report(5, "SNR identity", guarded(criterion5));
    report(6, "optimum chi", guarded(criterion6));
    report(7, "chip scenario", guarded(criterion7));
    report(8, "determinism", guarded(criterion8));
    report(9, "wire loopback", guarded(criterion9));
    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
