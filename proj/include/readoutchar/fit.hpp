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

// Levenberg-Marquardt weighted nonlinear least squares with finite-difference
// Jacobians, plus the scalar model functions the protocols fit.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "readoutchar/error.hpp"

namespace readout {

// A model maps (x samples, parameter vector) to predictions at every sample.
struct Model {
    std::string name;
    std::vector<std::string> param_names;
    std::function<void(std::span<const double> x, std::span<const double> params, std::span<double> out)> evaluate;

    std::size_t n_params() const {
        return param_names.size();
    }

    std::vector<double> operator()(std::span<const double> x, std::span<const double> params) const {
        std::vector<double> out(x.size());
        evaluate(x, params, out);
        return out;
    }
};

struct FitProblem {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;
    Model model;
    std::vector<double> p0;
    // Parameters held at p0. Empty means all free.
    std::vector<bool> fixed;
    // Residuals are angles: wrap y - f into [-pi, pi].
    bool periodic = false;

    std::size_t n_free() const {
        return static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), false)) +
               (fixed.empty() ? p0.size() : 0);
    }

    void validate() const {
        require(x.size() == y.size() && x.size() == sigma.size(), ErrorCode::invalid_argument,
                "x, y and sigma must have equal length");
        require(p0.size() == model.n_params(), ErrorCode::invalid_argument,
                "initial parameter vector does not match model " + model.name);
        require(fixed.empty() || fixed.size() == p0.size(), ErrorCode::invalid_argument, "fixed mask has wrong length");
        for (double s : sigma) {
            require(s > 0.0 && std::isfinite(s), ErrorCode::invalid_argument, "sigma must be > 0 elementwise");
        }
        for (double v : p0) {
            require(std::isfinite(v), ErrorCode::invalid_argument, "initial parameters must be finite");
        }
        require(n_free() < x.size(), ErrorCode::invalid_argument, "need more points than free parameters");
    }
};

struct FitOptions {
    int max_iterations = 200;
    double gtol = 1e-10;
    double xtol = 1e-12;
    double ftol = 1e-14;
    double lambda0 = 1e-3;
};

struct FitResult {
    std::string model;
    std::vector<std::string> param_names;
    std::vector<double> params;
    std::vector<double> std_errors;
    std::vector<std::vector<double>> covariance;
    double chi2 = 0.0;
    double chi2_reduced = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string termination;
    // Max |d chi2 / d p| over free parameters at the solution.
    double gradient_max = 0.0;
    // chi2 after the start and after every accepted step.
    std::vector<double> chi2_trace;

    double param(std::string_view name) const {
        for (std::size_t i = 0; i < param_names.size(); ++i) {
            if (param_names[i] == name) {
                return params[i];
            }
        }
        throw Error(ErrorCode::invalid_argument, "no parameter named " + std::string(name));
    }
    double error(std::string_view name) const {
        for (std::size_t i = 0; i < param_names.size(); ++i) {
            if (param_names[i] == name) {
                return std_errors[i];
            }
        }
        throw Error(ErrorCode::invalid_argument, "no parameter named " + std::string(name));
    }
};

namespace detail {

class LeastSquares {
  public:
    explicit LeastSquares(const FitProblem &problem) : pr_(problem) {
        for (std::size_t j = 0; j < pr_.p0.size(); ++j) {
            if (pr_.fixed.empty() || !pr_.fixed[j]) {
                free_.push_back(j);
            }
        }
    }

    const std::vector<std::size_t> &free() const {
        return free_;
    }

    Eigen::VectorXd residuals(const std::vector<double> &p) const {
        std::vector<double> f(pr_.x.size());
        pr_.model.evaluate(pr_.x, p, f);
        Eigen::VectorXd r(static_cast<Eigen::Index>(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i) {
            double d = pr_.y[i] - f[i];
            if (pr_.periodic) {
                d = std::remainder(d, 2.0 * std::numbers::pi);
            }
            r[static_cast<Eigen::Index>(i)] = d / pr_.sigma[i];
        }
        return r;
    }

    // Central differences of the weighted residuals, h = max(1e-7, 1e-7 |p|).
    Eigen::MatrixXd jacobian(const std::vector<double> &p) const {
        const auto n = static_cast<Eigen::Index>(pr_.x.size());
        Eigen::MatrixXd jac(n, static_cast<Eigen::Index>(free_.size()));
        std::vector<double> fp(pr_.x.size());
        std::vector<double> fm(pr_.x.size());
        for (std::size_t c = 0; c < free_.size(); ++c) {
            const std::size_t j = free_[c];
            const double h = std::max(1e-7, 1e-7 * std::abs(p[j]));
            auto pp = p;
            auto pm = p;
            pp[j] += h;
            pm[j] -= h;
            pr_.model.evaluate(pr_.x, pp, fp);
            pr_.model.evaluate(pr_.x, pm, fm);
            for (Eigen::Index i = 0; i < n; ++i) {
                double df = fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)];
                if (pr_.periodic) {
                    df = std::remainder(df, 2.0 * std::numbers::pi);
                }
                jac(i, static_cast<Eigen::Index>(c)) = -df / (2.0 * h) / pr_.sigma[static_cast<std::size_t>(i)];
            }
        }
        return jac;
    }

    // Throws degenerate_fit naming the parameters spanning the null direction.
    void check_identifiable(const Eigen::MatrixXd &normal) const {
        const Eigen::Index m = normal.rows();
        Eigen::VectorXd d(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            d[j] = normal(j, j);
            if (!(d[j] > 0.0) || !std::isfinite(d[j])) {
                throw Error(ErrorCode::degenerate_fit,
                            "parameter '" + name(static_cast<std::size_t>(j)) + "' does not affect the model");
            }
        }
        const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd corr = s.asDiagonal() * normal * s.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
        if (eig.eigenvalues()[0] < 1e-13 * std::max(1.0, eig.eigenvalues()[m - 1])) {
            const Eigen::VectorXd v = eig.eigenvectors().col(0);
            std::string names;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (std::abs(v[j]) > 0.3) {
                    names += (names.empty() ? "" : ", ") + name(static_cast<std::size_t>(j));
                }
            }
            throw Error(ErrorCode::degenerate_fit, "singular normal matrix; parameters not separately identifiable: " +
                                                       names);
        }
    }

  private:
    std::string name(std::size_t free_index) const {
        return pr_.model.param_names[free_[free_index]];
    }

    const FitProblem &pr_;
    std::vector<std::size_t> free_;
};

}  // namespace detail

// Classic multiplicative damping: lambda /= 10 on an accepted step, *= 10 on a
// rejected one. Exceeding max_iterations returns converged = false.
inline FitResult lm_fit(const FitProblem &problem, const FitOptions &opts = {}) {
    problem.validate();
    detail::LeastSquares ls(problem);
    const auto &free = ls.free();
    const auto m = static_cast<Eigen::Index>(free.size());
    const auto n_points = problem.x.size();

    std::vector<double> p = problem.p0;
    Eigen::VectorXd r = ls.residuals(p);
    double chi2 = r.squaredNorm();
    double lambda = opts.lambda0;

    FitResult out;
    out.model = problem.model.name;
    out.param_names = problem.model.param_names;
    out.chi2_trace.push_back(chi2);

    Eigen::MatrixXd jac = ls.jacobian(p);
    Eigen::MatrixXd normal = jac.transpose() * jac;
    Eigen::VectorXd grad = jac.transpose() * r;
    ls.check_identifiable(normal);

    int iter = 0;
    while (true) {
        if (2.0 * grad.cwiseAbs().maxCoeff() < opts.gtol) {
            out.converged = true;
            out.termination = "gradient";
            break;
        }
        if (iter >= opts.max_iterations) {
            out.termination = "max_iterations";
            break;
        }
        ++iter;
        bool accepted = false;
        bool small_step = false;
        bool small_decrease = false;
        while (!accepted) {
            Eigen::MatrixXd damped = normal;
            for (Eigen::Index j = 0; j < m; ++j) {
                damped(j, j) += lambda * normal(j, j);
            }
            const Eigen::VectorXd step = damped.ldlt().solve(-grad);
            auto trial = p;
            small_step = true;
            for (Eigen::Index c = 0; c < m; ++c) {
                const std::size_t j = free[static_cast<std::size_t>(c)];
                trial[j] += step[c];
                if (std::abs(step[c]) > opts.xtol * (std::abs(p[j]) + opts.xtol)) {
                    small_step = false;
                }
            }
            const Eigen::VectorXd r_trial = ls.residuals(trial);
            const double chi2_trial = r_trial.squaredNorm();
            if (std::isfinite(chi2_trial) && chi2_trial < chi2) {
                small_decrease = chi2 - chi2_trial <= opts.ftol * chi2;
                p = std::move(trial);
                r = r_trial;
                chi2 = chi2_trial;
                out.chi2_trace.push_back(chi2);
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
            } else {
                lambda *= 10.0;
                if (small_step || lambda > 1e16) {
                    break;
                }
            }
        }
        if (!accepted) {
            // No downhill step exists at any damping: a numerical minimum.
            out.converged = true;
            out.termination = "stalled";
            break;
        }
        jac = ls.jacobian(p);
        normal = jac.transpose() * jac;
        grad = jac.transpose() * r;
        if (small_step || small_decrease) {
            out.converged = true;
            out.termination = small_step ? "xtol" : "ftol";
            break;
        }
    }

    ls.check_identifiable(normal);
    const auto dof = static_cast<double>(n_points - free.size());
    out.params = p;
    out.iterations = iter;
    out.chi2 = chi2;
    out.chi2_reduced = chi2 / dof;
    out.gradient_max = 2.0 * grad.cwiseAbs().maxCoeff();

    const Eigen::MatrixXd cov_free =
        normal.ldlt().solve(Eigen::MatrixXd::Identity(m, m)) * out.chi2_reduced;
    const std::size_t np = p.size();
    out.covariance.assign(np, std::vector<double>(np, 0.0));
    out.std_errors.assign(np, 0.0);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
            out.covariance[free[static_cast<std::size_t>(a)]][free[static_cast<std::size_t>(b)]] =
                0.5 * (cov_free(a, b) + cov_free(b, a));
        }
    }
    for (std::size_t j = 0; j < np; ++j) {
        out.std_errors[j] = std::sqrt(std::max(0.0, out.covariance[j][j]));
    }
    return out;
}

// A (w/2)^2 / ((x - x0)^2 + (w/2)^2) + B; params {A, x0, w, B}.
inline double model_lorentzian(double x, std::span<const double> p) {
    const double a = p[0];
    const double x0 = p[1];
    const double w = p[2];
    const double b = p[3];
    require(w > 0.0, ErrorCode::invalid_argument, "Lorentzian width must be > 0");
    const double hw2 = w * w / 4.0;
    return a * hw2 / ((x - x0) * (x - x0) + hw2) + b;
}

// A exp(-k t) + B; params {A, k, B}.
inline double model_exp_decay(double t, std::span<const double> p) {
    return p[0] * std::exp(-p[1] * t) + p[2];
}

inline Model pointwise_model(std::string name, std::vector<std::string> params,
                             std::function<double(double, std::span<const double>)> f) {
    return Model{std::move(name), std::move(params),
                 [f = std::move(f)](std::span<const double> x, std::span<const double> p, std::span<double> out) {
                     for (std::size_t i = 0; i < x.size(); ++i) {
                         out[i] = f(x[i], p);
                     }
                 }};
}

inline Model lorentzian_model() {
    // Width enters squared, so a trial step through w <= 0 is folded back.
    return pointwise_model("lorentzian", {"A", "x0", "w", "B"}, [](double x, std::span<const double> p) {
        const double q[4] = {p[0], p[1], std::abs(p[2]), p[3]};
        return model_lorentzian(x, q);
    });
}

inline Model exp_decay_model() {
    return pointwise_model("exp_decay", {"A", "k", "B"}, model_exp_decay);
}

inline Model line_model() {
    return pointwise_model("line", {"a", "b"}, [](double x, std::span<const double> p) { return p[0] + p[1] * x; });
}

// Starting values for a Lorentzian peak: location from the argmax, amplitude
// from the peak height above the median baseline, width from the half-maximum
// crossings.
inline std::vector<double> lorentzian_guess(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 3, ErrorCode::invalid_argument, "need >= 3 points for a guess");
    std::vector<double> sorted(y.begin(), y.end());
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double base = sorted[sorted.size() / 2];
    std::size_t peak = 0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (std::abs(y[i] - base) > std::abs(y[peak] - base)) {
            peak = i;
        }
    }
    const double amp = y[peak] - base;
    std::size_t lo = peak;
    while (lo > 0 && std::abs(y[lo] - base) > std::abs(amp) / 2.0) {
        --lo;
    }
    std::size_t hi = peak;
    while (hi + 1 < y.size() && std::abs(y[hi] - base) > std::abs(amp) / 2.0) {
        ++hi;
    }
    double width = x[hi] - x[lo];
    if (!(width > 0.0)) {
        width = (x.back() - x.front()) / static_cast<double>(x.size());
    }
    return {amp, x[peak], width, base};
}

}  // namespace readout
