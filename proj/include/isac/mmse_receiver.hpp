// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef ISAC_MMSE_RECEIVER_HPP
#define ISAC_MMSE_RECEIVER_HPP

#include "isac/core_model.hpp"
#include "isac/sic_receiver.hpp"
#include "isac/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace isac {

/// Per-call scratch for the constellation-marginalized posterior mean.
struct PosteriorWorkspace {
    CMat r_c_inv;                       ///< (gamma g g^H + sigma2 I)^{-1}
    std::vector<double> log_weights;    ///< -(y - sqrt(beta) h_c s_i)^H r_c_inv (...), max-subtracted
    Eigen::RowVectorXcd lmmse_gain_row; ///< sqrt(gamma) (g x)^H r_c_inv
};

/// Sherman-Morrison inverse of gamma g g^H + sigma2 I.
inline CMat interference_covariance_inverse(const CVec& g, double gamma, double sigma2)
{
    const auto n = g.size();
    CMat inv = CMat::Identity(n, n);
    const double denom = sigma2 + gamma * g.squaredNorm();
    inv -= (gamma / denom) * (g * g.adjoint());
    return inv / sigma2;
}

/// r^H (gamma g g^H + sigma2 I)^{-1} r split along u = g / ||g||:
/// ||r - u u^H r||^2 / sigma2 + |u^H r|^2 / (sigma2 + gamma ||g||^2).
/// Avoids the cancellation of the explicit rank-1 inverse.
inline double interference_form(const CVec& r, const CVec& g, double gamma, double sigma2)
{
    const double gg = g.squaredNorm();
    if (gg == 0.0 || gamma == 0.0)
        return r.squaredNorm() / sigma2;
    const CVec u = g / std::sqrt(gg);
    const Complex along = u.dot(r);
    return (r - along * u).squaredNorm() / sigma2 + std::norm(along) / (sigma2 + gamma * gg);
}

/// log p(y | s_i) up to a constant shared by all i (circular complex Gaussian,
/// determinant and pi^{-N} dropped).
inline double conditional_log_likelihood(const Observation& obs, std::size_t i)
{
    if (i >= obs.alphabet().size())
        throw config_error("conditional_log_likelihood: symbol index out of range");
    const CVec e = obs.y - (std::sqrt(obs.beta) * obs.alphabet()[i]) * obs.h_c;
    return -interference_form(e, obs.g, obs.gamma, obs.sigma2);
}

/// sqrt(gamma) (g x)^H (gamma g g^H + sigma2 I)^{-1}, in Sherman-Morrison closed form.
inline Eigen::RowVectorXcd lmmse_gain_row(const Observation& obs)
{
    return (std::sqrt(obs.gamma) * std::conj(obs.x) / (obs.sigma2 + obs.gamma * obs.g.squaredNorm())) *
           obs.g.adjoint();
}

/// Fills r_c_inv, the gain row and the normalized log weights for obs.
inline PosteriorWorkspace make_posterior_workspace(const Observation& obs)
{
    PosteriorWorkspace ws;
    ws.r_c_inv = interference_covariance_inverse(obs.g, obs.gamma, obs.sigma2);
    ws.lmmse_gain_row = lmmse_gain_row(obs);
    const auto a_size = obs.alphabet().size();
    ws.log_weights.resize(a_size);
    for (std::size_t i = 0; i < a_size; ++i)
        ws.log_weights[i] = conditional_log_likelihood(obs, i);
    const double m = *std::max_element(ws.log_weights.begin(), ws.log_weights.end());
    for (auto& lw : ws.log_weights)
        lw -= m;
    return ws;
}

/// Posterior symbol probabilities p(s_i | y) (softmax of the log weights).
inline std::vector<double> symbol_posterior(const PosteriorWorkspace& ws)
{
    std::vector<double> w(ws.log_weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(ws.log_weights[i]);
        total += w[i];
    }
    for (auto& v : w)
        v /= total;
    return w;
}

/// Posterior mean E[alpha | y]: the likelihood-weighted average of the
/// per-symbol linear MMSE estimates. Uses no hard symbol decision.
inline Complex posterior_mmse_alpha(const Observation& obs, const PosteriorWorkspace& ws)
{
    const auto w = symbol_posterior(ws);
    CVec mean_residual = CVec::Zero(obs.n_rx());
    for (std::size_t i = 0; i < w.size(); ++i)
        mean_residual += w[i] * (obs.y - (std::sqrt(obs.beta) * obs.alphabet()[i]) * obs.h_c);
    return (ws.lmmse_gain_row * mean_residual)(0);
}

inline Complex posterior_mmse_alpha(const Observation& obs)
{
    obs.validate();
    return posterior_mmse_alpha(obs, make_posterior_workspace(obs));
}

/// Cross-check path: same estimator with r_c inverted by a dense Hermitian solve.
inline Complex posterior_mmse_alpha_dense(const Observation& obs)
{
    obs.validate();
    const CMat r_c = interference_covariance(obs);
    const auto ldlt = r_c.ldlt();
    const auto a_size = obs.alphabet().size();
    std::vector<CVec> residuals(a_size);
    std::vector<double> lw(a_size);
    for (std::size_t i = 0; i < a_size; ++i) {
        residuals[i] = obs.y - (std::sqrt(obs.beta) * obs.alphabet()[i]) * obs.h_c;
        lw[i] = -residuals[i].dot(ldlt.solve(residuals[i])).real();
    }
    const double m = *std::max_element(lw.begin(), lw.end());
    double total = 0.0;
    CVec acc = CVec::Zero(obs.n_rx());
    for (std::size_t i = 0; i < a_size; ++i) {
        const double wi = std::exp(lw[i] - m);
        total += wi;
        acc += wi * residuals[i];
    }
    acc /= total;
    const CVec k = (std::sqrt(obs.gamma) * obs.x) * obs.g;
    return k.dot(ldlt.solve(acc));
}

/// Quadrature grid for the brute-force posterior mean.
struct GridSpec {
    enum class Centering {
        prior,      ///< one grid at 0, radius in prior standard deviations
        per_symbol, ///< one grid per symbol, centered on that symbol's posterior mode, radius in posterior std
    };
    Centering centering = Centering::prior;
    double radius = 5.0;
    int points = 201;        ///< per axis, odd
    double tolerance = 1e-4; ///< max accepted discretization estimate
};

struct BruteForceResult {
    Complex mean;
    double discretization_estimate = 0.0; ///< |full grid - every-other-point grid|
};

namespace detail {

// log p(y | alpha, s_i) + log p(alpha), constants dropped.
struct JointLogDensity {
    const Observation& obs;
    CVec residual;
    CVec echo_dir; // sqrt(gamma) g x

    double operator()(double re, double im) const
    {
        const Complex a{re, im};
        return -(residual - a * echo_dir).squaredNorm() / obs.sigma2 - std::norm(a);
    }
};

struct GridSums {
    double log_mass = -std::numeric_limits<double>::infinity();
    Complex mean;
    double log_mass_coarse = -std::numeric_limits<double>::infinity();
    Complex mean_coarse;
};

// Riemann sums of exp(f) and alpha*exp(f) on a square grid, with the
// every-other-point subgrid accumulated in the same pass.
inline GridSums integrate_on_grid(const JointLogDensity& f, Complex center, double half_width, int points)
{
    const double h = 2.0 * half_width / (points - 1);
    std::vector<double> vals(static_cast<std::size_t>(points) * points);
    double vmax = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < points; ++r)
        for (int c = 0; c < points; ++c) {
            const double v = f(center.real() - half_width + c * h, center.imag() - half_width + r * h);
            vals[static_cast<std::size_t>(r) * points + c] = v;
            vmax = std::max(vmax, v);
        }
    double s = 0.0, s_coarse = 0.0;
    Complex m{}, m_coarse{};
    for (int r = 0; r < points; ++r)
        for (int c = 0; c < points; ++c) {
            const double e = std::exp(vals[static_cast<std::size_t>(r) * points + c] - vmax);
            const Complex a{center.real() - half_width + c * h, center.imag() - half_width + r * h};
            s += e;
            m += a * e;
            if (r % 2 == 0 && c % 2 == 0) {
                s_coarse += e;
                m_coarse += a * e;
            }
        }
    GridSums out;
    out.log_mass = vmax + std::log(s) + 2.0 * std::log(h);
    out.mean = m / s;
    out.log_mass_coarse = vmax + std::log(s_coarse) + 2.0 * std::log(2.0 * h);
    out.mean_coarse = m_coarse / s_coarse;
    return out;
}

// Mode and isotropic spread of a 2-D log density that is quadratic in
// (re, im), from central finite differences followed by a Newton step.
inline std::pair<Complex, double> finite_difference_mode(const JointLogDensity& f)
{
    double u = 0.0, v = 0.0;
    double sd = 1.0;
    for (int iter = 0; iter < 3; ++iter) {
        const double h = sd;
        const double f0 = f(u, v);
        const double fu_p = f(u + h, v), fu_m = f(u - h, v);
        const double fv_p = f(u, v + h), fv_m = f(u, v - h);
        const double gu = (fu_p - fu_m) / (2 * h);
        const double gv = (fv_p - fv_m) / (2 * h);
        const double huu = (fu_p - 2 * f0 + fu_m) / (h * h);
        const double hvv = (fv_p - 2 * f0 + fv_m) / (h * h);
        const double huv = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4 * h * h);
        const double det = huu * hvv - huv * huv;
        if (!(huu < 0.0) || !(det > 0.0))
            throw numerical_error("brute_force_posterior_mean: log density is not concave at the probe point");
        u -= (hvv * gu - huv * gv) / det;
        v -= (-huv * gu + huu * gv) / det;
        // Largest marginal std of the Gaussian with precision -H.
        sd = std::sqrt(std::max(-hvv / det, -huu / det));
    }
    return {Complex{u, v}, sd};
}

} // namespace detail

/// Numerical E[alpha | y] by 2-D Riemann summation of
/// sum_i p(y | alpha, s_i) p(alpha), with per-symbol conditional densities
/// CN(sqrt(beta) h_c s_i + sqrt(gamma) alpha g x, sigma2 I) and alpha ~ CN(0, 1).
/// Independent of the closed-form estimator; used as its oracle.
inline BruteForceResult brute_force_posterior_mean_detailed(const Observation& obs, const GridSpec& grid = {})
{
    obs.validate();
    if (grid.points < 5 || grid.points % 2 == 0)
        throw config_error("brute_force_posterior_mean: points per axis must be odd and >= 5");
    if (!(grid.radius > 0.0))
        throw config_error("brute_force_posterior_mean: radius must be positive");

    const auto a_size = obs.alphabet().size();
    const CVec echo_dir = (std::sqrt(obs.gamma) * obs.x) * obs.g;
    std::vector<detail::GridSums> sums;
    sums.reserve(a_size);
    for (std::size_t i = 0; i < a_size; ++i) {
        detail::JointLogDensity f{obs, obs.y - (std::sqrt(obs.beta) * obs.alphabet()[i]) * obs.h_c, echo_dir};
        if (grid.centering == GridSpec::Centering::prior) {
            sums.push_back(detail::integrate_on_grid(f, Complex{}, grid.radius, grid.points));
        } else {
            const auto [mode, sd] = detail::finite_difference_mode(f);
            sums.push_back(detail::integrate_on_grid(f, mode, grid.radius * sd, grid.points));
        }
    }

    auto combine = [&](bool coarse) {
        double lmax = -std::numeric_limits<double>::infinity();
        for (const auto& s : sums)
            lmax = std::max(lmax, coarse ? s.log_mass_coarse : s.log_mass);
        double z = 0.0;
        Complex m{};
        for (const auto& s : sums) {
            const double wi = std::exp((coarse ? s.log_mass_coarse : s.log_mass) - lmax);
            z += wi;
            m += wi * (coarse ? s.mean_coarse : s.mean);
        }
        return m / z;
    };

    BruteForceResult res;
    res.mean = combine(false);
    res.discretization_estimate = std::abs(res.mean - combine(true));
    if (!std::isfinite(res.discretization_estimate) || res.discretization_estimate > grid.tolerance)
        throw numerical_error("brute_force_posterior_mean: grid too coarse (discretization estimate " +
                              std::to_string(res.discretization_estimate) + " > tolerance " +
                              std::to_string(grid.tolerance) + "); refine the grid or use per-symbol centering");
    return res;
}

inline Complex brute_force_posterior_mean(const Observation& obs, const GridSpec& grid = {})
{
    return brute_force_posterior_mean_detailed(obs, grid).mean;
}

/// ML symbol decision from the whitened MRC statistic, alpha from the posterior
/// mean. The two outputs are computed independently from the same y.
inline ReceiverOutput run_mmse_chain(const Observation& obs, const WhiteningContext& ctx)
{
    ReceiverOutput out;
    out.combined = mrc_combine(obs, ctx);
    out.detected = ml_detect(out.combined, ctx, obs.beta, obs.alphabet());
    out.alpha_hat = posterior_mmse_alpha(obs, make_posterior_workspace(obs));
    return out;
}

inline ReceiverOutput run_mmse_chain(const Observation& obs)
{
    obs.validate();
    return run_mmse_chain(obs, make_whitening_context(obs));
}

} // namespace isac

#endif
