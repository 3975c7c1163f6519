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

#ifndef ISAC_SIC_RECEIVER_HPP
#define ISAC_SIC_RECEIVER_HPP

#include "isac/core_model.hpp"
#include "isac/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace isac {

/// Interference-plus-noise statistics seen by the uplink detector.
/// r_c and q depend only on (g, gamma, sigma2); w additionally on h_c.
struct WhiteningContext {
    CMat r_c; ///< gamma g g^H + sigma2 I
    CMat q;   ///< r_c^{-1/2}
    CVec w;   ///< MRC combiner q h_c
};

/// Detection and estimation outputs of either receiver chain.
struct ReceiverOutput {
    std::size_t detected = 0;
    Complex alpha_hat;
    Complex combined;  ///< w^H q y
    CVec residual;     ///< y - sqrt(beta) h_c s_hat (SIC only)
};

/// R_c = gamma g g^H + sigma2 I, exactly Hermitian. The probing symbol is unit
/// modulus, so the echo covariance does not depend on x.
inline CMat interference_covariance(const CVec& g, double gamma, double sigma2)
{
    const auto n = g.size();
    CMat r(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        r(j, j) = gamma * std::norm(g[j]) + sigma2;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            r(i, j) = gamma * (g[i] * std::conj(g[j]));
            r(j, i) = std::conj(r(i, j));
        }
    }
    return r;
}

inline CMat interference_covariance(const Observation& obs)
{
    return interference_covariance(obs.g, obs.gamma, obs.sigma2);
}

/// Unique Hermitian PD inverse square root via eigendecomposition, evaluated
/// in extended precision and rounded once. Throws numerical_error when the
/// (symmetrized) input is not positive definite.
inline CMat whitening_matrix(const CMat& r_c)
{
    if (r_c.rows() != r_c.cols() || r_c.rows() == 0)
        throw config_error("whitening_matrix: square nonempty matrix required");
    const CMatX rx = r_c.cast<ComplexX>();
    const CMatX sym = (rx + rx.adjoint()) * static_cast<long double>(0.5);
    Eigen::SelfAdjointEigenSolver<CMatX> es(sym);
    if (es.info() != Eigen::Success)
        throw numerical_error("whitening_matrix: eigendecomposition failed");
    const auto& ev = es.eigenvalues();
    const long double lmax = ev.maxCoeff();
    const long double lmin = ev.minCoeff();
    if (!(lmax > 0.0L) || !(lmin > 1e-14L * lmax))
        throw numerical_error("whitening_matrix: covariance is not positive definite (min eigenvalue " +
                              std::to_string(static_cast<double>(lmin)) + ")");
    const Eigen::Matrix<long double, Eigen::Dynamic, 1> inv_sqrt = ev.array().rsqrt();
    const CMatX q = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
    return q.cast<Complex>();
}

/// ||q r q^H - I||_F evaluated in extended precision.
inline double whitening_residual(const CMat& q, const CMat& r_c)
{
    const CMatX qx = q.cast<ComplexX>();
    const CMatX prod = qx * r_c.cast<ComplexX>() * qx.adjoint();
    return static_cast<double>((prod - CMatX::Identity(q.rows(), q.cols())).norm());
}

/// Reuses (r_c, q) from `base` and recomputes the combiner for a new channel.
inline WhiteningContext rebind_channel(const WhiteningContext& base, const CVec& h_c)
{
    WhiteningContext ctx{base.r_c, base.q, base.q * h_c};
    return ctx;
}

inline WhiteningContext make_whitening_context(const Observation& obs)
{
    WhiteningContext ctx;
    ctx.r_c = interference_covariance(obs);
    ctx.q = whitening_matrix(ctx.r_c);
    ctx.w = ctx.q * obs.h_c;
    return ctx;
}

/// Combiner output w^H q y.
inline Complex mrc_combine(const CVec& y, const WhiteningContext& ctx)
{
    return ctx.w.dot(ctx.q * y);
}

inline Complex mrc_combine(const Observation& obs, const WhiteningContext& ctx)
{
    return mrc_combine(obs.y, ctx);
}

/// Exhaustive search for argmin_i |combined - gain * s_i|^2, lowest index on ties.
inline std::size_t ml_detect(Complex combined, Complex gain, const Constellation& alphabet)
{
    if (alphabet.size() == 0)
        throw config_error("ml_detect: empty constellation");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        const double d = std::norm(combined - gain * alphabet[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/// Post-combining gain is sqrt(beta) w^H q h_c = sqrt(beta) ||w||^2.
inline std::size_t ml_detect(Complex combined, const WhiteningContext& ctx, double beta, const Constellation& alphabet)
{
    return ml_detect(combined, Complex{std::sqrt(beta) * ctx.w.squaredNorm(), 0.0}, alphabet);
}

/// y - sqrt(beta) h_c s_hat
inline CVec sic_subtract(const Observation& obs, std::size_t detected)
{
    if (detected >= obs.alphabet().size())
        throw config_error("sic_subtract: detected index out of range");
    return obs.y - (std::sqrt(obs.beta) * obs.alphabet()[detected]) * obs.h_c;
}

/// Linear MMSE estimate of alpha from a residual, k = sqrt(gamma) g x.
/// Scalar (Sherman-Morrison) form: k^H r / (||k||^2 + sigma2).
inline Complex linear_mmse_alpha(const CVec& residual, const Observation& obs)
{
    if (residual.size() != obs.g.size())
        throw config_error("linear_mmse_alpha: residual length mismatch");
    const CVec k = (std::sqrt(obs.gamma) * obs.x) * obs.g;
    return k.dot(residual) / (k.squaredNorm() + obs.sigma2);
}

/// Same estimator through a dense Hermitian solve, k^H (k k^H + sigma2 I)^{-1} r,
/// carried out in extended precision as a reference for the scalar form.
inline Complex linear_mmse_alpha_dense(const CVec& residual, const Observation& obs)
{
    if (residual.size() != obs.g.size())
        throw config_error("linear_mmse_alpha_dense: residual length mismatch");
    const CVecX k = ((std::sqrt(obs.gamma) * obs.x) * obs.g).cast<ComplexX>();
    CMatX c = k * k.adjoint();
    c.diagonal().array() += static_cast<long double>(obs.sigma2);
    const CVecX sol = c.ldlt().solve(residual.cast<ComplexX>());
    const ComplexX a = k.dot(sol);
    return {static_cast<double>(a.real()), static_cast<double>(a.imag())};
}

/// Whiten, combine, detect, cancel, estimate.
inline ReceiverOutput run_sic_chain(const Observation& obs, const WhiteningContext& ctx)
{
    ReceiverOutput out;
    out.combined = mrc_combine(obs, ctx);
    out.detected = ml_detect(out.combined, ctx, obs.beta, obs.alphabet());
    out.residual = sic_subtract(obs, out.detected);
    out.alpha_hat = linear_mmse_alpha(out.residual, obs);
    return out;
}

inline ReceiverOutput run_sic_chain(const Observation& obs)
{
    obs.validate();
    return run_sic_chain(obs, make_whitening_context(obs));
}

} // namespace isac

#endif
