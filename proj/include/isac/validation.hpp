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

#ifndef ISAC_VALIDATION_HPP
#define ISAC_VALIDATION_HPP

#include "isac/core_model.hpp"
#include "isac/experiments.hpp"
#include "isac/metrics.hpp"
#include "isac/mmse_receiver.hpp"
#include "isac/rng.hpp"
#include "isac/sic_receiver.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace isac {

/// Draws a random observation with the given powers. n_tx in {1, 2, 4},
/// theta uniform in (-1.4, 1.4) rad.
inline Observation random_observation(CounterRng& rng, int n_rx, double beta, double gamma, double sigma2,
                                      ConstellationPtr alphabet = make_qpsk())
{
    static constexpr std::array<int, 3> kTx{1, 2, 4};
    SystemConfig cfg;
    cfg.n_tx = kTx[rng.index_pow2(4) % 3];
    cfg.n_rx = n_rx;
    cfg.beta = beta;
    cfg.gamma = gamma;
    cfg.sigma2 = sigma2;
    cfg.theta = (2.0 * rng.uniform_open0() - 1.0) * 1.4;
    cfg.constellation = std::move(alphabet);
    return generate_observation(cfg, sample_scene(cfg, rng));
}

struct CheckResult {
    std::string name;
    bool passed = false;
    double metric = 0.0;    ///< worst observed value
    double threshold = 0.0; ///< pass iff metric < threshold
    std::string detail;
};

using AlphaEstimator = std::function<Complex(const Observation&)>;

struct ValidationOptions {
    std::uint64_t seed = 20261016;
    int whitening_configs = 1000;
    int oracle_instances = 54;
    int reduction_instances = 100;
    std::uint64_t ber_trials = 20000;
    AlphaEstimator estimator = [](const Observation& o) { return posterior_mmse_alpha(o); };
};

/// ||Q R_c Q^H - I||_F over random links: n_tx in {1, 2, 4}, n_rx in 1..8,
/// gamma in [1e-3, 1e3], sigma2 in [1e-3, 1], theta in (-1.5, 1.5).
inline CheckResult check_whitening_identity(const ValidationOptions& opt)
{
    CounterRng rng(derive_key(opt.seed, {1}));
    double worst = 0.0;
    for (int k = 0; k < opt.whitening_configs; ++k) {
        SystemConfig cfg;
        cfg.n_tx = 1 << rng.index_pow2(4) % 3;
        cfg.n_rx = 1 + static_cast<int>(rng.index_pow2(8));
        cfg.gamma = std::pow(10.0, -3.0 + 6.0 * rng.uniform_open0());
        cfg.sigma2 = std::pow(10.0, -3.0 + 3.0 * rng.uniform_open0());
        cfg.theta = (2.0 * rng.uniform_open0() - 1.0) * 1.5;
        const CMat r = interference_covariance(composite_sensing_channel(cfg), cfg.gamma, cfg.sigma2);
        const CMat q = whitening_matrix(r);
        const double err = whitening_residual(q, r);
        worst = std::max(worst, err);
    }
    return {"whitening_identity", worst < 1e-10, worst, 1e-10,
            std::to_string(opt.whitening_configs) + " configs"};
}

/// Closed-form posterior mean against 2-D quadrature of the joint density.
inline CheckResult check_posterior_oracle(const ValidationOptions& opt)
{
    static constexpr std::array<double, 3> kPowers{1e-2, 1.0, 1e2};
    static constexpr std::array<double, 3> kNoise{1e-3, 1e-1, 1.0};
    CounterRng rng(derive_key(opt.seed, {2}));
    GridSpec grid;
    grid.centering = GridSpec::Centering::per_symbol;
    grid.radius = 8.0;
    double worst = 0.0;
    for (int k = 0; k < opt.oracle_instances; ++k) {
        const int n_rx = 1 + k % 2;
        const double beta = kPowers[static_cast<std::size_t>(k / 2) % 3];
        const double gamma = kPowers[static_cast<std::size_t>(k / 6) % 3];
        const double sigma2 = kNoise[static_cast<std::size_t>(k / 18) % 3];
        const Observation obs = random_observation(rng, n_rx, beta, gamma, sigma2);
        worst = std::max(worst, std::abs(opt.estimator(obs) - brute_force_posterior_mean(obs, grid)));
    }
    return {"posterior_vs_quadrature", worst < 1e-4, worst, 1e-4,
            std::to_string(opt.oracle_instances) + " instances"};
}

/// With a one-point alphabet the posterior mean must equal the linear MMSE
/// estimate of the single residual.
inline CheckResult check_single_symbol_reduction(const ValidationOptions& opt)
{
    CounterRng rng(derive_key(opt.seed, {3}));
    double worst = 0.0;
    for (int k = 0; k < opt.reduction_instances; ++k) {
        const double phase = 2.0 * kPi * rng.uniform_open0();
        auto single = std::make_shared<const Constellation>(std::vector<Complex>{std::polar(1.0, phase)},
                                                            std::vector<std::uint32_t>{0});
        const int n_rx = 1 + static_cast<int>(rng.index_pow2(4));
        const double beta = std::pow(10.0, -2.0 + 4.0 * rng.uniform_open0());
        const double gamma = std::pow(10.0, -2.0 + 4.0 * rng.uniform_open0());
        const double sigma2 = std::pow(10.0, -3.0 + 3.0 * rng.uniform_open0());
        const Observation obs = random_observation(rng, n_rx, beta, gamma, sigma2, single);
        const Complex lin = linear_mmse_alpha(sic_subtract(obs, 0), obs);
        worst = std::max(worst, std::abs(opt.estimator(obs) - lin) / std::max(1.0, std::abs(lin)));
    }
    return {"single_symbol_reduction", worst < 1e-12, worst, 1e-12,
            std::to_string(opt.reduction_instances) + " instances"};
}

/// Simulated BER against the channel-averaged Q(sqrt(beta w^H w)) at
/// beta = gamma = 1, sigma2 = 1e-3, n_rx = 2. Metric is |sim - theory| / stderr.
inline CheckResult check_ber_overlay(const ValidationOptions& opt)
{
    SystemConfig cfg;
    cfg.n_rx = 2;
    cfg.seed = derive_key(opt.seed, {4});
    const TrialKernel kernel(cfg);
    MetricsAccumulator acc;
    for (std::uint64_t t = 0; t < opt.ber_trials; ++t)
        acc.add(kernel.run(t), *cfg.constellation);
    const auto m = acc.finish();
    const double z = std::abs(m.ber_empirical - m.ber_theoretical) / m.ber_stderr;
    char buf[160];
    std::snprintf(buf, sizeof buf, "ber_sim=%.6g ber_theory=%.6g stderr=%.3g", m.ber_empirical, m.ber_theoretical,
                  m.ber_stderr);
    return {"ber_overlay", z < 3.0, z, 3.0, buf};
}

inline std::vector<CheckResult> run_validation(const ValidationOptions& opt = {})
{
    return {check_whitening_identity(opt), check_posterior_oracle(opt), check_single_symbol_reduction(opt),
            check_ber_overlay(opt)};
}

} // namespace isac

#endif
