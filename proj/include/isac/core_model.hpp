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

#ifndef ISAC_CORE_MODEL_HPP
#define ISAC_CORE_MODEL_HPP

#include "isac/constellation.hpp"
#include "isac/rng.hpp"
#include "isac/types.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace isac {

/// Link parameters. Powers are linear scale; beta scales the uplink symbol,
/// gamma the target echo.
struct SystemConfig {
    int n_tx = 4;
    int n_rx = 1;
    double beta = 1.0;
    double gamma = 1.0;
    double sigma2 = 1e-3;
    double theta = 0.0;
    ConstellationPtr constellation = make_qpsk();
    std::uint64_t seed = 0;

    void validate() const
    {
        if (n_tx < 1)
            throw config_error("n_tx must be >= 1, got " + std::to_string(n_tx));
        if (n_rx < 1)
            throw config_error("n_rx must be >= 1, got " + std::to_string(n_rx));
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw config_error("sigma2 must be a positive finite number");
        if (!(beta >= 0.0) || !std::isfinite(beta))
            throw config_error("beta must be a nonnegative finite number");
        if (!(gamma >= 0.0) || !std::isfinite(gamma))
            throw config_error("gamma must be a nonnegative finite number");
        if (!(std::abs(theta) < kPi / 2))
            throw config_error("theta must lie in (-pi/2, pi/2)");
        if (!constellation)
            throw config_error("constellation is not set");
    }
};

/// Ground truth of one trial.
struct Scene {
    Complex alpha;
    CVec h_c;
    std::size_t symbol_index = 0;
    std::size_t radar_index = 0;
    Complex x;
    CVec noise;
};

/// What the receiver sees: y plus everything it is assumed to know
/// (uplink channel, sensing channel, probing symbol, powers, alphabet).
struct Observation {
    CVec y;
    CVec g;
    CVec h_c;
    Complex x{1.0, 0.0};
    double beta = 1.0;
    double gamma = 1.0;
    double sigma2 = 1e-3;
    ConstellationPtr constellation;

    Eigen::Index n_rx() const noexcept { return y.size(); }
    const Constellation& alphabet() const { return *constellation; }

    void validate() const
    {
        if (g.size() != y.size() || h_c.size() != y.size())
            throw config_error("observation: vector lengths differ");
        if (!constellation)
            throw config_error("observation: constellation is not set");
        if (!(sigma2 > 0.0))
            throw config_error("observation: sigma2 must be positive");
    }
};

/// Half-wavelength ULA response: element k is exp(j*pi*k*sin(theta)).
inline CVec steering_vector(int n, double theta)
{
    CVec a(n);
    const double phase = kPi * std::sin(theta);
    for (int k = 0; k < n; ++k)
        a[k] = std::polar(1.0, phase * k);
    return a;
}

/// g = b(theta) * a(theta)^H * f with the transmit beam steered at the target
/// (f = a(theta)), so g = n_tx * b(theta).
inline CVec composite_sensing_channel(const SystemConfig& cfg)
{
    const CVec a = steering_vector(cfg.n_tx, cfg.theta);
    const CVec b = steering_vector(cfg.n_rx, cfg.theta);
    const Complex beam_gain = a.dot(a); // a^H f
    return b * beam_gain;
}

/// Draws one scene. Consumption order: alpha, h_c, symbol, radar symbol, noise.
inline Scene sample_scene(const SystemConfig& cfg, CounterRng& rng)
{
    const auto& alphabet = *cfg.constellation;
    const auto a_size = static_cast<std::uint32_t>(alphabet.size());
    Scene sc;
    sc.alpha = rng.complex_normal(1.0);
    sc.h_c.resize(cfg.n_rx);
    for (int k = 0; k < cfg.n_rx; ++k)
        sc.h_c[k] = rng.complex_normal(1.0);
    sc.symbol_index = rng.index_pow2(a_size);
    sc.radar_index = rng.index_pow2(a_size);
    sc.x = alphabet[sc.radar_index];
    sc.noise.resize(cfg.n_rx);
    for (int k = 0; k < cfg.n_rx; ++k)
        sc.noise[k] = rng.complex_normal(cfg.sigma2);
    return sc;
}

/// y = sqrt(beta) h_c s + sqrt(gamma) alpha g x + z
inline CVec mixed_reception(const CVec& h_c, Complex s, Complex alpha, const CVec& g, Complex x, const CVec& z,
                            double beta, double gamma)
{
    if (h_c.size() != g.size() || z.size() != g.size())
        throw config_error("mixed_reception: vector lengths differ");
    return std::sqrt(beta) * s * h_c + (std::sqrt(gamma) * alpha * x) * g + z;
}

/// Builds the observation for a scene using a precomputed sensing channel.
inline Observation generate_observation(const SystemConfig& cfg, const Scene& scene, const CVec& g)
{
    if (scene.h_c.size() != cfg.n_rx || scene.noise.size() != cfg.n_rx || g.size() != cfg.n_rx)
        throw config_error("generate_observation: scene dimensions do not match n_rx = " +
                           std::to_string(cfg.n_rx));
    if (scene.symbol_index >= cfg.constellation->size())
        throw config_error("generate_observation: symbol index out of range");
    Observation obs;
    obs.y = mixed_reception(scene.h_c, (*cfg.constellation)[scene.symbol_index], scene.alpha, g, scene.x,
                            scene.noise, cfg.beta, cfg.gamma);
    obs.g = g;
    obs.h_c = scene.h_c;
    obs.x = scene.x;
    obs.beta = cfg.beta;
    obs.gamma = cfg.gamma;
    obs.sigma2 = cfg.sigma2;
    obs.constellation = cfg.constellation;
    return obs;
}

inline Observation generate_observation(const SystemConfig& cfg, const Scene& scene)
{
    return generate_observation(cfg, scene, composite_sensing_channel(cfg));
}

} // namespace isac

#endif
