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

#include <catch2/catch_amalgamated.hpp>

#include "isac/metrics.hpp"
#include "isac/sic_receiver.hpp"
#include "isac/validation.hpp"

#include <cmath>

using namespace isac;
using Catch::Approx;

namespace {

Observation make_obs(const CVec& y, const CVec& h, const CVec& g, double beta, double gamma, double sigma2,
                     Complex x = 1.0)
{
    Observation o;
    o.y = y;
    o.h_c = h;
    o.g = g;
    o.x = x;
    o.beta = beta;
    o.gamma = gamma;
    o.sigma2 = sigma2;
    o.constellation = make_qpsk();
    return o;
}

CMat random_pd(CounterRng& rng, int n)
{
    CMat a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            a(r, c) = rng.complex_normal();
    CMat pd = a * a.adjoint();
    pd.diagonal().array() += 0.1;
    return pd;
}

} // namespace

TEST_CASE("interference_covariance: examples")
{
    CVec g0 = CVec::Zero(2);
    CHECK((interference_covariance(g0, 1.0, 0.5) - 0.5 * CMat::Identity(2, 2)).norm() == 0.0);
    CVec g1 = CVec::Ones(2);
    CHECK((interference_covariance(g1, 0.0, 0.5) - 0.5 * CMat::Identity(2, 2)).norm() == 0.0);

    CVec s(1);
    s << 1;
    CHECK(interference_covariance(s, 1.0, 0.001)(0, 0) == Complex(1.001, 0));

    CVec e(2);
    e << 1, 0;
    CMat expect = CMat::Zero(2, 2);
    expect(0, 0) = 5;
    expect(1, 1) = 1;
    CHECK((interference_covariance(e, 4.0, 1.0) - expect).norm() == 0.0);
}

TEST_CASE("whitening_matrix: examples")
{
    CHECK((whitening_matrix(4.0 * CMat::Identity(3, 3)) - 0.5 * CMat::Identity(3, 3)).norm() < 1e-15);
    CMat d = CMat::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 0.25;
    CMat expect = CMat::Zero(2, 2);
    expect(0, 0) = 1;
    expect(1, 1) = 2;
    CHECK((whitening_matrix(d) - expect).norm() < 1e-14);
}

TEST_CASE("whitening_matrix: random PD matrices")
{
    CounterRng rng(3);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng.index_pow2(4));
        const CMat r = random_pd(rng, n);
        const CMat q = whitening_matrix(r);
        const CMat id = CMat::Identity(n, n);
        CHECK(whitening_residual(q, r) < 1e-10);
        // Independent route: Q^2 must be the LU inverse of R, and Q Hermitian.
        CHECK((q * q - r.inverse()).norm() < 1e-9 * r.inverse().norm());
        CHECK((q - q.adjoint()).norm() < 1e-12 * q.norm());
    }
}

TEST_CASE("whitening_matrix: non-PD input is rejected")
{
    CMat r = CMat::Identity(2, 2);
    r(1, 1) = 0.0;
    CHECK_THROWS_AS(whitening_matrix(r), numerical_error);
    r(1, 1) = -1.0;
    CHECK_THROWS_AS(whitening_matrix(r), numerical_error);
    CHECK_THROWS_AS(whitening_matrix(CMat::Identity(2, 3)), config_error);
}

TEST_CASE("whitening identity over 1000 random link configs")
{
    ValidationOptions opt;
    opt.seed = 42;
    const auto res = check_whitening_identity(opt);
    INFO(res.metric);
    CHECK(res.passed);
}

TEST_CASE("mrc_combine: examples")
{
    CVec h(2), y(2);
    h << 1, 1;
    y << Complex(1, 1), Complex(1, -1);
    WhiteningContext ctx{CMat::Identity(2, 2), CMat::Identity(2, 2), h};
    CHECK(mrc_combine(y, ctx) == Complex(2, 0));
    CHECK(mrc_combine(CVec::Zero(2), ctx) == Complex(0, 0));

    // Noiseless, gamma = 0, beta = 1: combined / ||w||^2 recovers s.
    CounterRng rng(8);
    CVec hc(3);
    for (int k = 0; k < 3; ++k)
        hc[k] = rng.complex_normal();
    const Complex s = Constellation::qpsk()[2];
    const Observation obs = make_obs(hc * s, hc, CVec::Ones(3), 1.0, 0.0, 0.3);
    const auto c = make_whitening_context(obs);
    CHECK(std::abs(mrc_combine(obs, c) / c.w.squaredNorm() - s) < 1e-12);
}

TEST_CASE("ml_detect: noiseless reception recovers every symbol")
{
    const auto q = Constellation::qpsk();
    CounterRng rng(9);
    CVec hc(2);
    hc << rng.complex_normal(), rng.complex_normal();
    for (std::size_t i = 0; i < q.size(); ++i) {
        const Observation obs = make_obs(hc * q[i], hc, CVec::Ones(2), 1.0, 0.0, 1e-3);
        const auto ctx = make_whitening_context(obs);
        CHECK(ml_detect(mrc_combine(obs, ctx), ctx, 1.0, q) == i);
    }
}

TEST_CASE("ml_detect: ties go to the lowest index, scaling is irrelevant")
{
    const auto q = Constellation::qpsk();
    CHECK(ml_detect(Complex(0, 0), Complex(3, 0), q) == 0);
    CounterRng rng(10);
    for (int t = 0; t < 1000; ++t) {
        const Complex y = rng.complex_normal();
        const Complex gain{0.1 + rng.uniform_open0(), 0};
        const double c = 0.01 + 100 * rng.uniform_open0();
        CHECK(ml_detect(y, gain, q) == ml_detect(c * y, c * gain, q));
    }
    const Constellation empty_guard = Constellation::qpsk();
    CHECK(ml_detect(Complex(-1, -1), Complex(1, 0), empty_guard) == 2);
}

TEST_CASE("sic_subtract: cancellation examples")
{
    const auto q = Constellation::qpsk();
    CVec hc(2), g(2);
    hc << Complex(0.3, 1.1), Complex(-0.8, 0.2);
    g << Complex(4, 0), Complex(0, 4);
    const Complex alpha{0.4, -0.9}, x = q[1];
    const double beta = 2.0, gamma = 0.5;
    const CVec echo = (std::sqrt(gamma) * alpha * x) * g;
    const CVec y = std::sqrt(beta) * q[3] * hc + echo;
    const Observation obs = make_obs(y, hc, g, beta, gamma, 1e-3, x);

    CHECK((sic_subtract(obs, 3) - echo).norm() < 1e-14);
    const CVec wrong = sic_subtract(obs, 0);
    CHECK((wrong - echo - std::sqrt(beta) * (q[3] - q[0]) * hc).norm() < 1e-14);

    Observation silent = obs;
    silent.beta = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        CHECK((sic_subtract(silent, i) - silent.y).norm() == 0.0);
    CHECK_THROWS_AS(sic_subtract(obs, 4), config_error);
}

TEST_CASE("linear_mmse_alpha: examples")
{
    CVec one(1), two(1);
    one << 1;
    two << 2;
    const Observation obs = make_obs(two, one, one, 1.0, 1.0, 1.0);
    CHECK(linear_mmse_alpha(two, obs) == Complex(1, 0));
    CHECK(linear_mmse_alpha(CVec::Zero(1), obs) == Complex(0, 0));
    Observation off = obs;
    off.gamma = 0.0;
    CHECK(linear_mmse_alpha(two, off) == Complex(0, 0));
}

TEST_CASE("linear_mmse_alpha: scalar and dense forms agree, magnitude bound holds")
{
    CounterRng rng(12);
    for (int t = 0; t < 500; ++t) {
        const int n = 1 + static_cast<int>(rng.index_pow2(8));
        const Observation obs = random_observation(rng, n, 1.0, std::pow(10.0, -2 + 4 * rng.uniform_open0()),
                                                   std::pow(10.0, -3 + 3 * rng.uniform_open0()));
        const CVec r = obs.y;
        const Complex a = linear_mmse_alpha(r, obs);
        const Complex b = linear_mmse_alpha_dense(r, obs);
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
        const CVec k = (std::sqrt(obs.gamma) * obs.x) * obs.g;
        CHECK(std::abs(a) <= k.norm() * r.norm() / (k.squaredNorm() + obs.sigma2) * (1 + 1e-12));
    }
}

TEST_CASE("run_sic_chain: degenerate cases")
{
    SECTION("no echo: exact symbol, alpha estimate 0")
    {
        CounterRng rng(13);
        for (int t = 0; t < 100; ++t) {
            SystemConfig cfg;
            cfg.n_rx = 2;
            cfg.gamma = 0;
            cfg.sigma2 = 1e-6;
            const Scene sc = sample_scene(cfg, rng);
            const auto out = run_sic_chain(generate_observation(cfg, sc));
            CHECK(out.detected == sc.symbol_index);
            CHECK(out.alpha_hat == Complex(0, 0));
        }
    }
    SECTION("no uplink: estimate equals linear MMSE on raw y")
    {
        CounterRng rng(14);
        const Observation obs = random_observation(rng, 3, 0.0, 1.0, 1e-2);
        CHECK(std::abs(run_sic_chain(obs).alpha_hat - linear_mmse_alpha(obs.y, obs)) < 1e-15);
    }
    SECTION("forced-correct detection with z = 0 cancels perfectly")
    {
        CounterRng rng(15);
        for (int t = 0; t < 100; ++t) {
            SystemConfig cfg;
            cfg.n_rx = 2;
            Scene sc = sample_scene(cfg, rng);
            sc.noise.setZero();
            const Observation obs = generate_observation(cfg, sc);
            const CVec echo = (std::sqrt(cfg.gamma) * sc.alpha * sc.x) * obs.g;
            CHECK((sic_subtract(obs, sc.symbol_index) - echo).norm() <= 1e-14 * (1 + echo.norm()));
        }
    }
}

TEST_CASE("ml_detect: AWGN-only BER matches Q(sqrt(snr)) within 3 stderr")
{
    // gamma = 0: interference is white, the detector sees a pure AWGN link.
    SystemConfig cfg;
    cfg.n_rx = 1;
    cfg.gamma = 0;
    cfg.sigma2 = 0.5;
    const auto& alphabet = *cfg.constellation;
    CounterRng rng(16);
    RunningStats ber, theory;
    for (int t = 0; t < 100000; ++t) {
        const Scene sc = sample_scene(cfg, rng);
        const Observation obs = generate_observation(cfg, sc);
        const auto ctx = make_whitening_context(obs);
        const auto out = run_sic_chain(obs, ctx);
        ber.add(alphabet.bit_distance(sc.symbol_index, out.detected) / 2.0);
        theory.add(theoretical_ber_qpsk(ctx, cfg.beta));
    }
    INFO("sim " << ber.mean() << " theory " << theory.mean() << " se " << ber.standard_error());
    CHECK(std::abs(ber.mean() - theory.mean()) < 3 * ber.standard_error());
}

TEST_CASE("ml_detect: SER at beta = gamma = 1, n_rx = 4 matches the Gray QPSK prediction")
{
    // Per-channel QPSK symbol error rate is 1 - (1 - p)^2 with p = Q(sqrt(beta w^H w)).
    SystemConfig cfg;
    cfg.n_rx = 4;
    cfg.seed = 77;
    CounterRng rng(derive_key(cfg.seed, {}));
    const CVec g = composite_sensing_channel(cfg);
    RunningStats ser, predicted;
    for (int t = 0; t < 100000; ++t) {
        const Scene sc = sample_scene(cfg, rng);
        const Observation obs = generate_observation(cfg, sc, g);
        const auto ctx = make_whitening_context(obs);
        const auto out = run_sic_chain(obs, ctx);
        ser.add(out.detected != sc.symbol_index ? 1.0 : 0.0);
        const double p = theoretical_ber_qpsk(ctx, cfg.beta);
        predicted.add(1 - (1 - p) * (1 - p));
    }
    INFO("ser " << ser.mean() << " predicted " << predicted.mean() << " se " << ser.standard_error());
    CHECK(std::abs(ser.mean() - predicted.mean()) < 3 * std::max(ser.standard_error(), 1.0 / 100000));
}
