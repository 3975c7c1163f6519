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

#include "isac/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

using namespace isac;

namespace {

SweepSpec small_spec(SweepVariable var, std::uint64_t trials)
{
    SweepSpec s;
    s.variable = var;
    s.grid = log_grid(1e-2, 1e2, 5);
    s.n_rx_list = {1, 2, 4};
    s.trials_per_point = trials;
    s.master_seed = 7;
    return s;
}

bool identical(const AggregateMetrics& a, const AggregateMetrics& b)
{
    return a.ber_empirical == b.ber_empirical && a.ber_theoretical == b.ber_theoretical && a.mse_sic == b.mse_sic &&
           a.mse_mmse == b.mse_mmse && a.trials == b.trials && a.ber_stderr == b.ber_stderr &&
           a.mse_stderr_sic == b.mse_stderr_sic && a.mse_stderr_mmse == b.mse_stderr_mmse &&
           a.mse_gap == b.mse_gap && a.mse_gap_stderr == b.mse_gap_stderr;
}

} // namespace

TEST_CASE("log_grid: endpoints, spacing and validation")
{
    const auto g = log_grid(1e-3, 1e3, 13);
    REQUIRE(g.size() == 13);
    CHECK(g.front() == 1e-3);
    CHECK(g.back() == 1e3);
    for (std::size_t k = 1; k < g.size(); ++k)
        CHECK(std::abs(std::log10(g[k] / g[k - 1]) - 0.5) < 1e-12);
    CHECK(log_grid(2.0, 5.0, 1) == std::vector<double>{2.0});
    CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), config_error);
    CHECK_THROWS_AS(log_grid(2.0, 1.0, 3), config_error);
    CHECK_THROWS_AS(log_grid(1.0, 2.0, 0), config_error);
}

TEST_CASE("run_trial: deterministic per (seed, trial index)")
{
    SystemConfig cfg;
    cfg.n_rx = 2;
    cfg.seed = 99;
    const TrialRecord a = run_trial(cfg, 12);
    const TrialRecord b = run_trial(cfg, 12);
    CHECK(a.true_alpha == b.true_alpha);
    CHECK(a.alpha_sic == b.alpha_sic);
    CHECK(a.alpha_mmse == b.alpha_mmse);
    CHECK(a.detected_symbol == b.detected_symbol);
    CHECK(a.ber_theory == b.ber_theory);
    const TrialRecord c = run_trial(cfg, 13);
    CHECK(a.true_alpha != c.true_alpha);
    cfg.seed = 100;
    CHECK(run_trial(cfg, 12).true_alpha != a.true_alpha);
}

TEST_CASE("run_trial: without sensing power both estimates are zero")
{
    SystemConfig cfg;
    cfg.gamma = 0.0;
    for (int n_rx : {1, 2, 4}) {
        cfg.n_rx = n_rx;
        for (std::uint64_t t = 0; t < 50; ++t) {
            const TrialRecord r = run_trial(cfg, t);
            CHECK(r.alpha_sic == Complex(0, 0));
            CHECK(r.alpha_mmse == Complex(0, 0));
        }
    }
}

TEST_CASE("run_sweep: bit-identical across thread counts")
{
    auto spec = small_spec(SweepVariable::beta, 9000); // spans several chunks
    spec.grid = {0.1, 1.0};
    const SweepResult r1 = run_sweep(spec, 1);
    for (unsigned threads : {2U, 3U, 8U}) {
        const SweepResult rn = run_sweep(spec, threads);
        REQUIRE(rn.rows.size() == r1.rows.size());
        for (std::size_t k = 0; k < r1.rows.size(); ++k) {
            CHECK(rn.rows[k].seed == r1.rows[k].seed);
            CHECK(identical(rn.rows[k].metrics, r1.rows[k].metrics));
        }
    }
}

TEST_CASE("run_sweep: row layout, seeds and low-trial flag")
{
    const auto spec = small_spec(SweepVariable::gamma, 200);
    const SweepResult r = run_sweep(spec, 1);
    CHECK(r.variable == SweepVariable::gamma);
    REQUIRE(r.rows.size() == spec.grid.size() * spec.n_rx_list.size());
    std::vector<std::uint64_t> seeds;
    for (std::size_t gi = 0; gi < spec.grid.size(); ++gi)
        for (std::size_t ni = 0; ni < spec.n_rx_list.size(); ++ni) {
            const auto& row = r.rows[gi * spec.n_rx_list.size() + ni];
            CHECK(row.sweep_value == spec.grid[gi]);
            CHECK(row.n_rx == spec.n_rx_list[ni]);
            CHECK(row.trials == 200);
            CHECK(row.metrics.trials == 200);
            CHECK(row.below_acceptance_trials);
            CHECK(row.seed == point_seed(spec.master_seed, gi, spec.n_rx_list[ni]));
            seeds.push_back(row.seed);
        }
    std::sort(seeds.begin(), seeds.end());
    CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
    CHECK(r.find(spec.grid[2], 4) == &r.rows[2 * 3 + 2]);
    CHECK(r.find(123.0, 4) == nullptr);
    CHECK(r.curve(2).size() == spec.grid.size());

    auto big = small_spec(SweepVariable::beta, kAcceptanceTrials);
    big.grid = {1.0};
    big.n_rx_list = {1};
    CHECK_FALSE(run_sweep(big, 1).rows[0].below_acceptance_trials);
}

TEST_CASE("run_sweep: one point reproduces the corresponding sweep row")
{
    auto spec = small_spec(SweepVariable::beta, 500);
    const SweepResult full = run_sweep(spec, 1);
    // Same grid index and n_rx -> same seed -> same numbers.
    auto one = spec;
    one.n_rx_list = {2};
    const SweepResult part = run_sweep(one, 1);
    for (const auto& row : part.rows)
        CHECK(identical(row.metrics, full.find(row.sweep_value, 2)->metrics));
}

TEST_CASE("run_sweep: invalid specs are rejected")
{
    auto s = small_spec(SweepVariable::beta, 10);
    s.grid.clear();
    CHECK_THROWS_AS(run_sweep(s, 1), config_error);
    s = small_spec(SweepVariable::beta, 10);
    s.grid = {1.0, 0.5};
    CHECK_THROWS_AS(run_sweep(s, 1), config_error);
    s.grid = {-1.0};
    CHECK_THROWS_AS(run_sweep(s, 1), config_error);
    s = small_spec(SweepVariable::beta, 0);
    CHECK_THROWS_AS(run_sweep(s, 1), config_error);
    s = small_spec(SweepVariable::beta, 10);
    s.n_rx_list = {0};
    CHECK_THROWS_AS(run_sweep(s, 1), config_error);
    s.n_rx_list = {};
    CHECK_THROWS_AS(run_sweep(s, 1), config_error);
    s = small_spec(SweepVariable::beta, 10);
    s.base.sigma2 = 0.0;
    CHECK_THROWS_AS(run_sweep(s, 1), config_error);
}

TEST_CASE("run_sweep: numerical failures name the grid point")
{
    auto s = small_spec(SweepVariable::gamma, 10);
    s.base.sigma2 = 1e-300; // interference covariance becomes numerically singular
    s.grid = {1e3};
    s.n_rx_list = {2};
    try {
        run_sweep(s, 1);
        FAIL("expected an exception");
    } catch (const config_error&) {
        SUCCEED("rejected as a configuration problem");
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        CHECK(msg.find("gamma=") != std::string::npos);
        CHECK(msg.find("n_rx=2") != std::string::npos);
    }
}

TEST_CASE("resolve_thread_count: explicit request wins")
{
    CHECK(resolve_thread_count(3) == 3);
    CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("sweeps: receive array gain lowers BER and MSE at the nominal point")
{
    SweepSpec s;
    s.grid = {1.0};
    s.trials_per_point = 20000;
    s.master_seed = 3;
    const auto r = run_sweep(s, 0);
    const auto& m1 = r.find(1.0, 1)->metrics;
    const auto& m2 = r.find(1.0, 2)->metrics;
    const auto& m4 = r.find(1.0, 4)->metrics;
    CHECK(m1.ber_empirical > m2.ber_empirical);
    CHECK(m2.ber_empirical >= m4.ber_empirical);
    CHECK(m1.mse_mmse > m2.mse_mmse);
    CHECK(m2.mse_mmse > m4.mse_mmse);
    for (const auto* m : {&m1, &m2, &m4}) {
        CHECK(m->mse_mmse <= m->mse_sic + 3 * m->mse_gap_stderr);
        CHECK(m->mse_mmse < 1.0);
    }
}

TEST_CASE("sweeps: estimators converge once detection is error-free")
{
    SweepSpec s;
    s.grid = {1e3};
    s.n_rx_list = {2, 4};
    s.trials_per_point = 20000;
    s.master_seed = 5;
    for (const auto& row : run_sweep(s, 0).rows) {
        const auto& m = row.metrics;
        CHECK(std::abs(m.mse_sic - m.mse_mmse) / m.mse_mmse < 0.05);
    }
}

TEST_CASE("sweeps: estimation error falls as sensing power grows")
{
    SweepSpec s;
    s.variable = SweepVariable::gamma;
    s.grid = {1e-1, 1e1, 1e3};
    s.n_rx_list = {4};
    s.trials_per_point = 5000;
    s.master_seed = 11;
    const auto c = run_sweep(s, 0).curve(4);
    CHECK(c[0].metrics.mse_mmse > c[1].metrics.mse_mmse);
    CHECK(c[1].metrics.mse_mmse > c[2].metrics.mse_mmse);
}
