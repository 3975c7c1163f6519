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

#ifndef ISAC_EXPERIMENTS_HPP
#define ISAC_EXPERIMENTS_HPP

#include "isac/core_model.hpp"
#include "isac/metrics.hpp"
#include "isac/mmse_receiver.hpp"
#include "isac/rng.hpp"
#include "isac/sic_receiver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace isac {

inline constexpr std::uint64_t kAcceptanceTrials = 1000;

/// Precomputes everything that is constant across trials of one grid point
/// (sensing channel, interference covariance and its whitener).
class TrialKernel {
public:
    explicit TrialKernel(SystemConfig cfg) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        g_ = composite_sensing_channel(cfg_);
        base_.r_c = interference_covariance(g_, cfg_.gamma, cfg_.sigma2);
        base_.q = whitening_matrix(base_.r_c);
    }

    const SystemConfig& config() const noexcept { return cfg_; }
    const CVec& sensing_channel() const noexcept { return g_; }

    /// One paired draw: both receiver chains see the same observation.
    TrialRecord run(std::uint64_t trial_index) const
    {
        CounterRng rng(derive_key(cfg_.seed, {trial_index}));
        const Scene scene = sample_scene(cfg_, rng);
        const Observation obs = generate_observation(cfg_, scene, g_);
        const WhiteningContext ctx = rebind_channel(base_, obs.h_c);
        const ReceiverOutput sic = run_sic_chain(obs, ctx);

        TrialRecord rec;
        rec.true_symbol = scene.symbol_index;
        rec.detected_symbol = sic.detected;
        rec.true_alpha = scene.alpha;
        rec.alpha_sic = sic.alpha_hat;
        rec.alpha_mmse = posterior_mmse_alpha(obs, make_posterior_workspace(obs));
        rec.ber_theory = theoretical_ber_qpsk(ctx, obs.beta);
        return rec;
    }

private:
    SystemConfig cfg_;
    CVec g_;
    WhiteningContext base_;
};

/// Runs trial `trial_index` of the stream seeded by cfg.seed.
inline TrialRecord run_trial(const SystemConfig& cfg, std::uint64_t trial_index)
{
    return TrialKernel(cfg).run(trial_index);
}

enum class SweepVariable { beta, gamma };

inline const char* to_string(SweepVariable v) { return v == SweepVariable::beta ? "beta" : "gamma"; }

/// n log-spaced points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int n)
{
    if (!(lo > 0.0) || !(hi >= lo) || n < 1)
        throw config_error("log_grid: need 0 < lo <= hi and n >= 1");
    std::vector<double> g(static_cast<std::size_t>(n));
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int k = 0; k < n; ++k)
        g[static_cast<std::size_t>(k)] = std::pow(10.0, a + (b - a) * k / (n - 1));
    g.back() = hi;
    return g;
}

struct SweepSpec {
    SystemConfig base;
    SweepVariable variable = SweepVariable::beta;
    std::vector<double> grid = log_grid(1e-3, 1e3, 13);
    std::vector<int> n_rx_list{1, 2, 4};
    std::uint64_t trials_per_point = 100000;
    std::uint64_t master_seed = 0;

    void validate() const
    {
        base.validate();
        if (grid.empty())
            throw config_error("sweep: grid is empty");
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (!(grid[k] > 0.0) || !std::isfinite(grid[k]))
                throw config_error("sweep: grid values must be positive and finite");
            if (k > 0 && !(grid[k] > grid[k - 1]))
                throw config_error("sweep: grid must be strictly ascending");
        }
        if (n_rx_list.empty())
            throw config_error("sweep: n_rx list is empty");
        for (int n : n_rx_list)
            if (n < 1)
                throw config_error("sweep: n_rx values must be >= 1");
        if (trials_per_point == 0)
            throw config_error("sweep: trials per point must be >= 1");
    }
};

struct SweepRow {
    double sweep_value = 0.0;
    int n_rx = 1;
    AggregateMetrics metrics;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    bool below_acceptance_trials = false;
};

struct SweepResult {
    SweepVariable variable = SweepVariable::beta;
    std::vector<SweepRow> rows;

    const SweepRow* find(double value, int n_rx) const
    {
        for (const auto& r : rows)
            if (r.n_rx == n_rx && r.sweep_value == value)
                return &r;
        return nullptr;
    }

    /// Rows for one antenna count, in grid order.
    std::vector<SweepRow> curve(int n_rx) const
    {
        std::vector<SweepRow> out;
        for (const auto& r : rows)
            if (r.n_rx == n_rx)
                out.push_back(r);
        return out;
    }
};

/// Worker count: explicit value if > 0, else ISAC_SIM_THREADS, else hardware.
inline unsigned resolve_thread_count(unsigned requested = 0)
{
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("ISAC_SIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<unsigned>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Seed of the (grid index, n_rx) substream.
inline std::uint64_t point_seed(std::uint64_t master_seed, std::size_t grid_index, int n_rx)
{
    return derive_key(master_seed, {static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(n_rx)});
}

namespace detail {

inline constexpr std::uint64_t kChunkTrials = 4096;

// Trials are cut into fixed-size chunks; chunk partials are merged in chunk
// order, so the result does not depend on the number of workers.
inline AggregateMetrics run_point(const TrialKernel& kernel, std::uint64_t trials, unsigned threads)
{
    const std::uint64_t n_chunks = (trials + kChunkTrials - 1) / kChunkTrials;
    std::vector<MetricsAccumulator> partial(n_chunks);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::uint64_t failed_trial = 0;
    std::mutex failure_mutex;
    const auto& alphabet = *kernel.config().constellation;

    auto worker = [&] {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks)
                return;
            const std::uint64_t lo = c * kChunkTrials;
            const std::uint64_t hi = std::min(trials, lo + kChunkTrials);
            std::uint64_t t = lo;
            try {
                for (; t < hi; ++t)
                    partial[c].add(kernel.run(t), alphabet);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure || t < failed_trial) {
                    failure = std::current_exception();
                    failed_trial = t;
                }
                next.store(n_chunks);
                return;
            }
        }
    };

    const unsigned n_workers = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_chunks));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (unsigned k = 0; k < n_workers; ++k)
            pool.emplace_back(worker);
    }
    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            throw numerical_error("trial " + std::to_string(failed_trial) + ": " + e.what());
        }
    }
    MetricsAccumulator total;
    for (const auto& p : partial)
        total.merge(p);
    return total.finish();
}

} // namespace detail

/// Runs every (grid value, n_rx) point; rows ordered by grid value, then by
/// n_rx in list order. Bit-identical for any thread count.
inline SweepResult run_sweep(const SweepSpec& spec, unsigned threads = 0)
{
    spec.validate();
    const unsigned n_threads = resolve_thread_count(threads);
    SweepResult result;
    result.variable = spec.variable;
    result.rows.reserve(spec.grid.size() * spec.n_rx_list.size());
    for (std::size_t gi = 0; gi < spec.grid.size(); ++gi) {
        for (int n_rx : spec.n_rx_list) {
            SystemConfig cfg = spec.base;
            cfg.n_rx = n_rx;
            (spec.variable == SweepVariable::beta ? cfg.beta : cfg.gamma) = spec.grid[gi];
            cfg.seed = point_seed(spec.master_seed, gi, n_rx);
            SweepRow row;
            row.sweep_value = spec.grid[gi];
            row.n_rx = n_rx;
            row.seed = cfg.seed;
            row.trials = spec.trials_per_point;
            row.below_acceptance_trials = spec.trials_per_point < kAcceptanceTrials;
            try {
                row.metrics = detail::run_point(TrialKernel(cfg), spec.trials_per_point, n_threads);
            } catch (const std::exception& e) {
                throw numerical_error(std::string("sweep aborted at ") + to_string(spec.variable) + "=" +
                                      std::to_string(spec.grid[gi]) + ", n_rx=" + std::to_string(n_rx) + ": " +
                                      e.what());
            }
            result.rows.push_back(row);
        }
    }
    return result;
}

} // namespace isac

#endif
