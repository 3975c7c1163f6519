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

#ifndef ISAC_METRICS_HPP
#define ISAC_METRICS_HPP

#include "isac/constellation.hpp"
#include "isac/sic_receiver.hpp"
#include "isac/types.hpp"

#include <cmath>
#include <cstdint>
#include <span>

namespace isac {

/// Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2.
inline double q_function(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Gray-coded QPSK bit error rate after MRC: Q(sqrt(beta * w^H w)).
inline double theoretical_ber_qpsk(const WhiteningContext& ctx, double beta)
{
    return q_function(std::sqrt(beta * ctx.w.squaredNorm()));
}

struct TrialRecord {
    std::size_t true_symbol = 0;
    std::size_t detected_symbol = 0;
    Complex true_alpha;
    Complex alpha_sic;
    Complex alpha_mmse;
    double ber_theory = 0.5; ///< conditional BER given this trial's channel
};

/// Streaming mean/variance (Welford), mergeable with the Chan et al. update.
class RunningStats {
public:
    void add(double x) noexcept
    {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void merge(const RunningStats& o) noexcept
    {
        if (o.n_ == 0)
            return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
        const double n = na + nb;
        const double d = o.mean_ - mean_;
        mean_ += d * nb / n;
        m2_ += o.m2_ + d * d * na * nb / n;
        n_ += o.n_;
    }

    std::uint64_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double standard_error() const noexcept { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct AggregateMetrics {
    double ber_empirical = 0.0;
    double ber_theoretical = 0.0;
    double mse_sic = 0.0;
    double mse_mmse = 0.0;
    std::uint64_t trials = 0;
    double ber_stderr = 0.0;
    double mse_stderr_sic = 0.0;
    double mse_stderr_mmse = 0.0;
    double ber_theoretical_stderr = 0.0;
    double mse_gap = 0.0;        ///< paired mean of |e_sic|^2 - |e_mmse|^2
    double mse_gap_stderr = 0.0;
};

enum class EstimatorKind { sic, mmse };

/// Fraction of bit errors in one trial.
inline double trial_bit_error_fraction(const TrialRecord& r, const Constellation& alphabet)
{
    if (alphabet.bits_per_symbol() == 0)
        return 0.0;
    return static_cast<double>(alphabet.bit_distance(r.true_symbol, r.detected_symbol)) /
           alphabet.bits_per_symbol();
}

inline double squared_error(const TrialRecord& r, EstimatorKind which)
{
    return std::norm(r.true_alpha - (which == EstimatorKind::sic ? r.alpha_sic : r.alpha_mmse));
}

/// Accumulates every metric in one pass; partial accumulators merge exactly
/// like a single pass would up to rounding, and deterministically for a fixed
/// merge order.
class MetricsAccumulator {
public:
    void add(const TrialRecord& r, const Constellation& alphabet)
    {
        ber_.add(trial_bit_error_fraction(r, alphabet));
        ber_theory_.add(r.ber_theory);
        const double es = squared_error(r, EstimatorKind::sic);
        const double em = squared_error(r, EstimatorKind::mmse);
        sic_.add(es);
        mmse_.add(em);
        gap_.add(es - em);
    }

    void merge(const MetricsAccumulator& o)
    {
        ber_.merge(o.ber_);
        ber_theory_.merge(o.ber_theory_);
        sic_.merge(o.sic_);
        mmse_.merge(o.mmse_);
        gap_.merge(o.gap_);
    }

    AggregateMetrics finish() const
    {
        AggregateMetrics m;
        m.trials = ber_.count();
        m.ber_empirical = ber_.mean();
        m.ber_stderr = ber_.standard_error();
        m.ber_theoretical = ber_theory_.mean();
        m.ber_theoretical_stderr = ber_theory_.standard_error();
        m.mse_sic = sic_.mean();
        m.mse_stderr_sic = sic_.standard_error();
        m.mse_mmse = mmse_.mean();
        m.mse_stderr_mmse = mmse_.standard_error();
        m.mse_gap = gap_.mean();
        m.mse_gap_stderr = gap_.standard_error();
        return m;
    }

private:
    RunningStats ber_, ber_theory_, sic_, mmse_, gap_;
};

/// Empirical BER with the standard error of the per-trial error fraction.
inline Estimate empirical_ber(std::span<const TrialRecord> records, const Constellation& alphabet)
{
    if (records.empty())
        throw config_error("empirical_ber: no records");
    RunningStats s;
    for (const auto& r : records) {
        if (r.true_symbol >= alphabet.size() || r.detected_symbol >= alphabet.size())
            throw config_error("empirical_ber: symbol index out of range");
        s.add(trial_bit_error_fraction(r, alphabet));
    }
    return {s.mean(), s.standard_error()};
}

/// Mean of |alpha - alpha_hat|^2 for the selected estimator.
inline Estimate empirical_mse(std::span<const TrialRecord> records, EstimatorKind which)
{
    if (records.empty())
        throw config_error("empirical_mse: no records");
    RunningStats s;
    for (const auto& r : records)
        s.add(squared_error(r, which));
    return {s.mean(), s.standard_error()};
}

inline AggregateMetrics aggregate(std::span<const TrialRecord> records, const Constellation& alphabet)
{
    MetricsAccumulator acc;
    for (const auto& r : records)
        acc.add(r, alphabet);
    return acc.finish();
}

} // namespace isac

#endif
