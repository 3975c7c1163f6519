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

#ifndef ISAC_RNG_HPP
#define ISAC_RNG_HPP

#include "isac/types.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace isac {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream key from a master seed and a list of
/// coordinates (grid index, antenna count, trial index, ...). The result only
/// depends on the values, never on the order in which streams are consumed.
constexpr std::uint64_t derive_key(std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept
{
    std::uint64_t k = mix64(master);
    for (std::uint64_t c : coords)
        k = mix64(k ^ mix64(c + 0x632be59bd9b4e019ULL));
    return k;
}

/// Counter-based generator: output n is mix64(key + n * golden). Satisfies
/// UniformRandomBitGenerator. Two instances with the same key produce the same
/// sequence regardless of which thread runs them.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on (0, 1], 53-bit resolution.
    double uniform_open0() noexcept { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform integer on [0, n). n must be a power of two.
    std::uint32_t index_pow2(std::uint32_t n) noexcept
    {
        return static_cast<std::uint32_t>((*this)() >> 32) & (n - 1U);
    }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = variance (Box-Muller).
    Complex complex_normal(double variance = 1.0) noexcept
    {
        const double u1 = uniform_open0();
        const double u2 = uniform_open0();
        const double r = std::sqrt(-variance * std::log(u1));
        const double phi = 2.0 * kPi * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace isac

#endif
