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

#ifndef ISAC_CONSTELLATION_HPP
#define ISAC_CONSTELLATION_HPP

#include "isac/types.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <utility>
#include <vector>

namespace isac {

/// Symbol alphabet with per-symbol bit labels. Points are normalized to unit
/// average power; the alphabet size is a power of two.
class Constellation {
public:
    /// Validates and takes ownership of the alphabet. Labels must be distinct
    /// and fit in log2(size) bits.
    Constellation(std::vector<Complex> points, std::vector<std::uint32_t> labels)
        : points_(std::move(points)), labels_(std::move(labels))
    {
        if (points_.empty())
            throw config_error("constellation: empty alphabet");
        if (!std::has_single_bit(points_.size()))
            throw config_error("constellation: size must be a power of two");
        if (labels_.size() != points_.size())
            throw config_error("constellation: one bit label per point required");
        bits_ = static_cast<unsigned>(std::countr_zero(points_.size()));
        std::set<std::uint32_t> seen;
        for (auto l : labels_) {
            if ((l >> bits_) != 0U)
                throw config_error("constellation: bit label wider than log2(size)");
            if (!seen.insert(l).second)
                throw config_error("constellation: duplicate bit label");
        }
        double p = 0.0;
        for (const auto& s : points_)
            p += std::norm(s);
        p /= static_cast<double>(points_.size());
        if (std::abs(p - 1.0) > 1e-12)
            throw config_error("constellation: average power must be 1");
    }

    /// Gray-coded QPSK, point i at phase pi/4 + i*pi/2 (labels 00, 01, 11, 10).
    static Constellation qpsk()
    {
        const double a = 1.0 / std::sqrt(2.0);
        return Constellation({{a, a}, {-a, a}, {-a, -a}, {a, -a}}, {0b00, 0b01, 0b11, 0b10});
    }

    std::size_t size() const noexcept { return points_.size(); }
    unsigned bits_per_symbol() const noexcept { return bits_; }
    const Complex& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<Complex>& points() const noexcept { return points_; }
    std::uint32_t label(std::size_t i) const { return labels_[i]; }

    /// Number of differing label bits between symbols i and j.
    unsigned bit_distance(std::size_t i, std::size_t j) const
    {
        return static_cast<unsigned>(std::popcount(labels_[i] ^ labels_[j]));
    }

private:
    std::vector<Complex> points_;
    std::vector<std::uint32_t> labels_;
    unsigned bits_ = 0;
};

using ConstellationPtr = std::shared_ptr<const Constellation>;

inline ConstellationPtr make_qpsk() { return std::make_shared<const Constellation>(Constellation::qpsk()); }

} // namespace isac

#endif
