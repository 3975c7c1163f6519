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

#ifndef ISAC_TYPES_HPP
#define ISAC_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isac {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Extended precision, used where a double-precision evaluation would be
// limited by eps * cond(R) (whitening, dense reference solves).
using ComplexX = std::complex<long double>;
using CVecX = Eigen::Matrix<ComplexX, Eigen::Dynamic, 1>;
using CMatX = Eigen::Matrix<ComplexX, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kPi = std::numbers::pi;

// Raised for malformed inputs: wrong dimensions, invalid configuration values.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a numerical precondition fails at run time (non-PD covariance,
// grid too coarse for the quadrature oracle, ...).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

} // namespace isac

#endif
