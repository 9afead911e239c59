// SPDX-License-Identifier: Apache-2.0
//
// mela: metasurface-enabled ELAA channel simulation
// Copyright (C) 2026 The mela contributors
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

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mela
{
using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 299792458.0;
inline constexpr double free_space_impedance = 376.730313668;
inline constexpr cd I{0.0, 1.0};

inline constexpr double deg2rad(double d) { return d * pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / pi; }

// Invalid arguments, impossible geometry, dimension mismatch.
class DomainError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure that callers may want to recover from.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class RankDeficientError : public NumericalError
{
public:
    RankDeficientError(const std::string &what, double condition)
        : NumericalError(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

} // namespace mela
