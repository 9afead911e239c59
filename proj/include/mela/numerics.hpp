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

#include "mela/types.hpp"

#include <functional>
#include <vector>

namespace mela
{
// sin(x)/x, NOT sin(pi x)/(pi x). Below |x| = 1e-6 the series 1 - x^2/6 is used.
double sinc(double x);

struct EigResult
{
    RVec values;  // descending
    CMat vectors; // columns match values
};

// Full decomposition of a Hermitian matrix (checked to 1e-8 relative).
EigResult hermitian_eig(const CMat &A);

// The `count` largest eigenpairs only.
EigResult hermitian_eig_top(const CMat &A, int count);

// Column-pivoted QR least squares with a 1-norm condition estimate of R.
class LeastSquares
{
public:
    static constexpr double max_condition = 1e12;

    explicit LeastSquares(const CMat &A);

    CVec solve(const CVec &b) const;
    CMat solve(const CMat &B) const;
    CMat pseudo_inverse() const;
    double condition() const { return condition_; }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }

private:
    Eigen::ColPivHouseholderQR<CMat> qr_;
    Eigen::Index rows_, cols_;
    double condition_;
};

CVec least_squares(const CMat &A, const CVec &b);

struct GaussLegendreRule
{
    std::vector<double> nodes;   // on [-1, 1], ascending
    std::vector<double> weights;
};

// Cached per order; thread-safe.
const GaussLegendreRule &gauss_legendre(int order);

// Tensor-product Gauss-Legendre integral of f over [u0, u1] x [v0, v1].
cd quad2d(const std::function<cd(double, double)> &f, double u0, double u1, double v0, double v1, int order = 16);

// log |det(A)| via partial-pivot LU; -inf for exactly singular input.
double log_abs_det(const CMat &A);

} // namespace mela
