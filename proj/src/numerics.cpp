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

#include "mela/numerics.hpp"

#include <boost/math/special_functions/legendre.hpp>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace mela
{
double sinc(double x)
{
    if (std::abs(x) < 1e-6)
        return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

namespace
{
void check_hermitian(const CMat &A)
{
    if (A.rows() != A.cols())
        throw DomainError("hermitian_eig: matrix is not square");
    double scale = A.norm();
    double asym = (A - A.adjoint()).norm();
    if (asym > 1e-8 * std::max(scale, 1e-300))
        throw DomainError("hermitian_eig: matrix is not Hermitian");
}

// zheevr on the lower triangle; `il`..`iu` are 1-based ascending indices, 0 for all.
EigResult run_zheevr(const CMat &A, lapack_int il, lapack_int iu)
{
    check_hermitian(A);
    const lapack_int n = static_cast<lapack_int>(A.rows());
    EigResult out;
    if (n == 0)
        return out;
    CMat work = A;
    const bool all = (il == 0);
    const lapack_int want = all ? n : iu - il + 1;
    std::vector<double> w(static_cast<size_t>(n));
    CMat Z(n, want);
    std::vector<lapack_int> isuppz(2 * static_cast<size_t>(std::max<lapack_int>(want, 1)));
    lapack_int found = 0;
    lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', all ? 'A' : 'I', 'L', n,
                                     reinterpret_cast<lapack_complex_double *>(work.data()), n, 0.0, 0.0,
                                     all ? 1 : il, all ? n : iu, 0.0, &found, w.data(),
                                     reinterpret_cast<lapack_complex_double *>(Z.data()), n, isuppz.data());
    if (info != 0 || found != want)
        throw NumericalError("hermitian_eig: LAPACK zheevr failed (info " + std::to_string(info) + ")");

    // LAPACK returns ascending order; flip, keeping ties in original order.
    std::vector<int> idx(static_cast<size_t>(found));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return w[static_cast<size_t>(a)] > w[static_cast<size_t>(b)]; });
    out.values.resize(found);
    out.vectors.resize(n, found);
    for (lapack_int i = 0; i < found; ++i)
    {
        out.values(i) = w[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        out.vectors.col(i) = Z.col(idx[static_cast<size_t>(i)]);
    }
    return out;
}
} // namespace

EigResult hermitian_eig(const CMat &A)
{
    return run_zheevr(A, 0, 0);
}

EigResult hermitian_eig_top(const CMat &A, int count)
{
    const auto n = static_cast<lapack_int>(A.rows());
    if (count < 1 || count > n)
        throw DomainError("hermitian_eig_top: count out of range");
    return run_zheevr(A, n - count + 1, n);
}

LeastSquares::LeastSquares(const CMat &A) : qr_(A), rows_(A.rows()), cols_(A.cols())
{
    if (rows_ < cols_)
        throw DomainError("least_squares: system is underdetermined (" + std::to_string(rows_) + " rows < " +
                          std::to_string(cols_) + " columns)");
    if (cols_ == 0)
        throw DomainError("least_squares: empty system");
    CMat R = qr_.matrixQR().topLeftCorner(cols_, cols_).triangularView<Eigen::Upper>();
    double rcond = 0.0;
    lapack_int info = LAPACKE_ztrcon(LAPACK_COL_MAJOR, '1', 'U', 'N', static_cast<lapack_int>(cols_),
                                     reinterpret_cast<lapack_complex_double *>(R.data()),
                                     static_cast<lapack_int>(cols_), &rcond);
    if (info != 0)
        throw NumericalError("least_squares: condition estimate failed");
    condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(condition_ <= max_condition))
        throw RankDeficientError("least_squares: matrix is rank deficient (condition estimate " +
                                     std::to_string(condition_) + "); add sub-slots or redraw phases",
                                 condition_);
}

CVec LeastSquares::solve(const CVec &b) const
{
    if (b.size() != rows_)
        throw DomainError("least_squares: right-hand side has wrong length");
    return qr_.solve(b);
}

CMat LeastSquares::solve(const CMat &B) const
{
    if (B.rows() != rows_)
        throw DomainError("least_squares: right-hand side has wrong row count");
    return qr_.solve(B);
}

CMat LeastSquares::pseudo_inverse() const
{
    return qr_.solve(CMat::Identity(rows_, rows_));
}

CVec least_squares(const CMat &A, const CVec &b)
{
    return LeastSquares(A).solve(b);
}

const GaussLegendreRule &gauss_legendre(int order)
{
    if (order < 1)
        throw DomainError("gauss_legendre: order must be positive");
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto &slot = cache[order];
    if (!slot)
    {
        auto rule = std::make_unique<GaussLegendreRule>();
        // Boost returns the nonnegative roots in ascending order.
        std::vector<double> pos = boost::math::legendre_p_zeros<double>(order);
        std::vector<double> x;
        for (auto it = pos.rbegin(); it != pos.rend(); ++it)
            if (*it > 0.0)
                x.push_back(-*it);
        for (double r : pos)
            x.push_back(r);
        for (double xi : x)
        {
            double dp = boost::math::legendre_p_prime<double>(order, xi);
            rule->nodes.push_back(xi);
            rule->weights.push_back(2.0 / ((1.0 - xi * xi) * dp * dp));
        }
        slot = std::move(rule);
    }
    return *slot;
}

cd quad2d(const std::function<cd(double, double)> &f, double u0, double u1, double v0, double v1, int order)
{
    const auto &rule = gauss_legendre(order);
    const double hu = 0.5 * (u1 - u0), cu = 0.5 * (u1 + u0);
    const double hv = 0.5 * (v1 - v0), cv = 0.5 * (v1 + v0);
    cd acc = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
    {
        double u = cu + hu * rule.nodes[i];
        cd row = 0.0;
        for (size_t j = 0; j < rule.nodes.size(); ++j)
            row += rule.weights[j] * f(u, cv + hv * rule.nodes[j]);
        acc += rule.weights[i] * row;
    }
    return acc * hu * hv;
}

double log_abs_det(const CMat &A)
{
    if (A.rows() != A.cols())
        throw DomainError("log_abs_det: matrix is not square");
    Eigen::PartialPivLU<CMat> lu(A);
    const CMat &LU = lu.matrixLU();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < LU.rows(); ++i)
    {
        double a = std::abs(LU(i, i));
        if (a == 0.0)
            return -std::numeric_limits<double>::infinity();
        acc += std::log(a);
    }
    return acc;
}

} // namespace mela
