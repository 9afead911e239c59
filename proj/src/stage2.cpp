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

#include "mela/estimator.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mela
{
CMat stack_channel(const CMat &H, const std::vector<CVec> &phases)
{
    const Eigen::Index M = H.rows(), N = H.cols();
    CMat out(M * static_cast<Eigen::Index>(phases.size()), N);
    for (size_t s = 0; s < phases.size(); ++s)
    {
        if (phases[s].size() != N)
            throw DomainError("stack_channel: phase vector length mismatch");
        out.middleRows(static_cast<Eigen::Index>(s) * M, M) = H * phases[s].asDiagonal();
    }
    return out;
}

CVec stack_and_estimate_gs(const CMat &H, const std::vector<CVec> &phases, const std::vector<CVec> &y_subslots)
{
    if (phases.size() != y_subslots.size())
        throw DomainError("stack_and_estimate_gs: need one observation per sub-slot");
    const Eigen::Index M = H.rows();
    CVec z(M * static_cast<Eigen::Index>(y_subslots.size()));
    for (size_t s = 0; s < y_subslots.size(); ++s)
    {
        if (y_subslots[s].size() != M)
            throw DomainError("stack_and_estimate_gs: observation length mismatch");
        z.segment(static_cast<Eigen::Index>(s) * M, M) = y_subslots[s];
    }
    return LeastSquares(stack_channel(H, phases)).solve(z);
}

CMat ridge_stack_estimate(const CMat &Htilde, const CMat &Z, double mu)
{
    if (Z.rows() != Htilde.rows())
        throw DomainError("ridge_stack_estimate: observation length mismatch");
    if (!(mu >= 0.0))
        throw DomainError("ridge_stack_estimate: mu must be non-negative");
    if (mu == 0.0)
        return LeastSquares(Htilde).solve(Z);
    CMat A = Htilde.adjoint() * Htilde;
    A.diagonal().array() += mu;
    Eigen::LLT<CMat> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericalError("ridge_stack_estimate: normal matrix is not positive definite");
    return llt.solve(Htilde.adjoint() * Z);
}

CMat sample_covariance(const CMat &X)
{
    if (X.cols() < 1)
        throw DomainError("sample_covariance: no snapshots");
    CMat S = X * X.adjoint() / static_cast<double>(X.cols());
    // Exact Hermitian symmetry regardless of GEMM rounding.
    CMat out = 0.5 * (S + S.adjoint());
    return out;
}

LatticeCoords window_coords(int i, int n_h, int n_v)
{
    int a_lo, a_hi, b_lo, b_hi;
    switch (i)
    {
    case 1: a_lo = -n_h, a_hi = n_h - 1, b_lo = -n_v + 1, b_hi = n_v; break;
    case 2: a_lo = -n_h, a_hi = n_h - 1, b_lo = -n_v, b_hi = n_v - 1; break;
    case 3: a_lo = -n_h + 1, a_hi = n_h, b_lo = -n_v, b_hi = n_v - 1; break;
    default: throw DomainError("window_coords: selector index must be 1, 2 or 3");
    }
    LatticeCoords c;
    for (int a = a_lo; a <= a_hi; ++a)
        for (int b = b_lo; b <= b_hi; ++b)
            c.emplace_back(a, b);
    return c;
}

std::vector<int> selector_indices(int i, int n_h, int n_v)
{
    if (n_h < 1 || n_v < 1)
        throw DomainError("selector: lattice half-sizes must be at least 1");
    int rho;
    switch (i)
    {
    case 1: rho = 0; break;
    case 2: rho = -1; break;
    case 3: rho = 2 * n_v; break;
    default: throw DomainError("selector: index must be 1, 2 or 3");
    }
    const int rows = 4 * n_h * n_v, width = 2 * n_v;
    std::vector<int> idx(static_cast<size_t>(rows));
    for (int m = 1; m <= rows; ++m)
        idx[static_cast<size_t>(m - 1)] = m + (m + width - 1) / width + rho - 1;
    return idx;
}

RMat selector_matrix(int i, int n_h, int n_v)
{
    auto idx = selector_indices(i, n_h, n_v);
    RMat J = RMat::Zero(static_cast<Eigen::Index>(idx.size()), (2 * n_h + 1) * (2 * n_v + 1));
    for (size_t m = 0; m < idx.size(); ++m)
        J(static_cast<Eigen::Index>(m), idx[m]) = 1.0;
    return J;
}

CVec rotation_D(double gamma_a, double gamma_e, int n_h, int n_v)
{
    auto c = window_coords(3, n_h, n_v);
    CVec D(static_cast<Eigen::Index>(c.size()));
    for (size_t i = 0; i < c.size(); ++i)
        D(static_cast<Eigen::Index>(i)) = std::polar(1.0, -2.0 * (c[i].first * gamma_a + c[i].second * gamma_e));
    return D;
}

CVec rotation_E(double beta_e, double alpha, int n_h, int n_v)
{
    auto c = window_coords(2, n_h, n_v);
    CVec E(static_cast<Eigen::Index>(c.size()));
    for (size_t i = 0; i < c.size(); ++i)
        E(static_cast<Eigen::Index>(i)) = std::polar(1.0, c[i].first * alpha + (2 * c[i].second + 1) * beta_e);
    return E;
}

namespace
{
CMat select_rows(const CMat &U, const std::vector<int> &idx)
{
    CMat out(static_cast<Eigen::Index>(idx.size()), U.cols());
    for (size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = U.row(idx[i]);
    return out;
}

void fill_windows(SubspaceBundle &b, const MetasurfaceLayout &layout)
{
    b.U1 = select_rows(b.Us, selector_indices(1, layout.n_h, layout.n_v));
    b.U2 = select_rows(b.Us, selector_indices(2, layout.n_h, layout.n_v));
    b.U3 = select_rows(b.Us, selector_indices(3, layout.n_h, layout.n_v));
}

void check_gap(SubspaceBundle &b)
{
    if (b.eigenvalues.size() > b.K)
    {
        b.noise_floor = b.eigenvalues(b.K);
        double lk = b.eigenvalues(b.K - 1);
        if (!(lk >= 1.5 * b.noise_floor))
        {
            b.weak_gap = true;
            b.status = "weak eigen-gap between signal and noise subspaces";
        }
    }
}
} // namespace

Whitener Whitener::from_stack(const CMat &Htilde)
{
    Eigen::ColPivHouseholderQR<CMat> qr(Htilde);
    const Eigen::Index N = Htilde.cols();
    CMat R = qr.matrixQR().topLeftCorner(N, N).triangularView<Eigen::Upper>();
    const auto P = qr.colsPermutation();
    Whitener w;
    w.forward = R * P.transpose();
    CMat Rinv = R.triangularView<Eigen::Upper>().solve(CMat::Identity(N, N));
    w.inverse = P * Rinv;
    return w;
}

Whitener Whitener::from_normal_eig(const CMat &V, const RVec &s)
{
    if (V.cols() != s.size() || V.rows() != V.cols())
        throw DomainError("Whitener::from_normal_eig: V must be square with one scale per column");
    if (!(s.minCoeff() > 0.0))
        throw DomainError("Whitener::from_normal_eig: scales must be positive");
    Whitener w;
    w.forward = s.asDiagonal() * V.adjoint();
    w.inverse = V * s.cwiseInverse().asDiagonal();
    return w;
}

SubspaceBundle signal_subspace(const CMat &Sigma, int K, const MetasurfaceLayout &layout)
{
    const auto N = Sigma.rows();
    if (K < 1 || K >= N)
        throw DomainError("signal_subspace: need 1 <= K < N");
    if (N != layout.count())
        throw DomainError("signal_subspace: covariance size does not match the metasurface");
    auto eig = hermitian_eig_top(Sigma, K + 1);
    SubspaceBundle b;
    b.K = K;
    b.eigenvalues = eig.values;
    b.Us = eig.vectors.leftCols(K);
    check_gap(b);
    fill_windows(b, layout);
    return b;
}

SubspaceBundle signal_subspace_from_snapshots(const CMat &X, int K, const MetasurfaceLayout &layout,
                                              const Whitener *whitener)
{
    const auto N = X.rows(), T = X.cols();
    if (K < 1 || K >= N || T < 1)
        throw DomainError("signal_subspace_from_snapshots: invalid sizes");
    CMat Xw = whitener ? whitener->whiten(X) : X;
    SubspaceBundle b;
    b.K = K;
    if (T < N)
    {
        if (K > T)
            throw DomainError("signal_subspace_from_snapshots: fewer snapshots than sources");
        CMat Gm = Xw.adjoint() * Xw / static_cast<double>(T);
        Gm = 0.5 * (Gm + Gm.adjoint()).eval();
        int want = static_cast<int>(std::min<Eigen::Index>(K + 1, T));
        auto eig = hermitian_eig_top(Gm, want);
        b.eigenvalues = eig.values;
        b.Us.resize(N, K);
        for (int i = 0; i < K; ++i)
        {
            CVec u = Xw * eig.vectors.col(i);
            b.Us.col(i) = u / u.norm();
        }
    }
    else
    {
        auto eig = hermitian_eig_top(sample_covariance(Xw), K + 1);
        b.eigenvalues = eig.values;
        b.Us = eig.vectors.leftCols(K);
    }
    if (whitener)
    {
        CMat U = whitener->dewhiten(b.Us);
        Eigen::HouseholderQR<CMat> qr(U);
        b.Us = qr.householderQ() * CMat::Identity(N, K);
    }
    check_gap(b);
    fill_windows(b, layout);
    return b;
}

SubspaceBundle signal_subspace_in_basis(const CMat &Sigma_z, const CMat &V, int K, const MetasurfaceLayout &layout,
                                        const RVec *whiten_scale)
{
    const auto N = Sigma_z.rows();
    if (K < 1 || K >= N || Sigma_z.cols() != N || V.rows() != N || V.cols() != N)
        throw DomainError("signal_subspace_in_basis: invalid sizes");
    if (N != layout.count())
        throw DomainError("signal_subspace_in_basis: covariance size does not match the metasurface");
    SubspaceBundle b;
    b.K = K;
    if (whiten_scale)
    {
        if (whiten_scale->size() != N || !(whiten_scale->minCoeff() > 0.0))
            throw DomainError("signal_subspace_in_basis: whitening scales must be positive, one per column");
        CMat Sw = whiten_scale->asDiagonal() * Sigma_z * whiten_scale->asDiagonal();
        auto eig = hermitian_eig_top(0.5 * (Sw + Sw.adjoint()), K + 1);
        b.eigenvalues = eig.values;
        CMat U = V * (whiten_scale->cwiseInverse().asDiagonal() * eig.vectors.leftCols(K));
        Eigen::HouseholderQR<CMat> qr(U);
        b.Us = qr.householderQ() * CMat::Identity(N, K);
    }
    else
    {
        auto eig = hermitian_eig_top(0.5 * (Sigma_z + Sigma_z.adjoint()), K + 1);
        b.eigenvalues = eig.values;
        b.Us = V * eig.vectors.leftCols(K);
    }
    check_gap(b);
    fill_windows(b, layout);
    return b;
}

CMat random_weight(int K, int L, Rng &rng)
{
    for (int attempt = 0; attempt < 100; ++attempt)
    {
        CMat W(K, L);
        for (Eigen::Index i = 0; i < W.size(); ++i)
            W.data()[i] = rng.complex_normal(1.0);
        Eigen::JacobiSVD<CMat> svd(W);
        const auto &s = svd.singularValues();
        if (s(s.size() - 1) > 0.0 && s(0) / s(s.size() - 1) < 1e3)
            return W;
    }
    throw NumericalError("random_weight: could not draw a well-conditioned weight");
}

namespace
{
double spectrum_log(const CMat &C, SpectrumMode mode, const CMat &W)
{
    if (mode == SpectrumMode::Gram)
        return -0.5 * log_abs_det(C.adjoint() * C);
    return -log_abs_det(W * C);
}
} // namespace

AngleSpectrum::AngleSpectrum(const SubspaceBundle &sub, const MetasurfaceLayout &layout, const SpectrumOptions &opt)
    : n_h_(layout.n_h), n_v_(layout.n_v), mode_(opt.mode), V1_(sub.U1.colwise().reverse()), U3_(sub.U3), W_(opt.W)
{
    if (mode_ == SpectrumMode::FixedWeight && (W_.rows() != sub.K || W_.cols() != sub.U1.rows()))
        throw DomainError("AngleSpectrum: weight matrix must be K x 4 n_h n_v");
}

double AngleSpectrum::log_value(double gamma_a, double gamma_e) const
{
    const int na = 2 * n_h_, nb = 2 * n_v_;
    std::vector<cd> ea(static_cast<size_t>(na)), eb(static_cast<size_t>(nb));
    for (int i = 0; i < na; ++i)
        ea[static_cast<size_t>(i)] = std::polar(1.0, -2.0 * (i - n_h_ + 1) * gamma_a);
    for (int j = 0; j < nb; ++j)
        eb[static_cast<size_t>(j)] = std::polar(1.0, -2.0 * (j - n_v_) * gamma_e);
    CMat C(V1_.rows(), V1_.cols());
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j)
        {
            Eigen::Index r = i * nb + j;
            C.row(r) = V1_.row(r) - (ea[static_cast<size_t>(i)] * eb[static_cast<size_t>(j)]) * U3_.row(r);
        }
    return spectrum_log(C, mode_, W_);
}

RangeSpectrum::RangeSpectrum(const SubspaceBundle &sub, const MetasurfaceLayout &layout, const SpectrumOptions &opt)
    : n_h_(layout.n_h), n_v_(layout.n_v), mode_(opt.mode), U1_(sub.U1), U2_(sub.U2), W_(opt.W)
{
    if (mode_ == SpectrumMode::FixedWeight && (W_.rows() != sub.K || W_.cols() != sub.U1.rows()))
        throw DomainError("RangeSpectrum: weight matrix must be K x 4 n_h n_v");
}

double RangeSpectrum::log_value(double gamma_e, double beta_e, double alpha) const
{
    const int na = 2 * n_h_, nb = 2 * n_v_;
    std::vector<cd> ea(static_cast<size_t>(na)), eb(static_cast<size_t>(nb));
    for (int i = 0; i < na; ++i)
        ea[static_cast<size_t>(i)] = std::polar(1.0, (i - n_h_) * alpha + gamma_e);
    for (int j = 0; j < nb; ++j)
        eb[static_cast<size_t>(j)] = std::polar(1.0, (2 * (j - n_v_) + 1) * beta_e);
    CMat C(U1_.rows(), U1_.cols());
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j)
        {
            Eigen::Index r = i * nb + j;
            C.row(r) = U1_.row(r) - (ea[static_cast<size_t>(i)] * eb[static_cast<size_t>(j)]) * U2_.row(r);
        }
    return spectrum_log(C, mode_, W_);
}

namespace
{
struct Candidate
{
    double theta, phi, value;
    size_t region;
};

std::vector<double> region_axis(const Interval &iv, double step)
{
    int n = std::max(2, static_cast<int>(std::ceil(iv.width() / step)) + 1);
    if (iv.width() <= 0.0)
        n = 1;
    return linspace(iv.lo, iv.hi, n);
}
} // namespace

std::vector<AnglePeak> support_peak_search(const AngleFunction &f, const AngularSupport &support, int K,
                                           const SpectrumOptions &opt, std::string *status)
{
    auto eval = [&](double th, double ph) {
        if (!placement_valid(th, ph))
            return -std::numeric_limits<double>::infinity();
        return f(th, ph);
    };

    std::vector<Candidate> cands;
    for (size_t r = 0; r < support.regions.size(); ++r)
    {
        const auto &reg = support.regions[r];
        auto th = region_axis(reg.azimuth, opt.angle_step);
        auto ph = region_axis(reg.elevation, opt.angle_step);
        const auto P = static_cast<Eigen::Index>(th.size()), Q = static_cast<Eigen::Index>(ph.size());
        RMat V(P, Q);
        for (Eigen::Index i = 0; i < P; ++i)
            for (Eigen::Index j = 0; j < Q; ++j)
                V(i, j) = eval(th[static_cast<size_t>(i)], ph[static_cast<size_t>(j)]);
        for (Eigen::Index i = 0; i < P; ++i)
            for (Eigen::Index j = 0; j < Q; ++j)
            {
                double v = V(i, j);
                if (!std::isfinite(v))
                    continue;
                bool is_max = true;
                for (Eigen::Index di = -1; di <= 1 && is_max; ++di)
                    for (Eigen::Index dj = -1; dj <= 1; ++dj)
                    {
                        Eigen::Index ii = i + di, jj = j + dj;
                        if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= P || jj >= Q)
                            continue;
                        bool earlier = (ii < i) || (ii == i && jj < j);
                        if (V(ii, jj) > v || (earlier && V(ii, jj) == v))
                        {
                            is_max = false;
                            break;
                        }
                    }
                if (is_max)
                    cands.push_back({th[static_cast<size_t>(i)], ph[static_cast<size_t>(j)], v, r});
            }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate &a, const Candidate &b) { return a.value > b.value; });

    std::vector<AnglePeak> out;
    const double sep = 2.0 * opt.angle_step;
    for (const auto &c : cands)
    {
        if (static_cast<int>(out.size()) >= K)
            break;
        bool close = false;
        for (const auto &o : out)
            if (std::abs(o.theta - c.theta) < sep && std::abs(o.phi - c.phi) < sep)
                close = true;
        if (close)
            continue;

        const auto &reg = support.regions[c.region];
        double th = c.theta, ph = c.phi, best = c.value, s = 0.5 * opt.angle_step;
        while (s > opt.refine_tol)
        {
            double bt = th, bp = ph, bv = best;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                {
                    if (di == 0 && dj == 0)
                        continue;
                    double t2 = std::clamp(th + di * s, reg.azimuth.lo, reg.azimuth.hi);
                    double p2 = std::clamp(ph + dj * s, reg.elevation.lo, reg.elevation.hi);
                    double v = eval(t2, p2);
                    if (v > bv)
                    {
                        bt = t2;
                        bp = p2;
                        bv = v;
                    }
                }
            if (bv > best)
            {
                th = bt;
                ph = bp;
                best = bv;
            }
            else
                s *= 0.5;
        }
        out.push_back({th, ph, best});
    }
    if (static_cast<int>(out.size()) < K && status)
        *status = "angle search found " + std::to_string(out.size()) + " of " + std::to_string(K) + " peaks";
    return out;
}

std::vector<AnglePeak> angle_search(const AngleSpectrum &spec, const AngularSupport &support, int K, double k,
                                    double d, const SpectrumOptions &opt, std::string *status)
{
    const double kd = k * d;
    return support_peak_search(
        [&](double th, double ph) { return spec.log_value(-kd * std::sin(th), -kd * std::sin(ph)); }, support, K,
        opt, status);
}

RangeResult range_search(const RangeSpectrum &spec, double theta, double phi, double k, double d, double fresnel,
                         double range_min, double range_max, const SpectrumOptions &opt)
{
    if (!(range_min > 0.0) || !(range_max > range_min))
        throw DomainError("range_search: invalid range grid");
    const double ge = -k * d * std::sin(phi);
    const double cb = k * d * d * std::cos(phi) * std::cos(phi) / 2.0;
    const double ca = -k * d * d * std::sin(theta) * std::sin(phi);
    return range_profile_search([&](double r) { return spec.log_value(ge, cb / r, ca / r); }, fresnel, range_min,
                                range_max, opt);
}

RangeResult range_profile_search(const std::function<double(double)> &eval, double fresnel, double range_min,
                                 double range_max, const SpectrumOptions &opt)
{
    if (!(range_min > 0.0) || !(range_max > range_min))
        throw DomainError("range_search: invalid range grid");
    RangeResult out;
    const int n = std::max(opt.range_points, 3);
    const double l0 = std::log(range_min), l1 = std::log(range_max);
    out.grid.resize(static_cast<size_t>(n));
    out.log_values.resize(static_cast<size_t>(n));
    size_t best = 0;
    for (int i = 0; i < n; ++i)
    {
        double r = std::exp(l0 + (l1 - l0) * i / (n - 1));
        out.grid[static_cast<size_t>(i)] = r;
        out.log_values[static_cast<size_t>(i)] = eval(r);
        if (out.log_values[static_cast<size_t>(i)] > out.log_values[best])
            best = static_cast<size_t>(i);
    }
    std::vector<double> sorted = out.log_values;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    out.peak_ratio = std::exp(out.log_values[best] - sorted[static_cast<size_t>(n / 2)]);
    // A maximum on the far edge of the grid means the spectrum keeps rising toward r = inf.
    if (out.peak_ratio < opt.flat_ratio || best + 1 == static_cast<size_t>(n))
    {
        out.range = std::numeric_limits<double>::infinity();
        out.field = FieldClass::FarField;
        return out;
    }
    double lo = std::log(out.grid[best > 0 ? best - 1 : 0]);
    double hi = std::log(out.grid[std::min(best + 1, static_cast<size_t>(n - 1))]);
    auto res = boost::math::tools::brent_find_minima([&](double lr) { return -eval(std::exp(lr)); }, lo, hi, 40);
    double r = std::exp(res.first);
    if (-res.second < out.log_values[best])
        r = out.grid[best];
    out.range = r;
    out.field = classify_field(r, fresnel);
    return out;
}

ChannelEstimate estimate_from_subspace(const SubspaceBundle &subspace, const AngularSupport &support, int K,
                                       const SystemGeometry &geom, const SpectrumOptions &opt)
{
    ChannelEstimate est;
    est.support = support;
    est.subspace = subspace;
    if (support.empty())
    {
        est.status = "empty angular support";
        return est;
    }
    const auto &L = geom.surface;
    const double k = geom.k(), d = L.spacing_m;
    AngleSpectrum aspec(est.subspace, L, opt);
    RangeSpectrum rspec(est.subspace, L, opt);
    std::string st;
    auto peaks = angle_search(aspec, support, K, k, d, opt, &st);
    const double F = fresnel_threshold(L.aperture_h(), L.aperture_v(), geom.lambda());
    const double rmin = opt.range_min > 0.0 ? opt.range_min : 0.5 * L.aperture_h();
    const double rmax = opt.range_max > 0.0 ? opt.range_max : 4.0 * F;
    for (const auto &pk : peaks)
    {
        SourceEstimate s;
        s.theta = pk.theta;
        s.phi = pk.phi;
        s.angle_log_peak = pk.log_value;
        auto rr = range_search(rspec, pk.theta, pk.phi, k, d, F, rmin, rmax, opt);
        s.range = rr.range;
        s.field = rr.field;
        s.range_peak_ratio = rr.peak_ratio;
        est.sources.push_back(s);
    }
    est.status = st.empty() ? est.subspace.status : st;
    return est;
}

ChannelEstimate estimate_from_snapshots(const CMat &X, const AngularSupport &support, int K,
                                        const SystemGeometry &geom, const SpectrumOptions &opt,
                                        const Whitener *whitener)
{
    if (support.empty())
    {
        ChannelEstimate est;
        est.support = support;
        est.status = "empty angular support";
        return est;
    }
    return estimate_from_subspace(signal_subspace_from_snapshots(X, K, geom.surface, whitener), support, K, geom,
                                  opt);
}

} // namespace mela
