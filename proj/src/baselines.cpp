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

#include "mela/baselines.hpp"
#include "mela/numerics.hpp"
#include "mela/steering.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace mela
{

int smoothing_window_count(const MetasurfaceLayout &layout, int sub_h, int sub_v)
{
    if (sub_h < 1 || sub_v < 1 || sub_h > layout.rows() || sub_v > layout.cols())
        throw DomainError("smoothing window does not fit the lattice");
    return (layout.rows() - sub_h + 1) * (layout.cols() - sub_v + 1);
}

CMat smoothed_covariance(const CMat &Sigma, const MetasurfaceLayout &layout, int sub_h, int sub_v,
                         bool forward_backward)
{
    const int wins = smoothing_window_count(layout, sub_h, sub_v);
    if (Sigma.rows() != layout.count() || Sigma.cols() != layout.count())
        throw DomainError("smoothed_covariance: covariance size does not match the lattice");
    const int L = sub_h * sub_v, cols = layout.cols();
    std::vector<int> idx(static_cast<size_t>(L));
    CMat R = CMat::Zero(L, L);
    for (int oy = 0; oy + sub_h <= layout.rows(); ++oy)
        for (int oz = 0; oz + sub_v <= cols; ++oz)
        {
            for (int a = 0; a < sub_h; ++a)
                for (int b = 0; b < sub_v; ++b)
                    idx[static_cast<size_t>(a * sub_v + b)] = (oy + a) * cols + oz + b;
            R += Sigma(idx, idx);
        }
    R /= static_cast<double>(wins);
    if (forward_backward)
    {
        CMat Jc = R.conjugate().colwise().reverse().rowwise().reverse();
        R = 0.5 * (R + Jc);
    }
    return R;
}

CVec window_manifold(double gamma_a, double gamma_e, double beta_a, double beta_e, int sub_h, int sub_v)
{
    CVec v(sub_h * sub_v);
    for (int i = 0; i < sub_h; ++i)
        for (int j = 0; j < sub_v; ++j)
        {
            double a = i - 0.5 * (sub_h - 1), b = j - 0.5 * (sub_v - 1);
            v(i * sub_v + j) = std::polar(1.0, a * gamma_a + b * gamma_e + a * a * beta_a + b * b * beta_e);
        }
    return v;
}

std::vector<ParamEstimate> modified_music(const CMat &X, int K, const AngularSupport &support,
                                          const SystemGeometry &geom, const MusicOptions &opt)
{
    const auto &lay = geom.surface;
    const int wins = smoothing_window_count(lay, opt.sub_h, opt.sub_v);
    const int L = opt.sub_h * opt.sub_v;
    if (K < 1 || K >= L || wins < K)
        throw DomainError("modified_music: insufficient windows or subarray size for rank K");

    CMat R = smoothed_covariance(sample_covariance(X), lay, opt.sub_h, opt.sub_v, opt.forward_backward);
    CMat En = hermitian_eig(R).vectors.rightCols(L - K);

    const double k = geom.k(), d = lay.spacing_m;
    auto music = [&](double ga, double ge, double ba, double be) {
        double p = (En.adjoint() * window_manifold(ga, ge, ba, be, opt.sub_h, opt.sub_v)).squaredNorm() / L;
        return -std::log(std::max(p, 1e-300));
    };

    auto peaks = support_peak_search(
        [&](double th, double ph) { return music(-k * d * std::sin(th), -k * d * std::sin(ph), 0.0, 0.0); },
        support, K, opt.search);

    const double F = fresnel_threshold(lay.aperture_h(), lay.aperture_v(), geom.lambda());
    const double rmin = opt.search.range_min > 0.0 ? opt.search.range_min : 0.5 * lay.aperture_h();
    const double rmax = opt.search.range_max > 0.0 ? opt.search.range_max : 4.0 * F;
    std::vector<ParamEstimate> out;
    for (const auto &pk : peaks)
    {
        const double ga = -k * d * std::sin(pk.theta), ge = -k * d * std::sin(pk.phi);
        const double ca = k * d * d * std::pow(std::cos(pk.theta), 2) / 2.0;
        const double ce = k * d * d * std::pow(std::cos(pk.phi), 2) / 2.0;
        auto rr = range_profile_search([&](double r) { return music(ga, ge, ca / r, ce / r); }, F, rmin, rmax,
                                       opt.search);
        out.push_back({pk.theta, pk.phi, rr.range, rr.field});
    }
    return out;
}

PolarDictionary build_polar_dictionary(const AngularSupport &support, const SystemGeometry &geom,
                                       const PolarDictionaryOptions &opt)
{
    if (!(opt.step > 0.0))
        throw DomainError("build_polar_dictionary: step must be positive");
    std::set<std::pair<long, long>> grid;
    const long lim = static_cast<long>(std::floor(0.5 * pi / opt.step));
    for (const auto &reg : support.regions)
    {
        long t0 = std::max(-lim, static_cast<long>(std::floor((reg.azimuth.lo - opt.margin) / opt.step)));
        long t1 = std::min(lim, static_cast<long>(std::ceil((reg.azimuth.hi + opt.margin) / opt.step)));
        long p0 = std::max(-lim, static_cast<long>(std::floor((reg.elevation.lo - opt.margin) / opt.step)));
        long p1 = std::min(lim, static_cast<long>(std::ceil((reg.elevation.hi + opt.margin) / opt.step)));
        for (long i = t0; i <= t1; ++i)
            for (long j = p0; j <= p1; ++j)
                if (placement_valid(i * opt.step, j * opt.step))
                    grid.insert({i, j});
    }

    const auto &lay = geom.surface;
    const double F = fresnel_threshold(lay.aperture_h(), lay.aperture_v(), geom.lambda());
    std::vector<double> rings;
    for (double f : opt.ring_fractions)
        rings.push_back(f * F);
    rings.push_back(std::numeric_limits<double>::infinity());

    PolarDictionary dict;
    const double scale = 1.0 / std::sqrt(static_cast<double>(lay.count()));
    dict.atoms.resize(lay.count(), static_cast<Eigen::Index>(grid.size() * rings.size()));
    Eigen::Index col = 0;
    for (const auto &[i, j] : grid)
    {
        double th = i * opt.step, ph = j * opt.step;
        for (double r : rings)
        {
            dict.atoms.col(col++) = scale * (std::isinf(r) ? steering_far(th, ph, lay, geom.k())
                                                           : steering_exact(r, th, ph, lay, geom.k()));
            dict.labels.push_back({th, ph, r});
        }
    }
    return dict;
}

double dictionary_coherence(const PolarDictionary &dict)
{
    CMat G = dict.atoms.adjoint() * dict.atoms;
    G.diagonal().setZero();
    return G.cwiseAbs().maxCoeff();
}

OmpResult hf_omp(const CMat &Y, const CMat &sensing, const PolarDictionary &dict, int K)
{
    if (dict.atoms.cols() == 0)
        throw DomainError("hf_omp: empty dictionary");
    if (K < 1 || K > dict.atoms.cols())
        throw DomainError("hf_omp: invalid sparsity");
    const CMat Phi = sensing.size() == 0 ? dict.atoms : CMat(sensing * dict.atoms);
    if (Phi.rows() != Y.rows())
        throw DomainError("hf_omp: measurement size mismatch");
    RVec norms = Phi.colwise().norm().transpose();

    OmpResult out;
    CMat Rres = Y;
    out.residual_norms.push_back(Y.norm());
    std::vector<bool> used(static_cast<size_t>(Phi.cols()), false);
    for (int it = 0; it < K; ++it)
    {
        RVec score = (Phi.adjoint() * Rres).rowwise().squaredNorm();
        Eigen::Index best = -1;
        double bv = -1.0;
        for (Eigen::Index l = 0; l < Phi.cols(); ++l)
        {
            if (used[static_cast<size_t>(l)] || norms(l) == 0.0)
                continue;
            double v = score(l) / (norms(l) * norms(l));
            if (v > bv)
            {
                bv = v;
                best = l;
            }
        }
        if (best < 0)
            break;
        used[static_cast<size_t>(best)] = true;
        out.indices.push_back(static_cast<int>(best));
        CMat PhiS = Phi(Eigen::all, out.indices);
        out.coefficients = LeastSquares(PhiS).solve(Y);
        Rres = Y - PhiS * out.coefficients;
        out.residual_norms.push_back(Rres.norm());
    }
    for (int i : out.indices)
        out.labels.push_back(dict.labels[static_cast<size_t>(i)]);
    return out;
}

CMat subspace_measurements(const SubspaceBundle &sub)
{
    CMat Y = sub.Us;
    for (int i = 0; i < sub.K && i < sub.eigenvalues.size(); ++i)
        Y.col(i) *= std::sqrt(std::max(sub.eigenvalues(i), 0.0));
    return Y;
}

} // namespace mela
