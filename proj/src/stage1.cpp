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

#include <algorithm>
#include <cmath>

namespace mela
{
bool AngularSupport::covers(double theta, double phi) const
{
    for (const auto &r : regions)
        if (r.azimuth.contains(theta) && r.elevation.contains(phi))
            return true;
    return false;
}

std::vector<double> linspace(double lo, double hi, int count)
{
    if (count < 1)
        throw DomainError("linspace: count must be positive");
    std::vector<double> v(static_cast<size_t>(count));
    if (count == 1)
    {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < count; ++i)
        v[static_cast<size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    return v;
}

CVec stage1_phase(double theta_p, double phi_q, const CVec &h_colsum, const MetasurfaceLayout &layout, double k)
{
    if (h_colsum.size() != layout.count())
        throw DomainError("stage1_phase: column-sum length does not match the metasurface");
    const double d = layout.spacing_m, sa = std::sin(theta_p), se = std::sin(phi_q);
    CVec w(layout.count());
    Eigen::Index n = 0;
    for (int ny = -layout.n_h; ny <= layout.n_h; ++ny)
        for (int nz = -layout.n_v; nz <= layout.n_v; ++nz, ++n)
        {
            if (std::abs(h_colsum(n)) == 0.0)
                throw DomainError("stage1_phase: column sum of H vanishes at cell " + std::to_string(n));
            w(n) = std::polar(1.0, k * d * (sa * ny + se * nz) - std::arg(h_colsum(n)));
        }
    return w;
}

namespace
{
// A(p, i) = e^{j k d sin(angle_p) (i - half)}
CMat scan_kernel(const std::vector<double> &angles, int half, double kd)
{
    CMat A(static_cast<Eigen::Index>(angles.size()), 2 * half + 1);
    for (size_t p = 0; p < angles.size(); ++p)
        for (int i = -half; i <= half; ++i)
            A(static_cast<Eigen::Index>(p), i + half) = std::polar(1.0, kd * std::sin(angles[p]) * i);
    return A;
}
} // namespace

ScanGrid stage1_scan(const CMat &H, const CVec &x, const std::vector<double> &azimuth,
                     const std::vector<double> &elevation, double sigma, Rng &rng, const MetasurfaceLayout &layout,
                     double k)
{
    if (H.cols() != layout.count() || x.size() != layout.count())
        throw DomainError("stage1_scan: dimension mismatch");
    CVec h = H.colwise().sum().transpose();
    // With the compensating phases, f(p, q) = sum_n |h_n| x_n e^{jkd(sin(theta_p) n_y + sin(phi_q) n_z)}.
    CMat W(layout.rows(), layout.cols());
    for (Eigen::Index n = 0; n < x.size(); ++n)
    {
        if (std::abs(h(n)) == 0.0)
            throw DomainError("stage1_scan: column sum of H vanishes at cell " + std::to_string(n));
        W(n / layout.cols(), n % layout.cols()) = std::abs(h(n)) * x(n);
    }
    const double kd = k * layout.spacing_m;
    ScanGrid g;
    g.azimuth = azimuth;
    g.elevation = elevation;
    g.f = scan_kernel(azimuth, layout.n_h, kd) * W * scan_kernel(elevation, layout.n_v, kd).transpose();
    if (sigma > 0.0)
    {
        const auto M = H.rows();
        for (Eigen::Index p = 0; p < g.f.rows(); ++p)
            for (Eigen::Index q = 0; q < g.f.cols(); ++q)
                for (Eigen::Index m = 0; m < M; ++m)
                    g.f(p, q) += rng.complex_normal(sigma * sigma);
    }
    return g;
}

double stage1_signal_power(const CMat &H, const CVec &x, const std::vector<double> &azimuth,
                           const std::vector<double> &elevation, const MetasurfaceLayout &layout, double k)
{
    CVec h = H.colwise().sum().transpose();
    const Eigen::Index L = static_cast<Eigen::Index>(azimuth.size() * elevation.size());
    CMat V(x.size(), L);
    Eigen::Index l = 0;
    for (double th : azimuth)
        for (double ph : elevation)
            V.col(l++) = stage1_phase(th, ph, h, layout, k).cwiseProduct(x);
    return (H * V).squaredNorm() / static_cast<double>(L * H.rows());
}

namespace
{
// Grow from index i0 along `vals` while >= thr; return the interpolated crossing on each side.
Interval grow_interval(const std::vector<double> &axis, const std::vector<double> &vals, size_t i0, double thr)
{
    Interval out;
    size_t i = i0;
    while (i > 0 && vals[i - 1] >= thr)
        --i;
    if (i == 0)
        out.lo = axis.front();
    else
    {
        double t = (thr - vals[i - 1]) / (vals[i] - vals[i - 1]);
        out.lo = axis[i - 1] + t * (axis[i] - axis[i - 1]);
    }
    size_t j = i0;
    while (j + 1 < vals.size() && vals[j + 1] >= thr)
        ++j;
    if (j + 1 == vals.size())
        out.hi = axis.back();
    else
    {
        double t = (vals[j] - thr) / (vals[j] - vals[j + 1]);
        out.hi = axis[j] + t * (axis[j + 1] - axis[j]);
    }
    return out;
}

std::vector<Interval> merge_intervals(std::vector<Interval> v)
{
    std::sort(v.begin(), v.end(), [](const Interval &a, const Interval &b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const auto &iv : v)
    {
        if (!out.empty() && iv.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}
} // namespace

AngularSupport extract_support(const ScanGrid &grid, const SupportOptions &opt)
{
    if (!(opt.decay_db > 0.0))
        throw DomainError("extract_support: decay must be positive");
    const Eigen::Index P = grid.f.rows(), Q = grid.f.cols();
    RMat A = grid.f.cwiseAbs();
    std::vector<double> all(A.data(), A.data() + A.size());
    std::nth_element(all.begin(), all.begin() + static_cast<long>(all.size() / 2), all.end());
    const double floor = opt.floor_factor * all[all.size() / 2];

    struct Peak
    {
        Eigen::Index p, q;
        double v;
    };
    std::vector<Peak> peaks;
    for (Eigen::Index p = 0; p < P; ++p)
        for (Eigen::Index q = 0; q < Q; ++q)
        {
            double v = A(p, q);
            if (!(v > floor))
                continue;
            bool is_max = true;
            for (Eigen::Index dp = -1; dp <= 1 && is_max; ++dp)
                for (Eigen::Index dq = -1; dq <= 1; ++dq)
                {
                    if (dp == 0 && dq == 0)
                        continue;
                    Eigen::Index pp = p + dp, qq = q + dq;
                    if (pp < 0 || qq < 0 || pp >= P || qq >= Q)
                        continue;
                    // Plateaus: the first sample in scan order wins.
                    bool earlier = (pp < p) || (pp == p && qq < q);
                    if (A(pp, qq) > v || (earlier && A(pp, qq) == v))
                    {
                        is_max = false;
                        break;
                    }
                }
            if (is_max)
                peaks.push_back({p, q, v});
        }
    std::sort(peaks.begin(), peaks.end(), [](const Peak &a, const Peak &b) { return a.v > b.v; });
    if (opt.max_peaks > 0 && peaks.size() > static_cast<size_t>(opt.max_peaks))
        peaks.resize(static_cast<size_t>(opt.max_peaks));

    AngularSupport s;
    if (peaks.empty())
    {
        s.ok = false;
        s.status = "no peak above the noise floor";
        return s;
    }
    const double ratio = std::pow(10.0, -opt.decay_db / 20.0);
    std::vector<Interval> az, el;
    for (const auto &pk : peaks)
    {
        std::vector<double> row(static_cast<size_t>(P)), col(static_cast<size_t>(Q));
        for (Eigen::Index p = 0; p < P; ++p)
            row[static_cast<size_t>(p)] = A(p, pk.q);
        for (Eigen::Index q = 0; q < Q; ++q)
            col[static_cast<size_t>(q)] = A(pk.p, q);
        SupportRegion r;
        r.azimuth = grow_interval(grid.azimuth, row, static_cast<size_t>(pk.p), pk.v * ratio);
        r.elevation = grow_interval(grid.elevation, col, static_cast<size_t>(pk.q), pk.v * ratio);
        r.peak_azimuth = grid.azimuth[static_cast<size_t>(pk.p)];
        r.peak_elevation = grid.elevation[static_cast<size_t>(pk.q)];
        r.peak_value = pk.v;
        s.regions.push_back(r);
        az.push_back(r.azimuth);
        el.push_back(r.elevation);
    }
    s.azimuth = merge_intervals(az);
    s.elevation = merge_intervals(el);
    return s;
}

} // namespace mela
