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

#include "mela/em_channel.hpp"
#include "mela/numerics.hpp"
#include "mela/steering.hpp"

#include <algorithm>
#include <cmath>

namespace mela
{
namespace
{
const Vec3 e_z(0.0, 0.0, 1.0);

void check_distinct(const Vec3 &a, const Vec3 &b, const char *what)
{
    if ((a - b).norm() <= 1e-15 * std::max({a.norm(), b.norm(), 1.0}))
        throw DomainError(std::string(what) + ": coincident points");
}
} // namespace

IncidentField incident_fields(const Vec3 &source, const Vec3 &point, double k, double eta)
{
    check_distinct(source, point, "incident_fields");
    Vec3 d = source - point;
    double R = d.norm();
    Vec3 Rt = d / R;
    Vec3 e_phi = e_z.cross(Rt);
    Vec3 e_theta = e_phi.cross(Rt);
    cd g = std::polar(1.0, k * R) / (4.0 * pi * R);
    return {(g * eta) * e_theta.cast<cd>(), g * e_phi.cast<cd>()};
}

double cos_phi_nk(const Vec3 &source, const Vec3 &point)
{
    Vec3 Rt = (source - point).normalized();
    double proj = std::hypot(Rt.x(), Rt.y());
    if (proj < 1e-12)
        return 0.0;
    return Rt.x() / proj;
}

cd equivalent_current_amplitude(const Vec3 &source, const Vec3 &point, cd gamma, double k)
{
    check_distinct(source, point, "equivalent_current_amplitude");
    double R = (source - point).norm();
    return (1.0 + gamma) / (4.0 * pi) * std::polar(1.0, k * R) / R * cos_phi_nk(source, point);
}

cd receiver_factor(const Vec3 &d_mn, double k, double d_r)
{
    Vec3 v = d_mn.normalized();
    return I * (d_r * d_r / (4.0 * pi * k)) * sinc(k * v.y() * d_r / 2.0) * sinc(k * v.z() * d_r / 2.0);
}

cd cell_factor(const Vec3 &t_n, const Vec3 &d_c, const Vec3 &source, double k, double d_t, cd gamma)
{
    check_distinct(source, t_n, "cell_factor");
    Vec3 d_cn = t_n - d_c;
    Vec3 u = d_cn.normalized() - (source - t_n).normalized();
    return (1.0 + gamma) * (d_t * d_t / (4.0 * pi)) * sinc(k * u.y() * d_t / 2.0) * sinc(k * u.z() * d_t / 2.0) *
           cos_phi_nk(source, t_n);
}

namespace
{
Vec3 cell_position(const MetasurfaceLayout &s, int n)
{
    auto [ny, nz] = element_index(s, n);
    return {0.0, ny * s.spacing_m, nz * s.spacing_m};
}
} // namespace

UnitCellResponse unit_cell_response(const SystemGeometry &g, int m, int n, const Vec3 &source)
{
    Vec3 t = cell_position(g.surface, n);
    Vec3 d_mn = t - g.receiver.position(m);
    return {receiver_factor(d_mn, g.k(), g.receiver.element_side_m),
            cell_factor(t, g.receiver.center_m, source, g.k(), g.surface.cell_side_m, g.surface.transmission)};
}

cd field_closed_form(const SystemGeometry &g, int m, int n, const Vec3 &source, double omega_n)
{
    Vec3 t = cell_position(g.surface, n);
    Vec3 d_mn = t - g.receiver.position(m);
    double a = d_mn.norm(), b = (source - t).norm();
    auto r = unit_cell_response(g, m, n, source);
    return r.a_mn * r.b_nk * std::polar(1.0 / (a * b), g.k() * (a + b) + omega_n);
}

namespace
{
cd field_exact_at_order(const SystemGeometry &g, const Vec3 &t, const Vec3 &r_m, const Vec3 &source, double omega_n,
                        int order)
{
    const double k = g.k();
    const Vec3 d_mn = t - r_m;
    const double a = d_mn.norm(), b = (source - t).norm();
    const Vec3 v = d_mn / a;
    const Vec3 u = v - (source - t) / b;
    const double ht = 0.5 * g.surface.cell_side_m, hr = 0.5 * g.receiver.element_side_m;
    // Apertures lie in the yz-plane: the local offset is [0, du, dv].
    cd It = quad2d([&](double du, double dv) { return std::polar(1.0, k * (u.y() * du + u.z() * dv)); }, -ht, ht,
                   -ht, ht, order);
    cd Ir = quad2d([&](double du, double dv) { return std::polar(1.0, -k * (v.y() * du + v.z() * dv)); }, -hr, hr,
                   -hr, hr, order);
    cd pref = (1.0 / (4.0 * pi * k)) * I * (1.0 + g.surface.transmission) / (4.0 * pi) *
              std::polar(1.0 / (a * b), k * (a + b) + omega_n) * cos_phi_nk(source, t);
    return pref * It * Ir;
}
} // namespace

cd field_exact(const SystemGeometry &g, int m, int n, const Vec3 &source, double omega_n, const QuadratureOptions &opt)
{
    Vec3 t = cell_position(g.surface, n);
    Vec3 r_m = g.receiver.position(m);
    check_distinct(source, t, "field_exact");
    check_distinct(r_m, t, "field_exact");
    cd val = field_exact_at_order(g, t, r_m, source, omega_n, opt.order);
    if (opt.verify)
    {
        cd ref = field_exact_at_order(g, t, r_m, source, omega_n, 2 * opt.order);
        if (std::abs(ref - val) > 1e-6 * std::abs(ref))
            throw NumericalError("field_exact: quadrature did not converge under order doubling");
    }
    return val;
}

cd field_aperture_integral(const SystemGeometry &g, int m, int n, const Vec3 &source, double omega_n, int order)
{
    const Vec3 t = cell_position(g.surface, n), r_m = g.receiver.position(m);
    check_distinct(source, t, "field_aperture_integral");
    check_distinct(r_m, t, "field_aperture_integral");
    const double k = g.k(), ht = 0.5 * g.surface.cell_side_m, hr = 0.5 * g.receiver.element_side_m;
    const auto &rule = gauss_legendre(order);
    const size_t q = rule.nodes.size();
    cd sum = 0.0;
    for (size_t a = 0; a < q; ++a)
        for (size_t b = 0; b < q; ++b)
        {
            const Vec3 tp = t + Vec3(0.0, ht * rule.nodes[a], ht * rule.nodes[b]);
            const double wt = rule.weights[a] * rule.weights[b] * ht * ht;
            const double rs = (source - tp).norm();
            const cd J = (1.0 + g.surface.transmission) / (4.0 * pi) * std::polar(1.0 / rs, k * rs) *
                         cos_phi_nk(source, tp);
            cd inner = 0.0;
            for (size_t c = 0; c < q; ++c)
                for (size_t e = 0; e < q; ++e)
                {
                    const Vec3 rp = r_m + Vec3(0.0, hr * rule.nodes[c], hr * rule.nodes[e]);
                    const double dist = (tp - rp).norm();
                    inner += rule.weights[c] * rule.weights[e] * std::polar(1.0 / dist, k * dist);
                }
            sum += wt * J * inner * hr * hr;
        }
    return I / (4.0 * pi * k) * std::polar(1.0, omega_n) * sum;
}

CVec received_exact(const SystemGeometry &g, const std::vector<Vec3> &sources, const CVec &phase, const CVec &s,
                    const QuadratureOptions &opt)
{
    const int M = g.receiver.count(), N = g.surface.count();
    if (phase.size() != N || s.size() != static_cast<Eigen::Index>(sources.size()))
        throw DomainError("received_exact: dimension mismatch");
    CVec y = CVec::Zero(M);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
        {
            double w = std::arg(phase(n));
            for (size_t kk = 0; kk < sources.size(); ++kk)
                y(m) += field_exact(g, m, n, sources[kk], w, opt) * std::abs(phase(n)) * s(static_cast<Eigen::Index>(kk));
        }
    return y;
}

CMat build_H(const SystemGeometry &g)
{
    const int M = g.receiver.count(), N = g.surface.count();
    const double k = g.k(), dr = g.receiver.element_side_m;
    auto cells = element_positions(g.surface);
    CMat H(M, N);
    for (int m = 0; m < M; ++m)
    {
        Vec3 rm = g.receiver.position(m);
        for (int n = 0; n < N; ++n)
        {
            Vec3 d_mn = cells[static_cast<size_t>(n)] - rm;
            double a = d_mn.norm();
            if (a == 0.0)
                throw DomainError("build_H: receiver element coincides with a cell");
            H(m, n) = receiver_factor(d_mn, k, dr) * std::polar(1.0 / a, k * a);
        }
    }
    return H;
}

CMat build_G(const SystemGeometry &g, const std::vector<Vec3> &sources)
{
    const int N = g.surface.count();
    const double k = g.k();
    auto cells = element_positions(g.surface);
    CMat G(N, static_cast<Eigen::Index>(sources.size()));
    for (size_t kk = 0; kk < sources.size(); ++kk)
        for (int n = 0; n < N; ++n)
        {
            const Vec3 &t = cells[static_cast<size_t>(n)];
            double b = (sources[kk] - t).norm();
            if (b == 0.0)
                throw DomainError("build_G: source coincides with a cell");
            G(n, static_cast<Eigen::Index>(kk)) =
                cell_factor(t, g.receiver.center_m, sources[kk], k, g.surface.cell_side_m, g.surface.transmission) *
                std::polar(1.0 / b, k * b);
        }
    return G;
}

CMat build_G_uniform_amplitude(const SystemGeometry &g, const std::vector<SourcePlacement> &sources)
{
    const double k = g.k();
    CMat G(g.surface.count(), static_cast<Eigen::Index>(sources.size()));
    for (size_t kk = 0; kk < sources.size(); ++kk)
    {
        const auto &s = sources[kk];
        Vec3 p = source_to_cartesian(s);
        cd B = cell_factor(Vec3::Zero(), g.receiver.center_m, p, k, g.surface.cell_side_m, g.surface.transmission);
        G.col(static_cast<Eigen::Index>(kk)) =
            (B / s.range_m) * steering_exact(s.range_m, s.azimuth_rad, s.elevation_rad, g.surface, k);
    }
    return G;
}

CMat DecoupledChannel::assemble() const
{
    return h_r.asDiagonal() * C * h_t.asDiagonal();
}

DecoupledChannel build_H_decoupled(const SystemGeometry &g)
{
    const int M = g.receiver.count(), N = g.surface.count();
    const double k = g.k(), dr = g.receiver.element_side_m;
    const Vec3 dc = g.receiver.center_m;
    const double dcn = dc.norm();
    if (!(dcn > 0.0))
        throw DomainError("build_H_decoupled: receiver center at the origin");
    auto cells = element_positions(g.surface);
    DecoupledChannel out;
    out.h_r.resize(M);
    out.h_t.resize(N);
    out.C.resize(M, N);
    for (int m = 0; m < M; ++m)
        out.h_r(m) = std::polar(1.0, k * (dc + g.receiver.offsets_m[static_cast<size_t>(m)]).norm());
    for (int n = 0; n < N; ++n)
        out.h_t(n) = std::polar(1.0, k * (dc - cells[static_cast<size_t>(n)]).norm());
    for (int m = 0; m < M; ++m)
    {
        Vec3 rm = g.receiver.position(m);
        for (int n = 0; n < N; ++n)
        {
            Vec3 d_mn = cells[static_cast<size_t>(n)] - rm;
            out.C(m, n) = receiver_factor(d_mn, k, dr) * std::polar(1.0 / d_mn.norm(), -k * dcn);
        }
    }
    return out;
}

CMat build_H_farfield(const SystemGeometry &g)
{
    const int M = g.receiver.count(), N = g.surface.count();
    const double k = g.k(), dr = g.receiver.element_side_m;
    const Vec3 dc = g.receiver.center_m;
    const double dcn = dc.norm();
    if (!(dcn > 0.0))
        throw DomainError("build_H_farfield: receiver center at the origin");
    const Vec3 dh = dc / dcn;
    cd Ac = I * (dr * dr / (4.0 * pi * k)) * sinc(k * dr * dh.y() / 2.0) * sinc(k * dr * dh.z() / 2.0);
    auto cells = element_positions(g.surface);
    CVec hM(M), hN(N);
    for (int m = 0; m < M; ++m)
        hM(m) = std::polar(1.0, k * dh.dot(g.receiver.offsets_m[static_cast<size_t>(m)]));
    for (int n = 0; n < N; ++n)
        hN(n) = std::polar(1.0, -k * dh.dot(cells[static_cast<size_t>(n)]));
    return (Ac / dcn) * hM * hN.transpose();
}

CVec received_signal(const CMat &H, const CVec &phase, const CMat &G, const CVec &s, double sigma, Rng &rng)
{
    if (H.cols() != phase.size() || G.rows() != phase.size() || G.cols() != s.size())
        throw DomainError("received_signal: dimension mismatch");
    CVec y = H * (phase.asDiagonal() * (G * s));
    if (sigma > 0.0)
        for (Eigen::Index i = 0; i < y.size(); ++i)
            y(i) += rng.complex_normal(sigma * sigma);
    return y;
}

double model_correlation(const CVec &a, const CVec &b)
{
    if (a.size() != b.size())
        throw DomainError("model_correlation: length mismatch");
    double na = a.squaredNorm(), nb = b.squaredNorm();
    if (!(na > 0.0) || !(nb > 0.0))
        throw DomainError("model_correlation: zero-norm input");
    return std::norm(a.dot(b)) / (na * nb);
}

std::vector<double> dof_spectrum(const CMat &H)
{
    Eigen::BDCSVD<CMat> svd(H);
    RVec s = svd.singularValues();
    std::vector<double> out(static_cast<size_t>(s.size()));
    for (Eigen::Index i = 0; i < s.size(); ++i)
        out[static_cast<size_t>(i)] = s(i) * s(i);
    std::sort(out.begin(), out.end(), std::greater<>());
    if (out.empty() || !(out.front() > 0.0))
        throw DomainError("dof_spectrum: zero matrix");
    double top = out.front();
    for (double &v : out)
        v /= top;
    return out;
}

double noise_sigma(double signal_power, double snr_db)
{
    return std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
}

} // namespace mela
