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

#include "mela/harness.hpp"

#include <fmt/format.h>

#include <cmath>

namespace mela
{

namespace
{

struct Suite
{
    std::vector<CheckResult> out;
    void check(const std::string &name, double err, double tol)
    {
        out.push_back({name, err <= tol, fmt::format("error {:.3e}, tolerance {:.1e}", err, tol)});
    }
    void flag(const std::string &name, bool ok, const std::string &detail) { out.push_back({name, ok, detail}); }
};

CMat random_matrix(Eigen::Index r, Eigen::Index c, Rng &rng)
{
    CMat A(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i)
            A(i, j) = rng.complex_normal(1.0);
    return A;
}

void steering_checks(Suite &s, Rng &rng)
{
    SystemGeometry g = default_geometry(Vec3::Zero());
    const auto &L = g.surface;
    const double k = g.k(), d = L.spacing_m;
    auto s1 = selector_indices(1, L.n_h, L.n_v), s2 = selector_indices(2, L.n_h, L.n_v),
         s3 = selector_indices(3, L.n_h, L.n_v);
    double e_angle = 0.0, e_range = 0.0, e_conj = 0.0, e_far = 0.0, e_unit = 0.0;
    for (int t = 0; t < 20; ++t)
    {
        double th = rng.uniform(-1.0, 1.0), ph = rng.uniform(-0.5, 0.5);
        if (!placement_valid(th, ph))
            continue;
        double r = rng.uniform(0.5, 10.0);
        auto p = params_from_geometry(r, th, ph, k, d);
        CVec a = steering_near(p, L, k);
        CVec a1 = a(s1), a2 = a(s2), a3 = a(s3);
        CVec lhs = a1.reverse();
        e_angle = std::max(e_angle, (lhs - rotation_D(p.gamma_a, p.gamma_e, L.n_h, L.n_v).cwiseProduct(a3))
                                        .cwiseAbs()
                                        .maxCoeff());
        e_range = std::max(e_range,
                           (a1 - std::polar(1.0, p.gamma_e) * rotation_E(p.beta_e, p.alpha, L.n_h, L.n_v).cwiseProduct(a2))
                               .cwiseAbs()
                               .maxCoeff());
        CVec f = steering_far(th, ph, L, k), fm = steering_far(-th, -ph, L, k);
        e_conj = std::max(e_conj, (f.conjugate() - fm).cwiseAbs().maxCoeff());
        auto pf = params_from_geometry(std::numeric_limits<double>::infinity(), th, ph, k, d);
        e_far = std::max(e_far, (steering_near(pf, L, k) - f).cwiseAbs().maxCoeff());
        e_unit = std::max(e_unit, (a.cwiseAbs().array() - 1.0).abs().maxCoeff());
    }
    s.check("angle rotation identity J a1 = D a3", e_angle, 1e-10);
    s.check("range rotation identity a1 = e^{j gamma_e} E a2", e_range, 1e-10);
    s.check("far steering conjugate symmetry", e_conj, 1e-12);
    s.check("near steering reduces to far at infinite range", e_far, 1e-12);
    s.check("steering entries unit modulus", e_unit, 1e-12);

    bool sel_ok = true;
    for (int i = 1; i <= 3; ++i)
    {
        RMat J = selector_matrix(i, L.n_h, L.n_v);
        sel_ok = sel_ok && J.rows() == 4 * L.n_h * L.n_v && (J.rowwise().sum().array() == 1.0).all() &&
                 (J.colwise().sum().array() <= 1.0).all();
    }
    s.flag("selectors pick distinct cells, one per row", sel_ok, "4 n_h n_v rows each");

    double e_rot = 0.0;
    for (int t = 0; t < 10; ++t)
    {
        double ga = rng.uniform(-3.0, 3.0), ge = rng.uniform(-3.0, 3.0);
        CVec D = rotation_D(ga, ge, L.n_h, L.n_v), Dm = rotation_D(-ga, -ge, L.n_h, L.n_v);
        e_rot = std::max(e_rot, (D.cwiseProduct(Dm).array() - cd(1.0)).abs().maxCoeff());
        e_rot = std::max(e_rot, (D.cwiseAbs().array() - 1.0).abs().maxCoeff());
    }
    e_rot = std::max(e_rot, (rotation_D(0, 0, L.n_h, L.n_v).array() - cd(1.0)).abs().maxCoeff());
    s.check("rotation diagonals unit modulus and odd in gamma", e_rot, 1e-12);

    double e_inv = 0.0;
    for (int t = 0; t < 10; ++t)
    {
        double th = rng.uniform(-1.0, 1.0), ph = rng.uniform(-0.4, 0.4), r = rng.uniform(0.5, 10.0);
        if (!placement_valid(th, ph))
            continue;
        auto p = params_from_geometry(r, th, ph, k, d);
        auto [t2, p2] = angles_from_gammas(p.gamma_a, p.gamma_e, k, d);
        e_inv = std::max({e_inv, std::abs(t2 - th), std::abs(p2 - ph),
                          std::abs(range_from_beta_e(p.beta_e, ph, k, d) - r) / r});
    }
    s.check("steering parameter inverse maps", e_inv, 1e-9);
}

void linear_algebra_checks(Suite &s, Rng &rng)
{
    CMat A = random_matrix(60, 20, rng);
    CVec x = random_matrix(20, 1, rng);
    LeastSquares ls(A);
    s.check("least squares recovers consistent systems", (ls.solve(CVec(A * x)) - x).norm() / x.norm(), 1e-10);
    CMat P = ls.pseudo_inverse();
    s.check("pseudo-inverse is a left inverse", (P * A - CMat::Identity(20, 20)).norm(), 1e-10);

    CMat Bd = A;
    Bd.col(5) = Bd.col(3);
    bool threw = false;
    try
    {
        LeastSquares bad(Bd);
    }
    catch (const RankDeficientError &)
    {
        threw = true;
    }
    s.flag("least squares rejects rank-deficient systems", threw, "duplicated column");

    CMat R = random_matrix(40, 40, rng);
    CMat Hm = R + R.adjoint();
    auto e = hermitian_eig(Hm);
    double err = (Hm * e.vectors - e.vectors * e.values.asDiagonal()).norm() / Hm.norm();
    double orth = (e.vectors.adjoint() * e.vectors - CMat::Identity(40, 40)).norm();
    bool sorted = true;
    for (Eigen::Index i = 1; i < e.values.size(); ++i)
        sorted = sorted && e.values(i) <= e.values(i - 1);
    s.check("Hermitian eigendecomposition residual", err, 1e-12);
    s.check("Hermitian eigenvectors orthonormal", orth, 1e-12);
    s.flag("eigenvalues descending", sorted, "");
    auto top = hermitian_eig_top(Hm, 4);
    s.check("top eigenvalues agree with the full decomposition", (top.values - e.values.head(4)).cwiseAbs().maxCoeff(),
            1e-10);
}

void quadrature_checks(Suite &s)
{
    double worst = 0.0;
    for (int n : {2, 4, 8, 16})
    {
        const auto &rule = gauss_legendre(n);
        for (int deg = 0; deg <= 2 * n - 1; ++deg)
        {
            double q = 0.0;
            for (size_t i = 0; i < rule.nodes.size(); ++i)
                q += rule.weights[i] * std::pow(rule.nodes[i], deg);
            double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
            worst = std::max(worst, std::abs(q - exact));
        }
    }
    s.check("Gauss-Legendre exact to degree 2n-1", worst, 1e-12);

    SystemGeometry g = default_geometry(Vec3::Zero());
    const double k = g.k(), h = 0.5 * g.surface.cell_side_m, uy = 0.7, uz = -0.4;
    auto f = [&](double y, double z) { return std::polar(1.0, k * (uy * y + uz * z)); };
    double exact = 4.0 * h * h * sinc(k * uy * h) * sinc(k * uz * h);
    double e8 = std::abs(quad2d(f, -h, h, -h, h, 8) - exact) / std::abs(exact);
    double e16 = std::abs(quad2d(f, -h, h, -h, h, 16) - exact) / std::abs(exact);
    s.check("aperture quadrature matches the sinc closed form (order 16)", e16, 1e-12);
    s.flag("aperture quadrature converges with order", e16 <= e8 + 1e-15, fmt::format("order 8 {:.2e}, order 16 {:.2e}", e8, e16));
}

void channel_checks(Suite &s, Rng &rng)
{
    const double lam = default_geometry(Vec3::Zero()).lambda();
    double worst_mag = 0.0, worst_ph = 0.0;
    for (int t = 0; t < 5; ++t)
    {
        double rr = rng.uniform(10.0, 30.0) * lam, rs = rng.uniform(10.0, 30.0) * lam;
        SystemGeometry g = default_geometry(Vec3::Zero());
        g.receiver = ReceiverLayout::linear(rear_point(rr, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)), 1,
                                            0.5 * lam, 0.5 * lam);
        Vec3 src = source_to_cartesian({rs, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
        int n = static_cast<int>(rng.uniform(0.0, g.surface.count()));
        cd a = field_closed_form(g, 0, n, src, 0.3), b = field_exact(g, 0, n, src, 0.3);
        worst_mag = std::max(worst_mag, std::abs(std::abs(a) - std::abs(b)) / std::abs(b));
        worst_ph = std::max(worst_ph, std::abs(std::arg(a / b)));
    }
    s.check("closed-form field magnitude vs aperture integral", worst_mag, 1e-2);
    s.check("closed-form field phase vs aperture integral", worst_ph, 5e-2);

    SystemGeometry g = default_geometry(rear_point(1.0, 0.2, 0.1));
    CMat H = build_H(g);
    const auto dec = build_H_decoupled(g);
    const CMat product = dec.h_r.asDiagonal() * dec.C * dec.h_t.asDiagonal();
    s.check("decoupled channel factors reassemble", (dec.assemble() - product).norm() / product.norm(), 1e-12);
    auto sv = dof_spectrum(build_H_farfield(g));
    s.check("far-field channel is rank one", sv.size() > 1 ? sv[1] : 0.0, 1e-12);
    s.check("model correlation of a vector with itself", std::abs(model_correlation(H.row(0).transpose(), H.row(0).transpose()) - 1.0), 1e-12);
}

void bound_checks(Suite &s)
{
    SystemGeometry g = default_geometry(Vec3::Zero());
    const double lam = g.lambda(), Dh = g.surface.aperture_h(), Dv = g.surface.aperture_v(), D1 = 15 * 0.5 * lam;
    s.check("Fresnel threshold 441 lambda", std::abs(fresnel_threshold(Dh, Dv, lam) - 441.0 * lam), 1e-12);
    s.check("decoupling bound", std::abs(decoupling_bound(D1, Dh, lam, pi / 8) - 3.375) / 3.375, 5e-3);
    s.check("linear bound", std::abs(linear_bound(D1, Dh, Dv, lam, pi / 8) - 9.30) / 9.30, 5e-3);
    s.check("ELAA half-power width", std::abs(rad2deg(elaa_hpbw(deg2rad(45.0), 0.0, g.surface, g.k(), PatternAxis::Azimuth)) - 6.85), 0.1);
}

void harness_checks(Suite &s)
{
    Rng a(stream_key(7, "x", 3, tag_misc)), b(stream_key(7, "x", 3, tag_misc));
    bool same = true;
    for (int i = 0; i < 100; ++i)
        same = same && a.next_u64() == b.next_u64();
    s.flag("random streams reproducible", same, "100 draws");
    bool threw = false;
    try
    {
        check_preset_defaults();
    }
    catch (const DomainError &)
    {
        threw = true;
    }
    s.flag("preset defaults match reference values", !threw, "");
}

} // namespace

std::vector<CheckResult> run_identity_suite()
{
    Suite s;
    Rng rng(stream_key(2026, "validate", 0, tag_misc));
    steering_checks(s, rng);
    linear_algebra_checks(s, rng);
    quadrature_checks(s);
    channel_checks(s, rng);
    bound_checks(s);
    harness_checks(s);
    return s.out;
}

} // namespace mela
