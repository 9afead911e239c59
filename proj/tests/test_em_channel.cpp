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

#include <catch_amalgamated.hpp>

#include "mela/em_channel.hpp"
#include "mela/steering.hpp"

#include <cmath>

// Covered tests:
// - Dipole incident fields: axis geometry, transversality, 1/r law
// - Equivalent current amplitude and its dependence on Gamma
// - Receiver and cell factors at aligned geometry
// - Closed form vs linearised quadrature and vs the 4-D aperture integral (separations >= 10 lambda)
// - build_H: single entry, mirror symmetry, independent scalar recomputation
// - build_G: single entry, mirrored azimuths, far-field phases, uniform-amplitude approximation
// - Decoupled channel: degenerate offsets, factor reassembly, phase-error bound on a 5 x 5 surface
// - Far-field channel rank and boresight factor
// - Received signal: scalar case, superposition, phase-conjugate maximality, noise power
// - Model correlation and DoF spectrum properties, SNR to sigma mapping

using namespace mela;

namespace
{
double plain_sinc(double x)
{
    return x == 0.0 ? 1.0 : std::sin(x) / x;
}

SystemGeometry single_element(const Vec3 &rx, double spacing_factor = 0.5)
{
    SystemGeometry g = default_geometry(Vec3::Zero());
    const double lam = g.lambda();
    g.receiver = ReceiverLayout::linear(rx, 1, spacing_factor * lam, 0.5 * lam);
    return g;
}

CVec random_vector(Eigen::Index n, Rng &rng)
{
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = rng.complex_normal(1.0);
    return v;
}
} // namespace

TEST_CASE("EM channel - Incident fields")
{
    const double k = 2.0 * pi / 0.01, r = 0.7;
    auto f = incident_fields(Vec3(r, 0, 0), Vec3::Zero(), k);
    const double g = 1.0 / (4.0 * pi * r);
    CHECK(std::abs(std::abs(f.H(1)) - g) < 1e-14);
    CHECK(std::abs(f.H(0)) < 1e-15);
    CHECK(std::abs(f.H(2)) < 1e-15);
    CHECK(std::abs(std::abs(f.E(2)) - free_space_impedance * g) < 1e-10);
    CHECK(std::abs(f.E(0)) < 1e-12);

    Rng rng(stream_key(1, "test", 0, tag_misc));
    for (int i = 0; i < 50; ++i)
    {
        Vec3 p(rng.uniform(0.1, 1.0), rng.uniform(-1, 1), rng.uniform(-1, 1));
        Vec3 t(0.0, rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
        auto q = incident_fields(p, t, k);
        Vec3 Rt = (p - t).normalized();
        CHECK(std::abs(q.E.dot(Rt.cast<cd>())) < 1e-10 * q.E.norm());
        CHECK(std::abs(q.H.dot(Rt.cast<cd>())) < 1e-12 * q.H.norm());
        auto q2 = incident_fields(t + 2.0 * (p - t), t, k);
        CHECK(std::abs(q.H.norm() / q2.H.norm() - 2.0) < 1e-12);
        CHECK(std::abs(q.E.norm() / q2.E.norm() - 2.0) < 1e-12);
    }
    CHECK_THROWS_AS(incident_fields(Vec3::Zero(), Vec3::Zero(), k), DomainError);
}

TEST_CASE("EM channel - Equivalent current")
{
    const double k = 2.0 * pi / 0.01, r = 0.4;
    const Vec3 p(r, 0, 0), t = Vec3::Zero();
    cd a1 = equivalent_current_amplitude(p, t, 1.0, k);
    CHECK(std::abs(a1 - 2.0 / (4.0 * pi * r) * std::polar(1.0, k * r)) < 1e-14);
    CHECK(std::abs(equivalent_current_amplitude(p, t, -1.0, k)) == 0.0);
    CHECK(std::abs(std::abs(equivalent_current_amplitude(p, t, 0.0, k)) - 0.5 * std::abs(a1)) < 1e-15);
    CHECK(cos_phi_nk(Vec3(0, 0, 1), Vec3::Zero()) == 0.0);
    CHECK(std::abs(cos_phi_nk(Vec3(1, 1, 0), Vec3::Zero()) - std::sqrt(0.5)) < 1e-15);
}

TEST_CASE("EM channel - Unit cell factors")
{
    const double k = 2.0 * pi / 0.0107, dr = 0.005, dt = 0.005;
    CHECK(std::abs(receiver_factor(Vec3(0.3, 0, 0), k, dr) - I * dr * dr / (4.0 * pi * k)) < 1e-20);
    // Retro-aligned: cell at origin, receiver centre on -x, source on +x.
    cd b = cell_factor(Vec3::Zero(), Vec3(-0.2, 0, 0), Vec3(1.5, 0, 0), k, dt, 1.0);
    CHECK(std::abs(b - 2.0 * dt * dt / (4.0 * pi)) < 1e-18);
    // Oblique receiver direction enters through the unnormalised sinc.
    Vec3 d(0.2, 0.05, -0.03);
    Vec3 v = d.normalized();
    cd a = receiver_factor(d, k, dr);
    CHECK(std::abs(a - I * dr * dr / (4.0 * pi * k) * plain_sinc(k * v.y() * dr / 2) * plain_sinc(k * v.z() * dr / 2)) <
          1e-20);
}

TEST_CASE("EM channel - Closed form vs quadrature oracles")
{
    Rng rng(stream_key(2, "test", 0, tag_misc));
    const double lam = default_geometry(Vec3::Zero()).lambda();
    for (int i = 0; i < 12; ++i)
    {
        const double rr = rng.uniform(10.0, 30.0) * lam, rs = rng.uniform(10.0, 30.0) * lam;
        SystemGeometry g = single_element(rear_point(rr, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)));
        Vec3 src = source_to_cartesian({rs, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
        const int n = static_cast<int>(rng.uniform(0.0, g.surface.count()));
        const double w = rng.uniform(-pi, pi);
        cd a = field_closed_form(g, 0, n, src, w);
        cd b = field_exact(g, 0, n, src, w);
        CHECK(std::abs(a - b) / std::abs(b) < 1e-3);
        cd c = field_aperture_integral(g, 0, n, src, w);
        CHECK(std::abs(std::abs(a) - std::abs(c)) / std::abs(c) < 1e-2);
        CHECK(std::abs(std::arg(a / c)) < 5e-2);
    }

    // Boresight source at 10 lambda, receiver at 20 lambda.
    SystemGeometry g = single_element(rear_point(20.0 * lam, 0.0, 0.0));
    Vec3 src(10.0 * lam, 0.0, 0.0);
    for (int n : {0, 110, 220, 330, 440})
    {
        cd a = field_closed_form(g, 0, n, src, 0.0);
        cd b = field_exact(g, 0, n, src, 0.0, {16, true});
        CHECK(std::abs(a - b) / std::abs(b) < 1e-3);
    }

    // Vanishing apertures: the field tends to d_t^2 d_r^2 times the point-to-point product.
    SystemGeometry tiny = single_element(rear_point(0.3, 0.1, 0.0));
    tiny.surface.spacing_m = tiny.surface.cell_side_m = 1e-5;
    tiny.receiver.element_side_m = 1e-5;
    Vec3 ps(0.5, 0.02, 0.01);
    const double k = tiny.k();
    const Vec3 t = Vec3::Zero(), rm = tiny.receiver.position(0);
    const double a = (t - rm).norm(), b = (ps - t).norm();
    cd point = I / (4.0 * pi * k) * 2.0 / (4.0 * pi) * cos_phi_nk(ps, t) * std::polar(1.0 / (a * b), k * (a + b)) *
               std::pow(1e-5, 4);
    const int center = tiny.surface.count() / 2;
    CHECK(std::abs(field_exact(tiny, 0, center, ps, 0.0) - point) < 1e-6 * std::abs(point));
}

TEST_CASE("EM channel - build_H")
{
    const double r = 0.25;
    SystemGeometry g = single_element(rear_point(r, 0.0, 0.0));
    g.surface.n_h = g.surface.n_v = 0;
    CMat H1 = build_H(g);
    REQUIRE(H1.size() == 1);
    const double k = g.k(), dr = g.receiver.element_side_m;
    CHECK(std::abs(H1(0, 0) - I * dr * dr / (4.0 * pi * k) * std::polar(1.0 / r, k * r)) < 1e-15);

    SystemGeometry full = default_geometry(rear_point(0.2, 0.3, 0.0));
    CMat H = build_H(full);
    REQUIRE(H.rows() == 15);
    REQUIRE(H.cols() == 441);
    const auto &L = full.surface;
    auto cells = element_positions(L);
    double worst = 0.0;
    for (int m = 0; m < 15; ++m)
        for (int n = 0; n < 441; ++n)
        {
            auto [ny, nz] = element_index(L, n);
            const int mirror = (ny + L.n_h) * L.cols() + (-nz + L.n_v);
            CHECK(std::abs(std::abs(H(m, n)) - std::abs(H(m, mirror))) < 1e-12 * std::abs(H(m, n)));
            // Independent scalar recomputation.
            const Vec3 d = cells[static_cast<size_t>(n)] - full.receiver.position(m);
            const double dist = d.norm(), vy = d.y() / dist, vz = d.z() / dist, side = full.receiver.element_side_m;
            const cd ref = I * side * side / (4.0 * pi * full.k()) * plain_sinc(full.k() * vy * side / 2) *
                           plain_sinc(full.k() * vz * side / 2) * std::polar(1.0 / dist, full.k() * dist);
            worst = std::max(worst, std::abs(H(m, n) - ref) / std::abs(ref));
        }
    CHECK(worst < 1e-12);
}

TEST_CASE("EM channel - build_G")
{
    const double r = 0.9;
    SystemGeometry g = single_element(rear_point(0.3, 0.0, 0.0));
    g.surface.n_h = g.surface.n_v = 0;
    CMat G1 = build_G(g, {Vec3(r, 0, 0)});
    const double dt = g.surface.cell_side_m, k = g.k();
    CHECK(std::abs(G1(0, 0) - 2.0 * dt * dt / (4.0 * pi) * std::polar(1.0 / r, k * r)) < 1e-15);

    SystemGeometry full = default_geometry(rear_point(0.5, 0.0, 0.0));
    const auto &L = full.surface;
    const double th = deg2rad(25.0);
    CMat Gp = build_G(full, {source_to_cartesian({1.2, th, 0.0})});
    CMat Gm = build_G(full, {source_to_cartesian({1.2, -th, 0.0})});
    for (int n = 0; n < L.count(); ++n)
    {
        auto [ny, nz] = element_index(L, n);
        const int mirror = (-ny + L.n_h) * L.cols() + (nz + L.n_v);
        CHECK(std::abs(Gp(n, 0) - Gm(mirror, 0)) < 1e-12 * std::abs(Gp(n, 0)));
    }

    // Far source: phases follow the far-field steering vector.
    const double F = fresnel_threshold(L.aperture_h(), L.aperture_v(), full.lambda());
    const double az = deg2rad(-20.0), el = deg2rad(12.0);
    CMat Gf = build_G(full, {source_to_cartesian({100.0 * F, az, el})});
    CVec a = steering_far(az, el, L, full.k());
    const int c = L.count() / 2;
    double worst = 0.0;
    for (int n = 0; n < L.count(); ++n)
        worst = std::max(worst, std::abs(std::arg((Gf(n, 0) / Gf(c, 0)) / (a(n) / a(c)))));
    CHECK(worst < 0.01);
}

TEST_CASE("EM channel - Uniform-amplitude incident matrix")
{
    SystemGeometry g = default_geometry(rear_point(1.0, 0.0, 0.0));
    const auto &L = g.surface;
    CMat Gu = build_G_uniform_amplitude(g, {{0.8, 0.0, 0.0}});
    const double m0 = std::abs(Gu(0, 0));
    for (int n = 0; n < L.count(); ++n)
        CHECK(std::abs(std::abs(Gu(n, 0)) - m0) < 1e-12 * m0);
    CVec ph = steering_exact(0.8, 0.0, 0.0, L, g.k());
    CHECK((Gu.col(0) / Gu(0, 0) - ph / ph(0)).norm() < 1e-10);

    const double Dh = L.aperture_h();
    CMat Ge = build_G(g, {Vec3(20.0 * Dh, 0, 0)});
    CHECK(Ge.cwiseAbs().maxCoeff() / Ge.cwiseAbs().minCoeff() < 1.1);
    for (double rr : {10.0 * Dh, 20.0 * Dh})
    {
        CMat A = build_G(g, {Vec3(rr, 0, 0)});
        CMat B = build_G_uniform_amplitude(g, {{rr, 0.0, 0.0}});
        double worst = 0.0, phase = 0.0;
        for (int n = 0; n < L.count(); ++n)
        {
            worst = std::max(worst, std::abs(std::abs(A(n, 0)) / std::abs(B(n, 0)) - 1.0));
            phase = std::max(phase, std::abs(std::arg(A(n, 0) / B(n, 0))));
        }
        CHECK(worst < 0.05);
        CHECK(phase < 1e-9);
    }
}

TEST_CASE("EM channel - Decoupled and far-field channels")
{
    SystemGeometry g = single_element(rear_point(0.6, 0.2, -0.1));
    g.surface.n_h = g.surface.n_v = 0;
    auto dec = build_H_decoupled(g);
    const Vec3 dc = g.receiver.center_m;
    cd expect = receiver_factor(-dc, g.k(), g.receiver.element_side_m) * std::polar(1.0 / dc.norm(), g.k() * dc.norm());
    CHECK(std::abs(dec.assemble()(0, 0) - expect) < 1e-12 * std::abs(expect));

    SystemGeometry full = default_geometry(rear_point(1.5, 0.3, 0.1));
    auto d2 = build_H_decoupled(full);
    CMat prod = d2.h_r.asDiagonal() * d2.C * d2.h_t.asDiagonal();
    CHECK((d2.assemble() - prod).norm() < 1e-12 * prod.norm());

    // Phase error of the decoupled distance vs its first-order bound on a 5 x 5 surface.
    SystemGeometry small = default_geometry(Vec3::Zero());
    small.surface.n_h = small.surface.n_v = 2;
    const double lam = small.lambda(), D1 = 15 * 0.5 * lam, Dh = small.surface.aperture_h();
    auto cells = element_positions(small.surface);
    for (double r : {0.2, 0.5, 1.0, 3.0})
    {
        small.receiver = ReceiverLayout::linear(rear_point(r, 0.0, 0.0), 15, 0.5 * lam, 0.5 * lam);
        const Vec3 c = small.receiver.center_m;
        const double bound = pi * D1 * Dh / (2.0 * lam * r);
        double worst = 0.0;
        for (int m = 0; m < 15; ++m)
            for (const auto &t : cells)
            {
                const Vec3 dm = small.receiver.offsets_m[static_cast<size_t>(m)];
                const double exact = (c + dm - t).norm();
                const double approx = (c + dm).norm() + (c - t).norm() - c.norm();
                worst = std::max(worst, small.k() * std::abs(exact - approx));
            }
        CHECK(worst <= bound);
    }

    CMat Hf = build_H_farfield(full);
    auto sv = dof_spectrum(Hf);
    CHECK(sv[1] < 1e-12);
    SystemGeometry bore = default_geometry(rear_point(2.0, 0.0, 0.0));
    CMat Hb = build_H_farfield(bore);
    const double dr = bore.receiver.element_side_m;
    CHECK(std::abs(std::abs(Hb(0, 0)) - dr * dr / (4.0 * pi * bore.k()) / 2.0) < 1e-12 * std::abs(Hb(0, 0)));
}

TEST_CASE("EM channel - Received signal")
{
    Rng rng(stream_key(3, "test", 0, tag_misc));
    CMat H(1, 1), G(1, 1);
    H(0, 0) = cd(0.3, -0.2);
    G(0, 0) = cd(-1.1, 0.4);
    CVec ph(1), s(1);
    ph(0) = std::polar(1.0, 0.7);
    s(0) = cd(2.0, 1.0);
    CHECK(std::abs(received_signal(H, ph, G, s, 0.0, rng)(0) - H(0, 0) * ph(0) * G(0, 0) * s(0)) < 1e-15);

    SystemGeometry g = default_geometry(rear_point(0.3, 0.0, 0.0));
    CMat Hfull = build_H(g);
    CMat Gfull = build_G(g, {source_to_cartesian({1.0, 0.2, 0.1}), source_to_cartesian({2.0, -0.4, 0.0})});
    CVec phase(441);
    for (int n = 0; n < 441; ++n)
        phase(n) = rng.unit_phase();
    CVec s1 = random_vector(2, rng), s2 = random_vector(2, rng);
    CVec y12 = received_signal(Hfull, phase, Gfull, s1 + cd(0, 2) * s2, 0.0, rng);
    CVec y1 = received_signal(Hfull, phase, Gfull, s1, 0.0, rng), y2 = received_signal(Hfull, phase, Gfull, s2, 0.0, rng);
    CHECK((y12 - y1 - cd(0, 2) * y2).norm() < 1e-12 * y12.norm());
    CVec e0 = CVec::Zero(2), e1 = CVec::Zero(2);
    e0(0) = 1.0;
    e1(1) = 1.0;
    CVec ysum = received_signal(Hfull, phase, Gfull, e0 + e1, 0.0, rng);
    CHECK((ysum - received_signal(Hfull, phase, Gfull, e0, 0.0, rng) - received_signal(Hfull, phase, Gfull, e1, 0.0, rng))
              .norm() < 1e-12 * ysum.norm());

    // Phase-conjugate configuration maximises |sum y| for one source.
    CVec x = Gfull.col(0);
    CVec h = Hfull.colwise().sum().transpose();
    CVec best(441);
    for (int n = 0; n < 441; ++n)
        best(n) = std::polar(1.0, -std::arg(h(n) * x(n)));
    CVec one = CVec::Ones(1);
    const double top = std::abs(received_signal(Hfull, best, Gfull.col(0), one, 0.0, rng).sum());
    for (int i = 0; i < 1000; ++i)
    {
        CVec w(441);
        for (int n = 0; n < 441; ++n)
            w(n) = rng.unit_phase();
        CHECK(std::abs(received_signal(Hfull, w, Gfull.col(0), one, 0.0, rng).sum()) <= top);
    }

    const double sigma = 0.3;
    double acc = 0.0;
    CMat Z = CMat::Zero(15, 441);
    for (int i = 0; i < 10000; ++i)
        acc += received_signal(Z, phase, Gfull, s1, sigma, rng).squaredNorm();
    CHECK(std::abs(acc / 10000 / (15 * sigma * sigma) - 1.0) < 0.05);
    CHECK_THROWS_AS(received_signal(Hfull, CVec::Ones(3), Gfull, s1, 0.0, rng), DomainError);
}

TEST_CASE("EM channel - Correlation, DoF and noise level")
{
    Rng rng(stream_key(4, "test", 0, tag_misc));
    CVec a = random_vector(30, rng);
    CHECK(std::abs(model_correlation(a, cd(-0.3, 2.0) * a) - 1.0) < 1e-12);
    CVec b = random_vector(30, rng);
    const double rho = model_correlation(a, b);
    CHECK(rho >= 0.0);
    CHECK(rho <= 1.0);
    CHECK(std::abs(model_correlation(std::polar(2.0, 0.4) * a, cd(0, -3) * b) - rho) < 1e-12);
    CVec e1 = CVec::Zero(4), e2 = CVec::Zero(4);
    e1(0) = 1.0;
    e2(1) = 1.0;
    CHECK(model_correlation(e1, e2) == 0.0);
    CHECK_THROWS_AS(model_correlation(e1, CVec::Zero(4)), DomainError);

    CMat R1 = random_vector(15, rng) * random_vector(441, rng).transpose();
    auto s1 = dof_spectrum(R1);
    CHECK(s1[0] == 1.0);
    CHECK(s1[1] < 1e-20);

    auto dominance = [](const std::vector<double> &s) {
        double t = 0.0;
        for (double v : s)
            t += v;
        return s[0] / t;
    };
    SystemGeometry g = default_geometry(Vec3::Zero());
    const double d = g.surface.spacing_m;
    g.receiver = ReceiverLayout::linear(rear_point(5.0 * d, 0.0, 0.0), 15, g.lambda(), 0.5 * g.lambda());
    const double near = dominance(dof_spectrum(build_H(g)));
    g.receiver.center_m = rear_point(500.0 * d, 0.0, 0.0);
    const double far = dominance(dof_spectrum(build_H(g)));
    CHECK(far > near);

    CHECK(std::abs(noise_sigma(2.0, 10.0) - std::sqrt(0.2)) < 1e-15);
    CHECK(std::abs(noise_sigma(1.0, 0.0) - 1.0) < 1e-15);
}
