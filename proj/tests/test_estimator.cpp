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
#include "mela/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

// Covered tests:
// - Selector rows on a 3 x 3 lattice, row counts and window geometry
// - Angle and range rotation identities on quadratic manifolds
// - Stage-1 phase cancellation and support extraction (6 dB contains 3 dB)
// - Stacked least-squares and ridge recovery of the incident vector
// - Sample covariance structure and subspace computed in a rotated basis
// - Angle spectrum divergence at the truth, weight-mode agreement
// - Range search: near sources to 1%, far sources reported at infinity
// - Noiseless two-source hybrid recovery through the driver

using namespace mela;

namespace
{
SystemGeometry geometry()
{
    return default_geometry(rear_point(0.2, 0.3, 0.1));
}

CMat random_matrix(Eigen::Index r, Eigen::Index c, Rng &rng)
{
    CMat A(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i)
            A(i, j) = rng.complex_normal(1.0);
    return A;
}

AngularSupport box_support(const std::vector<std::pair<double, double>> &truths, double half_width)
{
    AngularSupport s;
    for (auto [th, ph] : truths)
    {
        SupportRegion r;
        r.azimuth = {th - half_width, th + half_width};
        r.elevation = {ph - half_width, ph + half_width};
        r.peak_azimuth = th;
        r.peak_elevation = ph;
        r.peak_value = 1.0;
        s.regions.push_back(r);
        s.azimuth.push_back(r.azimuth);
        s.elevation.push_back(r.elevation);
    }
    return s;
}

double projector_gap(const CMat &A, const CMat &B)
{
    return (A * A.adjoint() - B * B.adjoint()).norm();
}
} // namespace

TEST_CASE("Estimator - Selectors")
{
    CHECK(selector_indices(1, 1, 1) == std::vector<int>{1, 2, 4, 5});
    CHECK(selector_indices(2, 1, 1) == std::vector<int>{0, 1, 3, 4});
    CHECK(selector_indices(3, 1, 1) == std::vector<int>{3, 4, 6, 7});
    CHECK_THROWS_AS(selector_indices(4, 1, 1), DomainError);
    CHECK_THROWS_AS(selector_indices(1, 0, 1), DomainError);

    for (auto [nh, nv] : std::vector<std::pair<int, int>>{{1, 1}, {2, 3}, {10, 10}})
    {
        MetasurfaceLayout L;
        L.n_h = nh;
        L.n_v = nv;
        auto all = lattice_coords(L);
        for (int i = 1; i <= 3; ++i)
        {
            RMat J = selector_matrix(i, nh, nv);
            CHECK(J.rows() == 4 * nh * nv);
            CHECK(J.sum() == 4.0 * nh * nv);
            CHECK((J.colwise().sum().array() <= 1.0).all());
            // Selected cells are exactly the window coordinates.
            auto idx = selector_indices(i, nh, nv);
            auto wc = window_coords(i, nh, nv);
            for (size_t m = 0; m < idx.size(); ++m)
                CHECK(all[static_cast<size_t>(idx[m])] == wc[m]);
        }
        // Window 3 is the point reflection of window 1.
        auto w1 = window_coords(1, nh, nv), w3 = window_coords(3, nh, nv);
        std::reverse(w1.begin(), w1.end());
        for (size_t m = 0; m < w1.size(); ++m)
        {
            CHECK(w3[m].first == -w1[m].first);
            CHECK(w3[m].second == -w1[m].second);
        }
    }
}

TEST_CASE("Estimator - Rotation identities")
{
    auto g = geometry();
    const auto &L = g.surface;
    const double k = g.k(), d = L.spacing_m;
    auto s1 = selector_indices(1, L.n_h, L.n_v), s2 = selector_indices(2, L.n_h, L.n_v),
         s3 = selector_indices(3, L.n_h, L.n_v);
    Rng rng(stream_key(21, "test", 0, tag_misc));
    for (int t = 0; t < 50; ++t)
    {
        const double th = rng.uniform(-1.0, 1.0), ph = rng.uniform(-0.5, 0.5), r = rng.uniform(0.3, 20.0);
        auto p = params_from_geometry(r, th, ph, k, d);
        CVec a = steering_near(p, L, k);
        CVec a1 = a(s1), a2 = a(s2), a3 = a(s3);
        CHECK((CVec(a1.reverse()) - rotation_D(p.gamma_a, p.gamma_e, L.n_h, L.n_v).cwiseProduct(a3))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
        CHECK((a1 - std::polar(1.0, p.gamma_e) * rotation_E(p.beta_e, p.alpha, L.n_h, L.n_v).cwiseProduct(a2))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    }
    CHECK((rotation_D(0.0, 0.0, 2, 2).array() - cd(1.0)).abs().maxCoeff() == 0.0);
    CHECK((rotation_E(0.0, 0.0, 2, 2).array() - cd(1.0)).abs().maxCoeff() == 0.0);
}

TEST_CASE("Estimator - Stage 1")
{
    auto g = geometry();
    const auto &L = g.surface;
    const double k = g.k(), d = L.spacing_m;
    CMat H = build_H(g);
    CVec h = H.colwise().sum().transpose();
    const double th = deg2rad(12.0), ph = deg2rad(-6.0);
    CVec x = steering_far(th, ph, L, k);

    // At the source direction the cell phases cancel both the channel and incident phases.
    const cd f0 = (h.transpose() * stage1_phase(th, ph, h, L, k).cwiseProduct(x))(0);
    CHECK(std::abs(std::abs(f0) - h.cwiseAbs().sum()) < 1e-10 * h.cwiseAbs().sum());
    CHECK(std::abs(std::arg(f0)) < 1e-9);
    const cd f1 = (h.transpose() * stage1_phase(th + 0.1, ph, h, L, k).cwiseProduct(x))(0);
    CHECK(std::abs(f1) < std::abs(f0));
    CHECK_THROWS_AS(stage1_phase(th, ph, CVec::Ones(3), L, k), DomainError);

    Rng rng(stream_key(22, "test", 0, tag_misc));
    auto az = linspace(deg2rad(-60), deg2rad(60), 121), el = linspace(deg2rad(-30), deg2rad(30), 61);
    auto grid = stage1_scan(H, x, az, el, 0.0, rng, L, k);
    REQUIRE(grid.f.rows() == 121);
    REQUIRE(grid.f.cols() == 61);
    auto s3 = extract_support(grid, {3.0, 0, 3.0});
    auto s6 = extract_support(grid, {6.0, 0, 3.0});
    REQUIRE_FALSE(s3.empty());
    CHECK(s3.covers(th, ph));
    for (const auto &r : s3.regions)
        for (double a : {r.azimuth.lo, r.azimuth.hi})
            for (double e : {r.elevation.lo, r.elevation.hi})
                CHECK(s6.covers(a, e));
    CHECK(std::abs(s3.regions[0].peak_azimuth - th) <= deg2rad(1.0) + 1e-12);
    CHECK(std::abs(s3.regions[0].peak_elevation - ph) <= deg2rad(1.0) + 1e-12);
    CHECK(linspace(0.0, 1.0, 5)[1] == 0.25);
}

TEST_CASE("Estimator - Stacked recovery")
{
    auto g = default_geometry(Vec3::Zero());
    g.receiver.center_m = rear_point(5.0 * g.surface.spacing_m, 0.0, 0.0);
    const int N = g.surface.count();
    CMat H = build_H(g);
    Rng rng(stream_key(23, "test", 0, tag_misc));
    std::vector<CVec> phases;
    for (int s = 0; s < 32; ++s)
    {
        CVec w(N);
        for (int n = 0; n < N; ++n)
            w(n) = rng.unit_phase();
        phases.push_back(w);
    }
    CVec x = random_matrix(N, 1, rng);
    std::vector<CVec> y;
    for (const auto &w : phases)
        y.push_back(H * w.cwiseProduct(x));
    CVec xh = stack_and_estimate_gs(H, phases, y);
    CHECK((xh - x).norm() < 1e-8 * x.norm());

    CMat Ht = stack_channel(H, phases);
    CHECK(Ht.rows() == 32 * 15);
    CHECK((Ht.middleRows(15, 15) - H * phases[1].asDiagonal()).norm() == 0.0);

    std::vector<CVec> few(phases.begin(), phases.begin() + 20);
    std::vector<CVec> fy(y.begin(), y.begin() + 20);
    CHECK_THROWS_AS(stack_and_estimate_gs(H, few, fy), DomainError);

    // Ridge estimate: mu = 0 is least squares, mu > 0 matches the normal-equation formula.
    CMat Z = random_matrix(Ht.rows(), 3, rng);
    CMat ls = ridge_stack_estimate(Ht, Z, 0.0);
    CMat ref = Ht.colPivHouseholderQr().solve(Z);
    CHECK((ls - ref).norm() < 1e-8 * ref.norm());
    const double mu = 0.7;
    CMat A = Ht.adjoint() * Ht + mu * CMat::Identity(N, N);
    CMat rr = A.ldlt().solve(Ht.adjoint() * Z);
    CHECK((ridge_stack_estimate(Ht, Z, mu) - rr).norm() < 1e-9 * rr.norm());
    CHECK_THROWS_AS(ridge_stack_estimate(Ht, Z, -1.0), DomainError);
    CHECK_THROWS_AS(ridge_stack_estimate(Ht, CMat::Zero(3, 1), 0.1), DomainError);
}

TEST_CASE("Estimator - Covariance and subspaces")
{
    Rng rng(stream_key(24, "test", 0, tag_misc));
    MetasurfaceLayout L;
    L.n_h = L.n_v = 3;
    L.spacing_m = L.cell_side_m = 0.005;
    const int N = L.count();
    CMat X = random_matrix(N, 4, rng);
    CMat R = sample_covariance(X);
    CHECK((R - R.adjoint()).norm() == 0.0);
    CHECK((R - X * X.adjoint() / 4.0).norm() < 1e-12 * R.norm());
    auto e = hermitian_eig(R);
    CHECK(e.values(4) < 1e-12 * e.values(0));
    CHECK(e.values(3) > 1e-3 * e.values(0));

    // Subspace from the covariance equals the snapshot route and the rotated-basis route.
    CMat Sig = random_matrix(N, 2, rng);
    CMat Xs = Sig * random_matrix(2, 30, rng) + 1e-3 * random_matrix(N, 30, rng);
    auto a = signal_subspace(sample_covariance(Xs), 2, L);
    auto b = signal_subspace_from_snapshots(Xs, 2, L);
    CHECK(projector_gap(a.Us, b.Us) < 1e-9);
    CMat Rn = random_matrix(N, N, rng);
    CMat V = hermitian_eig(CMat(Rn + Rn.adjoint())).vectors;
    CMat Sz = V.adjoint() * sample_covariance(Xs) * V;
    auto c = signal_subspace_in_basis(Sz, V, 2, L);
    CHECK(projector_gap(a.Us, c.Us) < 1e-9);
    CHECK(a.U1.rows() == 4 * 3 * 3);
    CHECK((a.Us.adjoint() * a.Us - CMat::Identity(2, 2)).norm() < 1e-12);
    CHECK_FALSE(a.weak_gap);

    // Whitened route: the identity whitener reproduces the plain subspace.
    RVec ones = RVec::Ones(N);
    auto w = signal_subspace_in_basis(Sz, V, 2, L, &ones);
    CHECK(projector_gap(a.Us, w.Us) < 1e-9);
    auto wh = Whitener::from_normal_eig(V, ones);
    CHECK((wh.dewhiten(wh.whiten(Xs)) - Xs).norm() < 1e-10 * Xs.norm());
}

TEST_CASE("Estimator - Angle and range spectra")
{
    auto g = geometry();
    const auto &L = g.surface;
    const double k = g.k(), d = L.spacing_m;
    const double F = fresnel_threshold(L.aperture_h(), L.aperture_v(), g.lambda());
    const double thn = deg2rad(15.0), phn = deg2rad(8.0), rn = 2.0;
    const double thf = deg2rad(-25.0), phf = deg2rad(-5.0);
    Rng rng(stream_key(25, "test", 0, tag_misc));
    CMat A(L.count(), 2);
    A.col(0) = steering_near(params_from_geometry(rn, thn, phn, k, d), L, k);
    A.col(1) = steering_far(thf, phf, L, k);
    CMat X = A * random_matrix(2, 100, rng);
    auto sub = signal_subspace_from_snapshots(X, 2, L);
    SpectrumOptions opt;
    AngleSpectrum spec(sub, L, opt);

    auto pn = params_from_geometry(rn, thn, phn, k, d);
    const double at_truth = spec.log_value(pn.gamma_a, pn.gamma_e);
    const double off = spec.log_value(pn.gamma_a + 0.3, pn.gamma_e - 0.2);
    CHECK(at_truth - off > std::log(1e6));

    auto support = box_support({{thn, phn}, {thf, phf}}, deg2rad(3.0));
    auto peaks = angle_search(spec, support, 2, k, d, opt);
    REQUIRE(peaks.size() == 2);
    SpectrumOptions fixed = opt;
    fixed.mode = SpectrumMode::FixedWeight;
    fixed.W = random_weight(2, 4 * L.n_h * L.n_v, rng);
    AngleSpectrum fspec(sub, L, fixed);
    // The fixed-weight spectrum diverges at the same points.
    CHECK(fspec.log_value(pn.gamma_a, pn.gamma_e) - fspec.log_value(pn.gamma_a + 0.3, pn.gamma_e - 0.2) > std::log(1e6));
    auto pf = params_far(thf, phf, k, d);
    CHECK(fspec.log_value(pf.gamma_a, pf.gamma_e) - fspec.log_value(pf.gamma_a - 0.3, pf.gamma_e + 0.2) > std::log(1e6));
    std::sort(peaks.begin(), peaks.end(), [](auto &a, auto &b) { return a.theta > b.theta; });
    CHECK(std::abs(peaks[0].theta - thn) < 1e-5);
    CHECK(std::abs(peaks[0].phi - phn) < 1e-5);
    CHECK(std::abs(peaks[1].theta - thf) < 1e-5);
    CHECK(std::abs(peaks[1].phi - phf) < 1e-5);

    RangeSpectrum rspec(sub, L, opt);
    auto rr = range_search(rspec, thn, phn, k, d, F, 0.5 * L.aperture_h(), 4.0 * F, opt);
    CHECK(rr.field == FieldClass::NearField);
    CHECK(std::abs(rr.range - rn) < 0.01 * rn);
    auto rf = range_search(rspec, thf, phf, k, d, F, 0.5 * L.aperture_h(), 4.0 * F, opt);
    CHECK(rf.field == FieldClass::FarField);
    CHECK(std::isinf(rf.range));

    // A flat spectrum is reported as far when the gate is enabled.
    SpectrumOptions gated = opt;
    gated.flat_ratio = 10.0;
    auto flat = range_profile_search([](double) { return 0.0; }, F, 0.1, 10.0, gated);
    CHECK(std::isinf(flat.range));
}

TEST_CASE("Estimator - Noiseless hybrid recovery")
{
    auto g = geometry();
    const auto &L = g.surface;
    const double k = g.k();
    const double thn = deg2rad(-18.0), phn = deg2rad(4.0), rn = 1.6;
    const double thf = deg2rad(22.0), phf = deg2rad(-7.0);
    Rng rng(stream_key(26, "test", 0, tag_misc));
    CMat A(L.count(), 2);
    A.col(0) = steering_exact(rn, thn, phn, L, k);
    A.col(1) = steering_far(thf, phf, L, k);
    CMat X = A * random_matrix(2, 100, rng);
    SpectrumOptions opt;
    auto est = estimate_from_snapshots(X, box_support({{thn, phn}, {thf, phf}}, deg2rad(3.0)), 2, g, opt);
    REQUIRE(est.sources.size() == 2);
    auto s = est.sources;
    std::sort(s.begin(), s.end(), [](auto &a, auto &b) { return a.theta < b.theta; });
    CHECK(std::abs(s[0].theta - thn) < opt.angle_step);
    CHECK(std::abs(s[0].phi - phn) < opt.angle_step);
    CHECK(std::abs(s[0].range - rn) < 0.01 * rn);
    CHECK(s[0].field == FieldClass::NearField);
    CHECK(std::abs(s[1].theta - thf) < opt.angle_step);
    CHECK(std::abs(s[1].phi - phf) < opt.angle_step);
    CHECK(s[1].field == FieldClass::FarField);

    auto none = estimate_from_snapshots(X, AngularSupport{}, 2, g, opt);
    CHECK(none.sources.empty());
    CHECK(none.status == "empty angular support");
}
