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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mela
{

std::vector<std::pair<double, double>> reference_source_angles()
{
    return {{deg2rad(-59.5), deg2rad(21.4)}, {deg2rad(44.4), deg2rad(8.1)}, {deg2rad(28.7), deg2rad(-43.3)}};
}

SystemGeometry estimation_geometry()
{
    SystemGeometry g = default_geometry(Vec3::Zero());
    g.receiver.center_m = rear_point(5.0 * g.surface.spacing_m, 0.0, 0.0);
    return g;
}

namespace
{
double fresnel_of(const SystemGeometry &g)
{
    return fresnel_threshold(g.surface.aperture_h(), g.surface.aperture_v(), g.lambda());
}

ScenarioConfig scenario_with_ranges(const std::vector<double> &ranges)
{
    ScenarioConfig c;
    c.geom = estimation_geometry();
    auto ang = reference_source_angles();
    for (size_t i = 0; i < ang.size(); ++i)
        c.sources.push_back({ranges[i], ang[i].first, ang[i].second});
    return c;
}
} // namespace

ScenarioConfig hybrid_scenario()
{
    const double far = 5.0 * fresnel_of(estimation_geometry());
    return scenario_with_ranges({far, 2.0, far});
}

ScenarioConfig pure_near_scenario()
{
    return scenario_with_ranges({1.8, 2.0, 2.2});
}

Scenario make_scenario(const ScenarioConfig &cfg)
{
    cfg.geom.surface.validate();
    cfg.geom.receiver.validate();
    if (cfg.sources.empty())
        throw DomainError("scenario has no sources");
    if (cfg.subslots * cfg.geom.receiver.count() < cfg.geom.surface.count())
        throw DomainError("S * M must be at least N for the sub-slot least squares");
    Scenario sc;
    sc.cfg = cfg;
    sc.H = build_H(cfg.geom);
    sc.G = build_G_uniform_amplitude(cfg.geom, cfg.sources);
    const int center = cfg.geom.surface.count() / 2;
    sc.amplitude.resize(sc.K());
    for (int k = 0; k < sc.K(); ++k)
        sc.amplitude(k) = 1.0 / std::abs(sc.G(center, k));
    sc.h_colsum = sc.H.colwise().sum().transpose();
    sc.fresnel = fresnel_of(cfg.geom);
    return sc;
}

CMat draw_symbols(const Scenario &sc, int count, Rng &rng)
{
    CMat S(sc.K(), count);
    for (int t = 0; t < count; ++t)
        for (int k = 0; k < sc.K(); ++k)
            S(k, t) = sc.amplitude(k) * rng.unit_phase();
    return S;
}

// ---- Stage 1 ----

Stage1Simulator::Stage1Simulator(const Scenario &sc, int scan_points, std::uint64_t trial) : sc_(sc)
{
    const auto &c = sc.cfg;
    az_ = linspace(-0.5 * pi, 0.5 * pi, scan_points);
    el_ = az_;
    Rng sym(stream_key(c.seed, c.preset, trial, tag_symbols));
    x_ = sc.G * draw_symbols(sc, 1, sym).col(0);
    Rng unused(0);
    clean_ = stage1_scan(sc.H, x_, az_, el_, 0.0, unused, c.geom.surface, c.geom.k()).f;
    power_ = stage1_signal_power(sc.H, x_, az_, el_, c.geom.surface, c.geom.k());
    Rng nz(stream_key(c.seed, c.preset, trial, tag_stage1_noise));
    noise_.resize(clean_.rows(), clean_.cols());
    for (Eigen::Index q = 0; q < noise_.cols(); ++q)
        for (Eigen::Index p = 0; p < noise_.rows(); ++p)
            noise_(p, q) = nz.complex_normal(1.0);
}

Stage1Run Stage1Simulator::run(double snr_db, double decay_db, double floor_factor) const
{
    Stage1Run out;
    out.signal_power = power_;
    out.grid.azimuth = az_;
    out.grid.elevation = el_;
    out.grid.f = clean_;
    if (std::isfinite(snr_db))
        out.grid.f += noise_sigma(power_, snr_db) * std::sqrt(static_cast<double>(sc_.H.rows())) * noise_;
    SupportOptions so;
    so.decay_db = decay_db;
    so.max_peaks = sc_.K();
    so.floor_factor = floor_factor;
    out.support = extract_support(out.grid, so);
    return out;
}

// ---- Stage 2 ----

Stage2Simulator::Stage2Simulator(const Scenario &sc, std::uint64_t trial) : sc_(sc)
{
    const auto &c = sc.cfg;
    const int N = c.geom.surface.count();
    Rng ph(stream_key(c.seed, c.preset, trial, tag_stage2_phase));
    CMat Om(c.subslots, N);
    for (int s = 0; s < c.subslots; ++s)
        for (int n = 0; n < N; ++n)
            Om(s, n) = ph.unit_phase();
    // H~^H H~ = (H^H H) .* (Om^H Om) entrywise, without forming the stacked matrix.
    CMat A = (sc.H.adjoint() * sc.H).cwiseProduct(Om.adjoint() * Om);
    auto eig = hermitian_eig(0.5 * (A + A.adjoint()));
    if (!(eig.values(N - 1) > 1e-12 * eig.values(0)))
        throw NumericalError("Stage2Simulator: stacked channel is rank deficient");
    s_ = eig.values.cwiseSqrt();
    V_ = eig.vectors;
    if (c.prewhiten)
        whitener_ = Whitener::from_normal_eig(V_, s_);

    Rng sym(stream_key(c.seed, c.preset, trial, tag_stage2_symbols));
    const CMat S = draw_symbols(sc, c.snapshots, sym);
    X_ = sc.G * S;
    const CMat VhG = V_.adjoint() * sc.G;
    VhX_ = VhG * S;
    // ||H~ X||^2 = sum_n s_n^2 |(V^H X)_n|^2
    power_ = (s_.array().square().matrix().asDiagonal() * VhX_).cwiseProduct(VhX_.conjugate()).real().sum() /
             static_cast<double>(static_cast<Eigen::Index>(c.subslots) * c.geom.receiver.count() * X_.cols());
    px_ = X_.squaredNorm() / static_cast<double>(X_.size());

    Rng nz(stream_key(c.seed, c.preset, trial, tag_stage2_noise));
    W_.resize(N, c.snapshots);
    for (Eigen::Index t = 0; t < W_.cols(); ++t)
        for (Eigen::Index r = 0; r < W_.rows(); ++r)
            W_(r, t) = nz.complex_normal(1.0);
}

double Stage2Simulator::ridge_mu(double snr_db, int T2) const
{
    if (!std::isfinite(snr_db))
        return 0.0;
    const double sigma = noise_sigma(power_, snr_db);
    return sc_.cfg.ridge_kappa * sigma * sigma / (px_ * T2);
}

namespace
{
struct RidgeGains
{
    RVec signal, noise;
};

RidgeGains ridge_gains(const RVec &s, double sigma, double mu)
{
    const Eigen::ArrayXd den = s.array().square() + mu;
    return {(s.array().square() / den).matrix(), (sigma * s.array() / den).matrix()};
}
} // namespace

CMat Stage2Simulator::snapshots(double snr_db, int T2) const
{
    if (T2 < 1 || T2 > X_.cols())
        throw DomainError("snapshot count outside the simulated range");
    if (!std::isfinite(snr_db))
        return X_.leftCols(T2);
    const auto g = ridge_gains(s_, noise_sigma(power_, snr_db), ridge_mu(snr_db, T2));
    CMat Z = g.signal.asDiagonal() * VhX_.leftCols(T2);
    Z.noalias() += g.noise.asDiagonal() * W_.leftCols(T2);
    return V_ * Z;
}

const Stage2Simulator::Blocks &Stage2Simulator::blocks(int T2) const
{
    auto it = blocks_.find(T2);
    if (it != blocks_.end())
        return it->second;
    const double inv = 1.0 / T2;
    const auto P = VhX_.leftCols(T2);
    const auto W = W_.leftCols(T2);
    Blocks b;
    b.PP = inv * (P * P.adjoint());
    b.PW = inv * (P * W.adjoint());
    b.WW = CMat::Zero(W.rows(), W.rows());
    b.WW.selfadjointView<Eigen::Lower>().rankUpdate(W, inv);
    b.WW = b.WW.selfadjointView<Eigen::Lower>();
    return blocks_.emplace(T2, std::move(b)).first->second;
}

SubspaceBundle Stage2Simulator::subspace(double snr_db, int T2) const
{
    if (T2 < 1 || T2 > X_.cols())
        throw DomainError("snapshot count outside the simulated range");
    const auto &b = blocks(T2);
    CMat Sz;
    if (std::isfinite(snr_db))
    {
        const auto g = ridge_gains(s_, noise_sigma(power_, snr_db), ridge_mu(snr_db, T2));
        const auto Ds = g.signal.asDiagonal();
        const auto Dn = g.noise.asDiagonal();
        CMat cross = Ds * b.PW * Dn;
        Sz = Ds * b.PP * Ds + cross + cross.adjoint() + Dn * b.WW * Dn;
    }
    else
        Sz = b.PP;
    const RVec *scale = sc_.cfg.prewhiten ? &s_ : nullptr;
    return signal_subspace_in_basis(Sz, V_, sc_.K(), sc_.cfg.geom.surface, scale);
}

const Whitener &Stage2Simulator::whitener() const
{
    if (!whitener_)
        throw DomainError("whitener requested without prewhiten");
    return *whitener_;
}

// ---- Metrics ----

std::vector<int> match_sources(const std::vector<std::pair<double, double>> &est,
                               const std::vector<std::pair<double, double>> &truth)
{
    const size_t ne = est.size(), nt = truth.size();
    std::vector<int> best(nt, -1);
    if (ne == 0 || nt == 0)
        return best;
    auto cost = [&](size_t e, size_t t) {
        return std::pow(est[e].first - truth[t].first, 2) + std::pow(est[e].second - truth[t].second, 2);
    };
    double best_cost = std::numeric_limits<double>::infinity();
    if (ne >= nt)
    {
        std::vector<int> perm(ne);
        std::iota(perm.begin(), perm.end(), 0);
        do
        {
            double c = 0.0;
            for (size_t t = 0; t < nt; ++t)
                c += cost(static_cast<size_t>(perm[t]), t);
            if (c < best_cost)
            {
                best_cost = c;
                best.assign(perm.begin(), perm.begin() + static_cast<long>(nt));
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    else
    {
        std::vector<int> perm(nt);
        std::iota(perm.begin(), perm.end(), 0);
        do
        {
            double c = 0.0;
            for (size_t e = 0; e < ne; ++e)
                c += cost(e, static_cast<size_t>(perm[e]));
            if (c < best_cost)
            {
                best_cost = c;
                std::fill(best.begin(), best.end(), -1);
                for (size_t e = 0; e < ne; ++e)
                    best[static_cast<size_t>(perm[e])] = static_cast<int>(e);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return best;
}

TrialErrors score_estimates(const std::vector<ParamEstimate> &est, const std::vector<SourcePlacement> &truth,
                            double fresnel, double range_min, double range_max)
{
    std::vector<std::pair<double, double>> e, t;
    for (const auto &x : est)
        e.emplace_back(x.theta, x.phi);
    for (const auto &x : truth)
        t.emplace_back(x.azimuth_rad, x.elevation_rad);
    auto assign = match_sources(e, t);

    TrialErrors out;
    const double miss = std::pow(0.5 * pi, 2);
    double ang = 0.0, rng = 0.0;
    for (size_t i = 0; i < truth.size(); ++i)
    {
        const int a = assign[i];
        if (a < 0)
            ang += 2.0 * miss;
        else
            ang += std::pow(e[static_cast<size_t>(a)].first - t[i].first, 2) +
                   std::pow(e[static_cast<size_t>(a)].second - t[i].second, 2);
        if (classify_field(truth[i].range_m, fresnel) == FieldClass::NearField)
        {
            double r = a < 0 ? range_max : est[static_cast<size_t>(a)].range;
            r = std::isfinite(r) ? std::clamp(r, range_min, range_max) : range_max;
            rng += std::pow(r - truth[i].range_m, 2);
            ++out.near_count;
        }
    }
    out.angle_mse = ang / (2.0 * static_cast<double>(truth.size()));
    out.range_mse = out.near_count ? rng / out.near_count : 0.0;
    return out;
}

std::vector<ParamEstimate> to_params(const ChannelEstimate &est)
{
    std::vector<ParamEstimate> out;
    for (const auto &s : est.sources)
        out.push_back({s.theta, s.phi, s.range, s.field});
    return out;
}

std::vector<ParamEstimate> to_params(const OmpResult &omp)
{
    std::vector<ParamEstimate> out;
    for (const auto &l : omp.labels)
        out.push_back({l.theta, l.phi, l.range,
                       std::isinf(l.range) ? FieldClass::FarField : FieldClass::NearField});
    return out;
}

double stage1_score(const AngularSupport &support, const std::vector<SourcePlacement> &truth,
                    const ScoreOptions &opt)
{
    if (!(opt.rho >= 0.0 && opt.rho <= 1.0))
        throw DomainError("stage1_score: rho must lie in [0, 1]");
    if (support.empty())
        return opt.cap;
    double width = 0.0;
    std::vector<std::pair<double, double>> centers, t;
    for (const auto &r : support.regions)
    {
        width += rad2deg(r.azimuth.width()) + rad2deg(r.elevation.width());
        centers.emplace_back(rad2deg(r.azimuth.center()), rad2deg(r.elevation.center()));
    }
    width /= 2.0 * static_cast<double>(support.regions.size());
    for (const auto &s : truth)
        t.emplace_back(rad2deg(s.azimuth_rad), rad2deg(s.elevation_rad));

    auto assign = match_sources(centers, t);
    double mse = 0.0;
    for (size_t i = 0; i < t.size(); ++i)
    {
        double best = std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < centers.size(); ++c)
        {
            if (assign[i] >= 0 && static_cast<size_t>(assign[i]) != c)
                continue;
            best = std::min(best, std::pow(centers[c].first - t[i].first, 2) +
                                      std::pow(centers[c].second - t[i].second, 2));
        }
        mse += 0.5 * best;
    }
    mse /= static_cast<double>(t.size());
    return opt.rho * width + (1.0 - opt.rho) * mse;
}

} // namespace mela
