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

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace mela
{

namespace
{

// Reference values of the default system and of each preset.
constexpr double ref_frequency_hz = 28e9;
constexpr int ref_cells_per_axis = 21;
constexpr int ref_receivers = 15;
constexpr int ref_scan_points = 40;
constexpr double ref_scan_snr_db = -5.0;
constexpr double ref_decay_db = 3.0;
constexpr int ref_sources = 3;
constexpr int ref_subslots = 30;
constexpr int ref_smoothing_windows = 144;

std::uint64_t read_seed(ParamReader &p)
{
    double s = p.get("seed", 1.0);
    if (s < 0.0 || s != std::floor(s) || s > 9007199254740992.0)
        throw DomainError("seed must be a non-negative integer");
    return static_cast<std::uint64_t>(s);
}

int read_positive(ParamReader &p, const std::string &key, int fallback)
{
    int v = p.get_int(key, fallback);
    if (v < 1)
        throw DomainError("override " + key + " must be positive");
    return v;
}

std::vector<double> default_snr_grid()
{
    return {-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0};
}

double median(std::vector<double> v)
{
    if (v.empty())
        throw DomainError("median of an empty set");
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    size_t i = static_cast<size_t>(pos);
    if (i + 1 >= v.size())
        return v.back();
    return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

// ---- fig6_correlation ----

std::vector<ResultTable> fig6_correlation(ParamReader &p)
{
    const std::uint64_t seed = read_seed(p);
    const int trials = read_positive(p, "trials", 25);
    const auto dists = p.get_list("distances", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.375, 4.0, 4.725, 5.0, 6.0, 7.0,
                                                8.0, 9.3, 10.0, 12.0, 15.0, 20.0});
    const double th = deg2rad(p.get("rx_azimuth_deg", 20.0));
    const double ph = deg2rad(p.get("rx_elevation_deg", 10.0));
    const double spacing = p.get("rx_spacing_lambda", 0.5);
    const int order = read_positive(p, "quad_order", 16);
    const auto ranges = p.get_list("source_ranges", {3.0, 4.0, 5.0});
    p.finish();

    SystemGeometry g0 = default_geometry(Vec3::Zero());
    const double lam = g0.lambda();
    auto ang = reference_source_angles();
    if (ranges.size() != ang.size())
        throw DomainError("source_ranges needs one range per reference source");
    std::vector<Vec3> pts;
    for (size_t i = 0; i < ang.size(); ++i)
        pts.push_back(source_to_cartesian({ranges[i], ang[i].first, ang[i].second}));

    // Single-draw correlations are heavy-tailed in the phase draw; the median is the reported curve.
    ResultTable corr{"fig6_correlation",
                     {"distance_m", "rho_approx", "rho_decoupled", "rho_far", "mean_approx", "mean_decoupled",
                      "mean_far"},
                     {}};
    const int N = g0.surface.count();
    for (double D : dists)
    {
        if (!(D > 0.0))
            throw DomainError("distances must be positive");
        SystemGeometry g = g0;
        g.receiver = ReceiverLayout::linear(rear_point(D, th, ph), ref_receivers, spacing * lam, 0.5 * lam);
        const int M = g.receiver.count();
        CMat G = build_G(g, pts);
        CMat Hc = build_H(g), Hd = build_H_decoupled(g).assemble(), Hf = build_H_farfield(g);
        std::vector<CMat> T(pts.size(), CMat(M, N));
        for (size_t kk = 0; kk < pts.size(); ++kk)
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < N; ++n)
                    T[kk](m, n) = field_exact(g, m, n, pts[kk], 0.0, {order, false});

        std::vector<double> ra, rd, rf;
        for (int t = 0; t < trials; ++t)
        {
            Rng rng(stream_key(seed, "fig6_correlation", static_cast<std::uint64_t>(t), tag_stage2_phase));
            CVec w(N), s(static_cast<Eigen::Index>(pts.size()));
            for (int n = 0; n < N; ++n)
                w(n) = rng.unit_phase();
            for (Eigen::Index kk = 0; kk < s.size(); ++kk)
                s(kk) = rng.unit_phase();
            CVec y = CVec::Zero(M);
            for (size_t kk = 0; kk < pts.size(); ++kk)
                y += T[kk] * w * s(static_cast<Eigen::Index>(kk));
            CVec x = w.cwiseProduct(G * s);
            ra.push_back(model_correlation(y, Hc * x));
            rd.push_back(model_correlation(y, Hd * x));
            rf.push_back(model_correlation(y, Hf * x));
        }
        auto mean = [](const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
        corr.add_row({D, median(ra), median(rd), median(rf), mean(ra), mean(rd), mean(rf)});
    }

    const double D1 = ref_receivers * spacing * lam, Dh = g0.surface.aperture_h(), Dv = g0.surface.aperture_v();
    ResultTable marks{"fig6_markers", {"decoupling_bound_m", "linear_bound_m", "fresnel_m"}, {}};
    marks.add_row({decoupling_bound(D1, Dh, lam, pi / 8.0), linear_bound(D1, Dh, Dv, lam, pi / 8.0),
                   fresnel_threshold(Dh, Dv, lam)});
    return {corr, marks};
}

// ---- fig7_dof ----

struct DofSummary
{
    double dominance;
    int count;
    double effective;
};

DofSummary summarize_dof(const CMat &H, double threshold)
{
    auto e = dof_spectrum(H);
    double sum = 0.0, sq = 0.0;
    int cnt = 0;
    for (double v : e)
    {
        sum += v;
        if (v > threshold)
            ++cnt;
    }
    for (double v : e)
        sq += (v / sum) * (v / sum);
    return {1.0 / sum, cnt, 1.0 / sq};
}

std::vector<ResultTable> fig7_dof(ParamReader &p)
{
    const auto dc_mult = p.get_list("dc_multiples", {5.0, 10.0, 100.0, 500.0});
    const auto dt_mult = p.get_list("dt_lambda", {1.0, 2.0, 5.0, 20.0});
    const double threshold = p.get("threshold", 0.01);
    const double dc_fixed = p.get("dt_sweep_distance_lambda", 10.0);
    p.finish();

    SystemGeometry g0 = default_geometry(Vec3::Zero());
    const double lam = g0.lambda(), d = g0.surface.spacing_m;

    ResultTable top{"fig7_distance", {"dc_over_d", "dc_m", "dominance", "count_above", "effective_dof"}, {}};
    for (double m : dc_mult)
    {
        SystemGeometry g = g0;
        g.receiver = ReceiverLayout::linear(rear_point(m * d, 0.0, 0.0), ref_receivers, lam, d);
        auto s = summarize_dof(build_H(g), threshold);
        top.add_row({m, m * d, s.dominance, static_cast<double>(s.count), s.effective});
    }

    ResultTable bottom{"fig7_element_size", {"dt_over_lambda", "count_above", "dominance", "effective_dof"}, {}};
    for (double m : dt_mult)
    {
        const double dt = m * lam;
        SystemGeometry g = g0;
        g.surface.spacing_m = dt;
        g.surface.cell_side_m = dt;
        g.receiver = ReceiverLayout::linear(rear_point(dc_fixed * lam, 0.0, 0.0), ref_receivers, dt, dt);
        auto s = summarize_dof(build_H(g), threshold);
        bottom.add_row({m, static_cast<double>(s.count), s.dominance, s.effective});
    }
    return {top, bottom};
}

// ---- Stage-1 presets ----

std::vector<ResultTable> fig8_scan(ParamReader &p)
{
    ScenarioConfig cfg = hybrid_scenario();
    cfg.preset = "fig8_scan";
    cfg.seed = read_seed(p);
    const int trials = read_positive(p, "trials", 500);
    const double snr = p.get("snr", ref_scan_snr_db);
    cfg.scan_points = read_positive(p, "scan_points", ref_scan_points);
    cfg.decay_db = p.get("decay_db", ref_decay_db);
    cfg.floor_factor = p.get("floor_factor", cfg.floor_factor);
    p.finish();
    Scenario sc = make_scenario(cfg);

    ResultTable scan{"fig8_scan", {"azimuth_deg", "elevation_deg", "power_db"}, {}};
    ResultTable support{"fig8_support",
                        {"region", "azimuth_lo_deg", "azimuth_hi_deg", "elevation_lo_deg", "elevation_hi_deg",
                         "peak_azimuth_deg", "peak_elevation_deg"},
                        {}};
    std::vector<int> hits(sc.cfg.sources.size(), 0);
    for (int t = 0; t < trials; ++t)
    {
        Stage1Simulator sim(sc, cfg.scan_points, static_cast<std::uint64_t>(t));
        auto run = sim.run(snr, cfg.decay_db, cfg.floor_factor);
        for (size_t i = 0; i < hits.size(); ++i)
            if (run.support.covers(cfg.sources[i].azimuth_rad, cfg.sources[i].elevation_rad))
                ++hits[i];
        if (t != 0)
            continue;
        const double peak = run.grid.f.cwiseAbs().maxCoeff();
        for (size_t i = 0; i < run.grid.azimuth.size(); ++i)
            for (size_t j = 0; j < run.grid.elevation.size(); ++j)
                scan.add_row({rad2deg(run.grid.azimuth[i]), rad2deg(run.grid.elevation[j]),
                              20.0 * std::log10(std::max(std::abs(run.grid.f(static_cast<Eigen::Index>(i),
                                                                             static_cast<Eigen::Index>(j))) /
                                                             peak,
                                                         1e-300))});
        for (size_t r = 0; r < run.support.regions.size(); ++r)
        {
            const auto &reg = run.support.regions[r];
            support.add_row({static_cast<double>(r), rad2deg(reg.azimuth.lo), rad2deg(reg.azimuth.hi),
                             rad2deg(reg.elevation.lo), rad2deg(reg.elevation.hi), rad2deg(reg.peak_azimuth),
                             rad2deg(reg.peak_elevation)});
        }
    }
    ResultTable cover{"fig8_coverage", {"source", "azimuth_deg", "elevation_deg", "coverage", "trials"}, {}};
    for (size_t i = 0; i < hits.size(); ++i)
        cover.add_row({static_cast<double>(i), rad2deg(cfg.sources[i].azimuth_rad),
                       rad2deg(cfg.sources[i].elevation_rad), static_cast<double>(hits[i]) / trials,
                       static_cast<double>(trials)});
    return {scan, support, cover};
}

std::vector<ResultTable> fig9_score(ParamReader &p)
{
    ScenarioConfig cfg = hybrid_scenario();
    cfg.preset = "fig9_score";
    cfg.seed = read_seed(p);
    const int trials = read_positive(p, "trials", 500);
    const double snr = p.get("snr", ref_scan_snr_db);
    const auto thresholds = p.get_list("thresholds_db", {2.0, 3.0, 6.0, 8.0});
    const auto points = p.get_list("scan_points", {10.0, 20.0, 30.0, 40.0, 60.0, 91.0});
    ScoreOptions so;
    so.rho = p.get("rho", so.rho);
    so.cap = p.get("cap", so.cap);
    p.finish();
    Scenario sc = make_scenario(cfg);

    std::vector<std::string> cols = {"scan_points", "samples"};
    for (double t : thresholds)
        cols.push_back(fmt::format("score_{:g}db", t));
    ResultTable out{"fig9_score", cols, {}};
    for (double pts : points)
    {
        const int P = static_cast<int>(pts);
        if (P < 3 || P != pts)
            throw DomainError("scan_points must be integers >= 3");
        std::vector<double> acc(thresholds.size(), 0.0);
        for (int t = 0; t < trials; ++t)
        {
            Stage1Simulator sim(sc, P, static_cast<std::uint64_t>(t));
            for (size_t i = 0; i < thresholds.size(); ++i)
                acc[i] += stage1_score(sim.run(snr, thresholds[i], cfg.floor_factor).support, cfg.sources, so);
        }
        std::vector<double> row = {pts, pts * pts};
        for (double a : acc)
            row.push_back(a / trials);
        out.add_row(row);
    }
    return {out};
}

// ---- Stage-2 presets ----

struct MseAccumulator
{
    std::vector<double> angle, range;
    explicit MseAccumulator(size_t n) : angle(n, 0.0), range(n, 0.0) {}
};

double range_floor(const SystemGeometry &g, const SpectrumOptions &o)
{
    return o.range_min > 0.0 ? o.range_min : 0.5 * g.surface.aperture_h();
}

double range_ceiling(const SystemGeometry &g, const SpectrumOptions &o)
{
    return o.range_max > 0.0 ? o.range_max
                             : 4.0 * fresnel_threshold(g.surface.aperture_h(), g.surface.aperture_v(), g.lambda());
}

ScenarioConfig read_stage2_common(ParamReader &p, ScenarioConfig cfg, const std::string &preset,
                                  std::uint64_t seed)
{
    cfg.preset = preset;
    cfg.seed = seed;
    cfg.subslots = read_positive(p, "subslots", ref_subslots);
    cfg.scan_points = read_positive(p, "scan_points", ref_scan_points);
    cfg.decay_db = p.get("decay_db", ref_decay_db);
    cfg.prewhiten = p.get_int("prewhiten", 0) != 0;
    cfg.ridge_kappa = p.get("ridge_kappa", cfg.ridge_kappa);
    if (!(cfg.ridge_kappa >= 0.0))
        throw DomainError("ridge_kappa must be non-negative");
    cfg.spectrum.flat_ratio = p.get("flat_ratio", cfg.spectrum.flat_ratio);
    cfg.spectrum.angle_step = deg2rad(p.get("angle_step_deg", rad2deg(cfg.spectrum.angle_step)));
    return cfg;
}

ChannelEstimate run_proposed(const Scenario &sc, const Stage2Simulator &s2, const AngularSupport &support,
                             double snr, int T2)
{
    if (support.empty())
        return estimate_from_snapshots(CMat(), support, sc.K(), sc.cfg.geom, sc.cfg.spectrum);
    return estimate_from_subspace(s2.subspace(snr, T2), support, sc.K(), sc.cfg.geom, sc.cfg.spectrum);
}

std::vector<ResultTable> fig10_mse(ParamReader &p)
{
    const std::uint64_t seed = read_seed(p);
    const int trials = read_positive(p, "trials", 200);
    const auto snrs = p.get_list("snr", default_snr_grid());
    const auto t2s = p.get_list("t2", {100.0, 500.0});
    ScenarioConfig hy = hybrid_scenario(), nr = pure_near_scenario();
    const double near_hybrid = p.get("hybrid_near_range", hy.sources[1].range_m);
    const auto near_ranges = p.get_list("near_ranges", {nr.sources[0].range_m, nr.sources[1].range_m,
                                                        nr.sources[2].range_m});
    hy = read_stage2_common(p, hy, "fig10_mse", seed);
    nr = read_stage2_common(p, nr, "fig10_mse", seed);
    p.finish();
    hy.sources[1].range_m = near_hybrid;
    if (near_ranges.size() != nr.sources.size())
        throw DomainError("near_ranges needs one range per source");
    for (size_t i = 0; i < near_ranges.size(); ++i)
        nr.sources[i].range_m = near_ranges[i];
    int t2max = 0;
    for (double t : t2s)
    {
        if (t < 1 || t != std::floor(t))
            throw DomainError("t2 values must be positive integers");
        t2max = std::max(t2max, static_cast<int>(t));
    }
    hy.snapshots = nr.snapshots = t2max;

    const std::vector<std::pair<std::string, Scenario>> scen = {{"hybrid", make_scenario(hy)},
                                                                {"near", make_scenario(nr)}};
    const size_t cols = scen.size() * t2s.size();
    std::vector<MseAccumulator> acc(snrs.size(), MseAccumulator(cols));
    for (size_t si = 0; si < scen.size(); ++si)
    {
        const Scenario &sc = scen[si].second;
        const double rmin = range_floor(sc.cfg.geom, sc.cfg.spectrum), rmax = range_ceiling(sc.cfg.geom, sc.cfg.spectrum);
        for (int t = 0; t < trials; ++t)
        {
            Stage1Simulator s1(sc, sc.cfg.scan_points, static_cast<std::uint64_t>(t));
            Stage2Simulator s2(sc, static_cast<std::uint64_t>(t));
            for (size_t i = 0; i < snrs.size(); ++i)
            {
                auto support = s1.run(snrs[i], sc.cfg.decay_db, sc.cfg.floor_factor).support;
                for (size_t j = 0; j < t2s.size(); ++j)
                {
                    auto est = run_proposed(sc, s2, support, snrs[i], static_cast<int>(t2s[j]));
                    auto e = score_estimates(to_params(est), sc.cfg.sources, sc.fresnel, rmin, rmax);
                    acc[i].angle[si * t2s.size() + j] += e.angle_mse / trials;
                    acc[i].range[si * t2s.size() + j] += e.range_mse / trials;
                }
            }
        }
    }
    std::vector<std::string> names = {"snr_db"};
    for (const auto &s : scen)
        for (double t : t2s)
            names.push_back(fmt::format("{}_t{:g}", s.first, t));
    ResultTable ang{"fig10_angle_mse", names, {}}, rng{"fig10_range_mse", names, {}};
    for (size_t i = 0; i < snrs.size(); ++i)
    {
        std::vector<double> a = {snrs[i]}, r = {snrs[i]};
        a.insert(a.end(), acc[i].angle.begin(), acc[i].angle.end());
        r.insert(r.end(), acc[i].range.begin(), acc[i].range.end());
        ang.add_row(a);
        rng.add_row(r);
    }
    return {ang, rng};
}

// Two-column (SNR_dB, value) text; '#' comments.
std::vector<std::pair<double, double>> read_crb_table(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw DomainError("cannot open CRB table " + path);
    std::vector<std::pair<double, double>> out;
    std::string line;
    while (std::getline(in, line))
    {
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        std::istringstream ss(line);
        double a, b;
        if (!(ss >> a))
            continue;
        if (!(ss >> b))
            throw DomainError("CRB table line needs two numbers: " + line);
        out.emplace_back(a, b);
    }
    std::sort(out.begin(), out.end());
    if (out.empty())
        throw DomainError("CRB table is empty");
    return out;
}

double interpolate(const std::vector<std::pair<double, double>> &tab, double x)
{
    if (x <= tab.front().first)
        return tab.front().second;
    for (size_t i = 1; i < tab.size(); ++i)
        if (x <= tab[i].first)
        {
            double w = (x - tab[i - 1].first) / (tab[i].first - tab[i - 1].first);
            return tab[i - 1].second + w * (tab[i].second - tab[i - 1].second);
        }
    return tab.back().second;
}

std::vector<ResultTable> fig11_compare(ParamReader &p)
{
    const std::uint64_t seed = read_seed(p);
    const int trials = read_positive(p, "trials", 200);
    const auto snrs = p.get_list("snr", default_snr_grid());
    const int T2 = read_positive(p, "t2", 100);
    const std::string crb_path = p.get_str("crb_file", "");
    ScenarioConfig cfg = read_stage2_common(p, hybrid_scenario(), "fig11_compare", seed);
    MusicOptions mo;
    mo.sub_h = read_positive(p, "music_window", mo.sub_h);
    mo.sub_v = mo.sub_h;
    mo.forward_backward = p.get_int("music_forward_backward", 0) != 0;
    PolarDictionaryOptions po;
    po.step = deg2rad(p.get("omp_step_deg", rad2deg(po.step)));
    po.margin = deg2rad(p.get("omp_margin_deg", rad2deg(po.margin)));
    p.finish();
    cfg.snapshots = T2;
    mo.search = cfg.spectrum;

    Scenario sc = make_scenario(cfg);
    const double rmin = range_floor(cfg.geom, cfg.spectrum), rmax = range_ceiling(cfg.geom, cfg.spectrum);
    std::vector<std::array<double, 3>> ang(snrs.size(), {0.0, 0.0, 0.0}), rng(snrs.size(), {0.0, 0.0, 0.0});
    double coherence = std::numeric_limits<double>::quiet_NaN();
    for (int t = 0; t < trials; ++t)
    {
        Stage1Simulator s1(sc, cfg.scan_points, static_cast<std::uint64_t>(t));
        Stage2Simulator s2(sc, static_cast<std::uint64_t>(t));
        for (size_t i = 0; i < snrs.size(); ++i)
        {
            auto support = s1.run(snrs[i], cfg.decay_db, cfg.floor_factor).support;
            std::array<std::vector<ParamEstimate>, 3> est;
            auto prop = run_proposed(sc, s2, support, snrs[i], T2);
            est[0] = to_params(prop);
            if (!support.empty())
            {
                est[1] = modified_music(s2.snapshots(snrs[i], T2), sc.K(), support, cfg.geom, mo);
                // Noise-only regions can lie entirely outside the physical angle set; no atoms means no estimates.
                auto dict = build_polar_dictionary(support, cfg.geom, po);
                const int atoms = static_cast<int>(dict.atoms.cols());
                if (t == 0 && i == 0 && atoms > 1)
                    coherence = dictionary_coherence(dict);
                if (atoms > 0)
                    est[2] = to_params(
                        hf_omp(subspace_measurements(prop.subspace), CMat(), dict, std::min(sc.K(), atoms)));
            }
            for (size_t m = 0; m < 3; ++m)
            {
                auto e = score_estimates(est[m], cfg.sources, sc.fresnel, rmin, rmax);
                ang[i][m] += e.angle_mse / trials;
                rng[i][m] += e.range_mse / trials;
            }
        }
    }

    std::vector<std::string> cols = {"snr_db", "proposed", "modified_music", "hf_omp"};
    std::vector<std::pair<double, double>> crb;
    if (!crb_path.empty())
    {
        crb = read_crb_table(crb_path);
        cols.push_back("crb");
    }
    ResultTable ta{"fig11_angle_mse", cols, {}}, tr{"fig11_range_mse", {"snr_db", "proposed", "modified_music", "hf_omp"}, {}};
    for (size_t i = 0; i < snrs.size(); ++i)
    {
        std::vector<double> a = {snrs[i], ang[i][0], ang[i][1], ang[i][2]};
        if (!crb.empty())
            a.push_back(interpolate(crb, snrs[i]));
        ta.add_row(a);
        tr.add_row({snrs[i], rng[i][0], rng[i][1], rng[i][2]});
    }
    ResultTable meta{"fig11_dictionary", {"coherence", "step_deg", "margin_deg"}, {}};
    meta.add_row({std::isnan(coherence) ? -1.0 : coherence, rad2deg(po.step), rad2deg(po.margin)});
    return {ta, tr, meta};
}

// ---- Beam pattern presets ----

struct FeedDirection
{
    double azimuth, elevation;
};

FeedDirection draw_feed_direction(std::uint64_t seed, const std::string &preset, std::uint64_t draw,
                                  double max_angle)
{
    Rng rng(stream_key(seed, preset, draw, tag_feeds));
    for (;;)
    {
        double a = rng.uniform(-max_angle, max_angle), e = rng.uniform(-max_angle, max_angle);
        if (placement_valid(a, e))
            return {a, e};
    }
}

FeedSet feeds_at(const std::vector<double> &ranges, const FeedDirection &dir)
{
    FeedSet f;
    for (double r : ranges)
        f.push_back({r, dir.azimuth, dir.elevation});
    return f;
}

std::vector<ResultTable> fig5_hpbw(ParamReader &p)
{
    const std::uint64_t seed = read_seed(p);
    const int draws = read_positive(p, "trials", 25);
    const double th_r = deg2rad(p.get("steer_azimuth_deg", 45.0));
    const double ph_r = deg2rad(p.get("steer_elevation_deg", 0.0));
    const double max_angle = deg2rad(p.get("feed_max_angle_deg", 30.0));
    const auto near = p.get_list("near_ranges", {0.04, 0.05, 0.06});
    const auto far = p.get_list("far_ranges", {2.5, 2.6, 2.7});
    p.finish();

    SystemGeometry g = default_geometry(Vec3::Zero());
    const double elaa = elaa_hpbw(th_r, ph_r, g.surface, g.k(), PatternAxis::Azimuth);
    ResultTable per{"fig5_draws", {"draw", "feed_azimuth_deg", "feed_elevation_deg", "near_hpbw_deg", "far_hpbw_deg"}, {}};
    std::vector<double> hn, hf;
    for (int i = 0; i < draws; ++i)
    {
        auto dir = draw_feed_direction(seed, "fig5_hpbw", static_cast<std::uint64_t>(i), max_angle);
        double a = hpbw(th_r, ph_r, feeds_at(near, dir), g, PatternAxis::Azimuth);
        double b = hpbw(th_r, ph_r, feeds_at(far, dir), g, PatternAxis::Azimuth);
        hn.push_back(rad2deg(a));
        hf.push_back(rad2deg(b));
        per.add_row({static_cast<double>(i), rad2deg(dir.azimuth), rad2deg(dir.elevation), hn.back(), hf.back()});
    }
    ResultTable sum{"fig5_hpbw",
                    {"elaa_deg", "mela_near_deg", "mela_far_deg", "near_p10_deg", "near_p90_deg", "far_p10_deg",
                     "far_p90_deg"},
                    {}};
    sum.add_row({rad2deg(elaa), median(hn), median(hf), quantile(hn, 0.1), quantile(hn, 0.9), quantile(hf, 0.1),
                 quantile(hf, 0.9)});

    auto dir = draw_feed_direction(seed, "fig5_hpbw", 0, max_angle);
    std::vector<double> angles;
    for (double a = -20.0; a <= 20.0 + 1e-9; a += 0.1)
        angles.push_back(th_r + deg2rad(a));
    auto cn = array_factor_curve(th_r, ph_r, feeds_at(near, dir), g, PatternAxis::Azimuth, angles);
    auto cf = array_factor_curve(th_r, ph_r, feeds_at(far, dir), g, PatternAxis::Azimuth, angles);
    ResultTable curve{"fig5_pattern", {"azimuth_deg", "elaa", "mela_near", "mela_far"}, {}};
    const double n2 = std::pow(static_cast<double>(g.surface.count()), 2);
    for (size_t i = 0; i < angles.size(); ++i)
        curve.add_row({rad2deg(angles[i]),
                       std::pow(elaa_array_factor(angles[i], ph_r, th_r, ph_r, g.surface, g.k()), 2) / n2,
                       cn.normalized_power[i], cf.normalized_power[i]});
    return {sum, per, curve};
}

std::vector<ResultTable> fig6_hpbw_sweep(ParamReader &p)
{
    const std::uint64_t seed = read_seed(p);
    const double th_r = deg2rad(p.get("steer_azimuth_deg", 45.0));
    const double ph_r = deg2rad(p.get("steer_elevation_deg", 0.0));
    const double max_angle = deg2rad(p.get("feed_max_angle_deg", 30.0));
    const auto offsets = p.get_list("m3_offsets", {0.0, 0.1, 0.2});
    const double step = p.get("multiple_step", 0.5);
    const double last = p.get("multiple_max", 50.0);
    p.finish();
    if (!(step > 0.0) || !(last >= step))
        throw DomainError("invalid sweep multiples");

    SystemGeometry g = default_geometry(Vec3::Zero());
    const double diag = std::hypot(g.surface.aperture_h(), g.surface.aperture_v());
    std::vector<double> dists;
    for (int i = 1; i * step <= last + 1e-9; ++i)
        dists.push_back(diag * i * step);
    auto dir = draw_feed_direction(seed, "fig6_hpbw_sweep", 0, max_angle);
    auto m1 = hpbw_vs_feed_distance(dir.azimuth, dir.elevation, {0.0}, dists, th_r, ph_r, g, PatternAxis::Azimuth);
    auto m3 = hpbw_vs_feed_distance(dir.azimuth, dir.elevation, offsets, dists, th_r, ph_r, g, PatternAxis::Azimuth);
    ResultTable out{"fig6_hpbw_sweep", {"distance_m", "hpbw_m1_deg", "hpbw_m3_deg", "elaa_deg", "far_field_marker_m"}, {}};
    for (size_t i = 0; i < dists.size(); ++i)
        out.add_row({dists[i], rad2deg(m1.hpbw_rad[i]), rad2deg(m3.hpbw_rad[i]), rad2deg(m1.elaa_rad),
                     m1.far_field_marker_m});
    return {out};
}

using PresetFn = std::function<std::vector<ResultTable>(ParamReader &)>;

const std::vector<std::pair<std::string, PresetFn>> &registry()
{
    static const std::vector<std::pair<std::string, PresetFn>> r = {
        {"fig6_correlation", fig6_correlation}, {"fig7_dof", fig7_dof},
        {"fig8_scan", fig8_scan},               {"fig9_score", fig9_score},
        {"fig10_mse", fig10_mse},               {"fig11_compare", fig11_compare},
        {"fig5_hpbw", fig5_hpbw},               {"fig6_hpbw_sweep", fig6_hpbw_sweep}};
    return r;
}

void require(bool ok, const std::string &what)
{
    if (!ok)
        throw DomainError("preset default drifted: " + what);
}

} // namespace

const std::vector<std::string> &preset_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto &e : registry())
            n.push_back(e.first);
        return n;
    }();
    return names;
}

void check_preset_defaults()
{
    SystemGeometry g = default_geometry(Vec3::Zero());
    require(g.carrier.frequency_hz == ref_frequency_hz, "carrier frequency");
    require(g.surface.rows() == ref_cells_per_axis && g.surface.cols() == ref_cells_per_axis, "surface size");
    require(std::abs(g.surface.spacing_m - 0.5 * g.lambda()) < 1e-15, "cell spacing");
    require(g.receiver.count() == ref_receivers, "receiver count");
    ScenarioConfig hy = hybrid_scenario(), nr = pure_near_scenario();
    require(hy.scan_points == ref_scan_points && hy.decay_db == ref_decay_db, "scan grid and threshold");
    require(static_cast<int>(hy.sources.size()) == ref_sources && static_cast<int>(nr.sources.size()) == ref_sources,
            "source count");
    require(hy.subslots == ref_subslots, "sub-slot count");
    auto ang = reference_source_angles();
    for (size_t i = 0; i < ang.size(); ++i)
        require(hy.sources[i].azimuth_rad == ang[i].first && hy.sources[i].elevation_rad == ang[i].second,
                "source angles");
    int far = 0, near = 0;
    const double F = fresnel_threshold(g.surface.aperture_h(), g.surface.aperture_v(), g.lambda());
    for (const auto &s : hy.sources)
        (classify_field(s.range_m, F) == FieldClass::FarField ? far : near)++;
    require(far == 2 && near == 1, "hybrid field mix");
    for (const auto &s : nr.sources)
        require(classify_field(s.range_m, F) == FieldClass::NearField, "pure near-field mix");
    require(smoothing_window_count(g.surface, 10, 10) == ref_smoothing_windows, "smoothing window count");
}

std::vector<ResultTable> run_preset(const std::string &name, const Overrides &overrides)
{
    check_preset_defaults();
    for (const auto &[n, fn] : registry())
        if (n == name)
        {
            ParamReader p(overrides);
            auto tables = fn(p);
            for (const auto &t : tables)
                t.validate();
            return tables;
        }
    throw DomainError("unknown preset '" + name + "'");
}

} // namespace mela
