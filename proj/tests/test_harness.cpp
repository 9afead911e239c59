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

#include "mela/harness.hpp"

#include <cmath>
#include <fstream>
#include <limits>

// Covered tests:
// - Result tables: validation, column access, TSV and CSV layout
// - Override parsing: lists, config files, unknown keys
// - Source matching and trial scoring, including misses and far estimates
// - Stage-1 score: exact boxes, width term, empty support cap
// - Stage-2 simulator: noiseless snapshots, cached subspace vs explicit snapshots
// - Preset defaults and byte-identical reruns under a fixed seed

using namespace mela;

TEST_CASE("Harness - Tables")
{
    ResultTable t{"demo", {"a", "b"}, {}};
    t.add_row({1.0, 2.5});
    t.add_row({3.0, -4.0});
    CHECK(t.column("b") == std::vector<double>{2.5, -4.0});
    CHECK_NOTHROW(t.validate());
    CHECK_THROWS_AS(t.column("c"), DomainError);
    const std::string tsv = format_tables({t}, TableFormat::TSV);
    CHECK(tsv.rfind("# demo\na\tb\n1", 0) == 0);
    const std::string csv = format_tables({t}, TableFormat::CSV);
    CHECK(csv.find("a,b\n") != std::string::npos);
    CHECK(format_tables({t, t}, TableFormat::TSV).find("\n\n# demo") != std::string::npos);

    ResultTable bad{"bad", {"a"}, {{std::numeric_limits<double>::infinity()}}};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    CHECK_NOTHROW(bad.validate(true));
    ResultTable nan{"nan", {"a"}, {{std::nan("")}}};
    CHECK_THROWS_AS(nan.validate(true), DomainError);
}

TEST_CASE("Harness - Overrides")
{
    CHECK(parse_list("1, -2.5,3e1") == std::vector<double>{1.0, -2.5, 30.0});
    CHECK_THROWS_AS(parse_list("1,x"), DomainError);

    ParamReader p({{"seed", "7"}, {"snr", "0,5"}, {"typo", "1"}});
    CHECK(p.get("seed", 1.0) == 7.0);
    CHECK(p.get_list("snr", {}) == std::vector<double>{0.0, 5.0});
    CHECK(p.get_int("trials", 3) == 3);
    CHECK_THROWS_AS(p.finish(), DomainError);
    CHECK_THROWS_AS(run_preset("fig7_dof", {{"no_such_key", "1"}}), DomainError);
    CHECK_THROWS_AS(run_preset("no_such_preset", {}), DomainError);

    const std::string path = "mela_test_config.ini";
    {
        std::ofstream f(path);
        f << "# comment\nseed = 12\n; other\ntrials=4 # trailing\n";
    }
    auto o = read_config_file(path);
    CHECK(o.at("seed") == "12");
    CHECK(o.at("trials") == "4");
    CHECK(o.size() == 2);
    std::remove(path.c_str());
}

TEST_CASE("Harness - Matching and scoring")
{
    std::vector<std::pair<double, double>> truth = {{0.1, 0.0}, {-0.3, 0.2}, {0.5, -0.1}};
    std::vector<std::pair<double, double>> est = {{0.49, -0.1}, {0.11, 0.0}};
    auto m = match_sources(est, truth);
    CHECK(m == std::vector<int>{1, -1, 0});

    const double F = 4.72;
    std::vector<SourcePlacement> src = {{2.0, 0.1, 0.0}, {20.0, -0.3, 0.2}};
    std::vector<ParamEstimate> exact = {{-0.3, 0.2, std::numeric_limits<double>::infinity(), FieldClass::FarField},
                                        {0.1, 0.0, 2.0, FieldClass::NearField}};
    auto e0 = score_estimates(exact, src, F, 0.05, 18.9);
    CHECK(e0.angle_mse == 0.0);
    CHECK(e0.range_mse == 0.0);
    CHECK(e0.near_count == 1);

    std::vector<ParamEstimate> off = {{0.1 + 0.01, 0.0, 2.5, FieldClass::NearField}};
    auto e1 = score_estimates(off, src, F, 0.05, 18.9);
    CHECK(std::abs(e1.angle_mse - (1e-4 + 2.0 * std::pow(pi / 2, 2)) / 4.0) < 1e-12);
    CHECK(std::abs(e1.range_mse - 0.25) < 1e-12);

    // A far-field verdict on a near truth is clamped to the top of the range grid.
    std::vector<ParamEstimate> far = {{0.1, 0.0, std::numeric_limits<double>::infinity(), FieldClass::FarField}};
    CHECK(std::abs(score_estimates(far, src, F, 0.05, 18.9).range_mse - std::pow(18.9 - 2.0, 2)) < 1e-12);
}

TEST_CASE("Harness - Stage-1 score")
{
    std::vector<SourcePlacement> truth = {{1.0, deg2rad(10.0), deg2rad(-5.0)}, {1.0, deg2rad(-20.0), deg2rad(3.0)}};
    auto make = [&](double half_deg, double shift_deg) {
        AngularSupport s;
        for (const auto &t : truth)
        {
            SupportRegion r;
            const double a = t.azimuth_rad + deg2rad(shift_deg), e = t.elevation_rad;
            r.azimuth = {a - deg2rad(half_deg), a + deg2rad(half_deg)};
            r.elevation = {e - deg2rad(half_deg), e + deg2rad(half_deg)};
            s.regions.push_back(r);
        }
        return s;
    };
    CHECK(std::abs(stage1_score(make(0.0, 0.0), truth)) < 1e-12);
    ScoreOptions o;
    o.rho = 0.3;
    const double s1 = stage1_score(make(1.0, 0.0), truth, o), s2 = stage1_score(make(3.0, 0.0), truth, o);
    CHECK(std::abs((s2 - s1) - o.rho * 4.0) < 1e-9);
    // Centre offset of 2 degrees in azimuth: mean squared error 0.5 * 2^2.
    CHECK(std::abs(stage1_score(make(0.0, 2.0), truth, o) - (1.0 - o.rho) * 2.0) < 1e-9);
    CHECK(stage1_score(AngularSupport{}, truth) == 180.0);
    o.rho = 1.5;
    CHECK_THROWS_AS(stage1_score(make(1.0, 0.0), truth, o), DomainError);
}

TEST_CASE("Harness - Stage-2 simulator")
{
    ScenarioConfig cfg = hybrid_scenario();
    cfg.snapshots = 40;
    Scenario sc = make_scenario(cfg);
    Stage2Simulator sim(sc, 0);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK((sim.snapshots(inf, 40) - sim.clean()).norm() < 1e-9 * sim.clean().norm());
    CHECK(sim.ridge_mu(inf, 40) == 0.0);
    CHECK(std::abs(sim.ridge_mu(10.0, 20) / sim.ridge_mu(10.0, 40) - 2.0) < 1e-12);
    CHECK(std::abs(sim.ridge_mu(0.0, 40) / sim.ridge_mu(10.0, 40) - 10.0) < 1e-9);
    CHECK_THROWS_AS(sim.whitener(), DomainError);

    for (double snr : {0.0, 20.0})
    {
        auto a = sim.subspace(snr, 30);
        auto b = signal_subspace_from_snapshots(sim.snapshots(snr, 30), sc.K(), sc.cfg.geom.surface);
        CHECK((a.Us * a.Us.adjoint() - b.Us * b.Us.adjoint()).norm() < 1e-8);
    }
    // Same seed and trial give the same draws.
    Stage2Simulator again(sc, 0);
    CHECK((again.snapshots(5.0, 10) - sim.snapshots(5.0, 10)).norm() == 0.0);
    Stage2Simulator other(sc, 1);
    CHECK((other.snapshots(5.0, 10) - sim.snapshots(5.0, 10)).norm() > 0.0);
}

TEST_CASE("Harness - Presets and determinism")
{
    CHECK_NOTHROW(check_preset_defaults());
    CHECK(preset_names().size() == 8);
    const Overrides o = {{"seed", "3"}, {"trials", "3"}};
    const auto a = format_tables(run_preset("fig8_scan", o), TableFormat::TSV);
    const auto b = format_tables(run_preset("fig8_scan", o), TableFormat::TSV);
    CHECK(a == b);
    const auto c = format_tables(run_preset("fig8_scan", {{"seed", "4"}, {"trials", "3"}}), TableFormat::TSV);
    CHECK(a != c);
    const auto d1 = format_tables(run_preset("fig7_dof", {}), TableFormat::CSV);
    CHECK(d1 == format_tables(run_preset("fig7_dof", {}), TableFormat::CSV));
}
