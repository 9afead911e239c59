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

#pragma once

#include "mela/baselines.hpp"
#include "mela/beampattern.hpp"
#include "mela/em_channel.hpp"
#include "mela/estimator.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mela
{

// ---- Result tables ---------------------------------------------------------------------------

enum class TableFormat
{
    TSV,
    CSV
};

struct ResultTable
{
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
    // Rectangular and finite; throws DomainError otherwise. Infinite ranges are allowed when `allow_inf`.
    void validate(bool allow_inf = false) const;
    const std::vector<double> &row(size_t i) const { return rows.at(i); }
    std::vector<double> column(const std::string &name) const;
};

// One block per table: "# <name>", header row, data rows; blocks separated by a blank line.
std::string format_tables(const std::vector<ResultTable> &tables, TableFormat format);

// ---- Overrides -------------------------------------------------------------------------------

using Overrides = std::map<std::string, std::string>;

// Typed access to overrides that remembers which keys were read.
class ParamReader
{
public:
    explicit ParamReader(Overrides o) : values_(std::move(o)) {}
    double get(const std::string &key, double fallback);
    int get_int(const std::string &key, int fallback);
    std::string get_str(const std::string &key, const std::string &fallback);
    std::vector<double> get_list(const std::string &key, const std::vector<double> &fallback);
    // Throws DomainError naming the first key that no preset parameter consumed.
    void finish() const;

private:
    Overrides values_;
    std::set<std::string> used_;
};

// Comma-separated numbers.
std::vector<double> parse_list(const std::string &text);

// `key = value` lines; '#' and ';' start comments.
Overrides read_config_file(const std::string &path);

// ---- Scenarios -------------------------------------------------------------------------------

// (azimuth, elevation) of the three reference sources, rad.
std::vector<std::pair<double, double>> reference_source_angles();

struct ScenarioConfig
{
    std::string preset = "custom";
    std::uint64_t seed = 1;
    SystemGeometry geom;
    std::vector<SourcePlacement> sources;
    int subslots = 30;            // S
    int snapshots = 500;          // T2 upper bound; smaller T2 uses the leading columns
    int scan_points = 40;         // P = Q over [-90, 90] deg
    double decay_db = 3.0;
    double floor_factor = 3.0;
    bool prewhiten = false;
    double ridge_kappa = 10.0;    // Stage-2 shrinkage mu = kappa sigma^2 / (p_x T2); 0 gives least squares
    SpectrumOptions spectrum;
};

// Receiver used by the estimation presets: 15 lambda/2 elements along y, 5 d behind the surface centre.
SystemGeometry estimation_geometry();

// Hybrid: two far sources at 5 x Fresnel and one near source; pure-near: three near sources.
ScenarioConfig hybrid_scenario();
ScenarioConfig pure_near_scenario();

// Fixed per-scenario quantities.
struct Scenario
{
    ScenarioConfig cfg;
    CMat H;          // M x N
    CMat G;          // N x K, one amplitude per source, exact per-cell distance phases
    CVec amplitude;  // per-source symbol scale r_k / |B_k|
    CVec h_colsum;   // column sums of H
    double fresnel = 0.0;
    int K() const { return static_cast<int>(cfg.sources.size()); }
};

Scenario make_scenario(const ScenarioConfig &cfg);

// Unit-modulus symbols scaled by the per-source amplitude, one column per snapshot.
CMat draw_symbols(const Scenario &sc, int count, Rng &rng);

// Stage-1 scan with noise drawn from a base CN(0,1) sequence scaled to `snr_db`.
struct Stage1Run
{
    ScanGrid grid;
    AngularSupport support;
    double signal_power = 0.0;
};

class Stage1Simulator
{
public:
    // Noiseless scan and base noise for one trial.
    Stage1Simulator(const Scenario &sc, int scan_points, std::uint64_t trial);
    Stage1Run run(double snr_db, double decay_db, double floor_factor) const;
    const CVec &incident() const { return x_; }

private:
    const Scenario &sc_;
    std::vector<double> az_, el_;
    CMat clean_, noise_;
    CVec x_;
    double power_ = 0.0;
};

// Stage-2 snapshots: X = G S, the sub-slot stack H~ and a base noise sequence.
class Stage2Simulator
{
public:
    Stage2Simulator(const Scenario &sc, std::uint64_t trial);
    // Snapshot estimates from the first `T2` sub-slot blocks at `snr_db`: ridge_stack_estimate with
    // mu = ridge_mu(snr_db, T2). snr_db = +inf returns the noiseless x.
    CMat snapshots(double snr_db, int T2) const;
    // Signal subspace of the same snapshots, assembled from cached Gram blocks (cfg.prewhiten applies).
    SubspaceBundle subspace(double snr_db, int T2) const;
    // kappa sigma^2 / (p_x T2); 0 at snr_db = +inf.
    double ridge_mu(double snr_db, int T2) const;
    const CMat &clean() const { return X_; }
    // H~^H H~ = V diag(s^2) V^H.
    const CMat &basis() const { return V_; }
    const RVec &singular_values() const { return s_; }
    // Requires cfg.prewhiten.
    const Whitener &whitener() const;
    double signal_power() const { return power_; }

private:
    struct Blocks
    {
        CMat PP, PW, WW; // (1/T2) x Gram blocks of P = V^H X and W
    };
    const Blocks &blocks(int T2) const;

    const Scenario &sc_;
    CMat X_, V_, VhX_;
    // U^H n for stacked noise n: i.i.d. CN(0, 1) in the coordinates of the left singular vectors.
    CMat W_;
    RVec s_;
    std::optional<Whitener> whitener_;
    double power_ = 0.0, px_ = 0.0;
    mutable std::map<int, Blocks> blocks_; // per T2; single-threaded use
};

// ---- Metrics ---------------------------------------------------------------------------------

// For each truth, the index of its estimate (or -1) under the assignment minimising the total
// squared angular error. Brute force over permutations.
std::vector<int> match_sources(const std::vector<std::pair<double, double>> &est,
                               const std::vector<std::pair<double, double>> &truth);

struct TrialErrors
{
    double angle_mse = 0.0; // rad^2, mean over the 2K angle components
    double range_mse = 0.0; // m^2, mean over near-field truths
    int near_count = 0;
};

// Missing estimates count as the worst case: angle error pi/2, range clamped to the grid edge.
TrialErrors score_estimates(const std::vector<ParamEstimate> &est, const std::vector<SourcePlacement> &truth,
                            double fresnel, double range_min, double range_max);

std::vector<ParamEstimate> to_params(const ChannelEstimate &est);
std::vector<ParamEstimate> to_params(const OmpResult &omp);

struct ScoreOptions
{
    double rho = 0.5;
    double cap = 180.0; // score for an empty support
};

// rho * mean box width + (1 - rho) * mean squared error of box centres, both in degrees.
double stage1_score(const AngularSupport &support, const std::vector<SourcePlacement> &truth,
                    const ScoreOptions &opt = {});

// ---- Presets ---------------------------------------------------------------------------------

const std::vector<std::string> &preset_names();

// Throws DomainError if any built-in preset default drifts from its reference value.
void check_preset_defaults();

// Tables for a preset; `overrides` may carry seed, trials, snr, and preset-specific keys.
std::vector<ResultTable> run_preset(const std::string &name, const Overrides &overrides);

// ---- Identity suite --------------------------------------------------------------------------

struct CheckResult
{
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<CheckResult> run_identity_suite();

} // namespace mela
