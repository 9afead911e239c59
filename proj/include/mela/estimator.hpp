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

#include "mela/geometry.hpp"
#include "mela/numerics.hpp"
#include "mela/rng.hpp"
#include "mela/steering.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mela
{
// ---- Stage 1: beamspace filtering ------------------------------------------------------------

struct ScanGrid
{
    std::vector<double> azimuth;   // P samples, rad
    std::vector<double> elevation; // Q samples, rad
    CMat f;                        // P x Q measurements, f(p, q)
};

struct Interval
{
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct SupportRegion
{
    Interval azimuth;
    Interval elevation;
    double peak_azimuth = 0.0;
    double peak_elevation = 0.0;
    double peak_value = 0.0; // |f| at the peak sample
};

struct AngularSupport
{
    std::vector<Interval> azimuth;   // merged, ascending, disjoint
    std::vector<Interval> elevation; // merged, ascending, disjoint
    std::vector<SupportRegion> regions; // one box per detected peak, strongest first
    bool ok = true;
    std::string status;

    bool empty() const { return regions.empty(); }
    // True if some region box contains (theta, phi).
    bool covers(double theta, double phi) const;
};

// Uniform samples over [lo, hi] inclusive.
std::vector<double> linspace(double lo, double hi, int count);

// omega_n = k d (sin(theta_p) n_y + sin(phi_q) n_z) - arg(h_n), returned as e^{j omega_n}.
// The sign on arg(h) makes the cell phases cancel the metasurface-to-receiver phase.
CVec stage1_phase(double theta_p, double phi_q, const CVec &h_colsum, const MetasurfaceLayout &layout, double k);

// f_l = 1^T y_l for every (theta_p, phi_q); x = G s is the incident vector held fixed over the scan.
ScanGrid stage1_scan(const CMat &H, const CVec &x, const std::vector<double> &azimuth,
                     const std::vector<double> &elevation, double sigma, Rng &rng, const MetasurfaceLayout &layout,
                     double k);

// Mean per-entry power |H diag(w_l) x|^2 / M over the scan configurations.
double stage1_signal_power(const CMat &H, const CVec &x, const std::vector<double> &azimuth,
                           const std::vector<double> &elevation, const MetasurfaceLayout &layout, double k);

struct SupportOptions
{
    double decay_db = 3.0;
    int max_peaks = 0;          // 0 keeps every peak above the floor
    double floor_factor = 3.0;  // peaks must exceed floor_factor * median |f|
};

AngularSupport extract_support(const ScanGrid &grid, const SupportOptions &opt);

// ---- Stage 2: subspace and symmetry searches -------------------------------------------------

// Rows [H diag(w_1); ...; H diag(w_S)].
CMat stack_channel(const CMat &H, const std::vector<CVec> &phases);

// Least-squares estimate of x = G s from the S sub-slot observations of one snapshot.
CVec stack_and_estimate_gs(const CMat &H, const std::vector<CVec> &phases, const std::vector<CVec> &y_subslots);

// Ridge estimate (H~^H H~ + mu I)^{-1} H~^H Z for stacked observations Z (columns are snapshots).
// mu = 0 reduces to least squares.
CMat ridge_stack_estimate(const CMat &Htilde, const CMat &Z, double mu);

// (1/T2) X X^H, snapshots in columns.
CMat sample_covariance(const CMat &X);

// 0-based indices n selected by J_i (i = 1, 2, 3), one per row.
std::vector<int> selector_indices(int i, int n_h, int n_v);
RMat selector_matrix(int i, int n_h, int n_v);
LatticeCoords window_coords(int i, int n_h, int n_v);

// Diagonals of D(gamma_a, gamma_e) and E(beta_e, alpha).
CVec rotation_D(double gamma_a, double gamma_e, int n_h, int n_v);
CVec rotation_E(double beta_e, double alpha, int n_h, int n_v);

struct SubspaceBundle
{
    CMat Us;       // N x K, orthonormal
    CMat U1, U2, U3;
    int K = 0;
    RVec eigenvalues; // top K+1 (when available), descending
    double noise_floor = 0.0;
    bool weak_gap = false;
    std::string status;
};

// Optional whitening of the LS noise colouring sigma^2 (H~^H H~)^{-1}: any F with F^H F = H~^H H~.
struct Whitener
{
    CMat forward; // F
    CMat inverse; // F^{-1}
    CMat whiten(const CMat &X) const { return forward * X; }
    CMat dewhiten(const CMat &Y) const { return inverse * Y; }
    // F = R P^T from the pivoted QR of H~.
    static Whitener from_stack(const CMat &Htilde);
    // F = diag(s) V^H from H~^H H~ = V diag(s^2) V^H.
    static Whitener from_normal_eig(const CMat &V, const RVec &s);
};

SubspaceBundle signal_subspace(const CMat &Sigma, int K, const MetasurfaceLayout &layout);

// Same subspace straight from snapshots; uses the T2 x T2 Gram matrix when T2 < N.
SubspaceBundle signal_subspace_from_snapshots(const CMat &X, int K, const MetasurfaceLayout &layout,
                                              const Whitener *whitener = nullptr);

// Subspace of V Sigma_z V^H for unitary V, computed in the coordinates z = V^H x. With
// `whiten_scale` = s the eigenvectors come from diag(s) Sigma_z diag(s) and are mapped back through
// V diag(1/s), i.e. the from_normal_eig whitener.
SubspaceBundle signal_subspace_in_basis(const CMat &Sigma_z, const CMat &V, int K, const MetasurfaceLayout &layout,
                                        const RVec *whiten_scale = nullptr);

enum class SpectrumMode
{
    Gram,      // W = C(gamma)^H: 1/sqrt(det(C^H C))
    FixedWeight // fixed random W: 1/|det(W C)|
};

struct SpectrumOptions
{
    SpectrumMode mode = SpectrumMode::Gram;
    CMat W;                       // K x (4 n_h n_v), FixedWeight only
    double angle_step = deg2rad(0.25);
    double refine_tol = 1e-7;     // rad
    int range_points = 200;
    double range_min = 0.0;       // 0: 0.5 D_h
    double range_max = 0.0;       // 0: 4 x Fresnel
    double flat_ratio = 0.0;      // max/median below this means no range information (0: off)
};

// Seeded complex Gaussian K x L weight, redrawn until its condition number is below 1e3.
CMat random_weight(int K, int L, Rng &rng);

// log of the angle spectrum at (gamma_a, gamma_e).
class AngleSpectrum
{
public:
    AngleSpectrum(const SubspaceBundle &sub, const MetasurfaceLayout &layout, const SpectrumOptions &opt);
    double log_value(double gamma_a, double gamma_e) const;

private:
    int n_h_, n_v_;
    SpectrumMode mode_;
    CMat V1_; // J U_1 (exchange applied)
    CMat U3_;
    CMat W_;
};

// log of the range spectrum for C = U_1 - e^{j gamma_e} E(beta_e, alpha) U_2.
class RangeSpectrum
{
public:
    RangeSpectrum(const SubspaceBundle &sub, const MetasurfaceLayout &layout, const SpectrumOptions &opt);
    double log_value(double gamma_e, double beta_e, double alpha) const;

private:
    int n_h_, n_v_;
    SpectrumMode mode_;
    CMat U1_, U2_, W_;
};

struct AnglePeak
{
    double theta = 0.0;
    double phi = 0.0;
    double log_value = 0.0;
};

using AngleFunction = std::function<double(double theta, double phi)>;

// K strongest separated local maxima of f over the support region boxes (grid step opt.angle_step),
// each refined by a pattern search confined to its box.
std::vector<AnglePeak> support_peak_search(const AngleFunction &f, const AngularSupport &support, int K,
                                           const SpectrumOptions &opt, std::string *status = nullptr);

// support_peak_search on the angle spectrum, evaluated through (gamma_a, gamma_e).
std::vector<AnglePeak> angle_search(const AngleSpectrum &spec, const AngularSupport &support, int K, double k,
                                    double d, const SpectrumOptions &opt, std::string *status = nullptr);

struct RangeResult
{
    double range = 0.0;   // inf when the spectrum is flat or peaks at range_max
    FieldClass field = FieldClass::NearField;
    double peak_ratio = 0.0; // max/median of the linear spectrum
    std::vector<double> grid, log_values;
};

// Log-spaced grid over [range_min, range_max] then Brent refinement in log r of a log-spectrum.
// A max/median ratio below opt.flat_ratio, or a maximum at range_max, reports FarField with an
// infinite range.
RangeResult range_profile_search(const std::function<double(double)> &log_spectrum, double fresnel,
                                 double range_min, double range_max, const SpectrumOptions &opt);

RangeResult range_search(const RangeSpectrum &spec, double theta, double phi, double k, double d, double fresnel,
                         double range_min, double range_max, const SpectrumOptions &opt);

// ---- Algorithm driver ------------------------------------------------------------------------

struct SourceEstimate
{
    double theta = 0.0;
    double phi = 0.0;
    double range = 0.0;
    FieldClass field = FieldClass::NearField;
    double angle_log_peak = 0.0;
    double range_peak_ratio = 0.0;
};

struct ChannelEstimate
{
    std::vector<SourceEstimate> sources;
    AngularSupport support;
    SubspaceBundle subspace;
    std::string status;
};

// Stage 2 spectral searches on an existing subspace given the Stage-1 support.
ChannelEstimate estimate_from_subspace(const SubspaceBundle &subspace, const AngularSupport &support, int K,
                                       const SystemGeometry &geom, const SpectrumOptions &opt);

// Stage 2 on LS snapshot estimates X (N x T2) given the Stage-1 support.
ChannelEstimate estimate_from_snapshots(const CMat &X, const AngularSupport &support, int K,
                                        const SystemGeometry &geom, const SpectrumOptions &opt,
                                        const Whitener *whitener = nullptr);

} // namespace mela
