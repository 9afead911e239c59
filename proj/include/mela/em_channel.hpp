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
#include "mela/rng.hpp"

#include <vector>

namespace mela
{
struct IncidentField
{
    Eigen::Vector3cd E; // along (e_z x R_t) x R_t, scaled by eta
    Eigen::Vector3cd H; // along e_z x R_t
};

// Dipole fields at `point` from a z-directed source at `source` (unit I0 l), R_t = (p - t)/|p - t|.
IncidentField incident_fields(const Vec3 &source, const Vec3 &point, double k, double eta = free_space_impedance);

// cos of the angle between the xy-projection of R_t and +x; 0 when the projection vanishes.
double cos_phi_nk(const Vec3 &source, const Vec3 &point);

// z-directed equivalent surface current per unit I0 l: (1+Gamma)/(4 pi) e^{jkR}/R cos(phi_nk).
cd equivalent_current_amplitude(const Vec3 &source, const Vec3 &point, cd gamma, double k);

struct UnitCellResponse
{
    cd a_mn; // receiver aperture factor
    cd b_nk; // transmissive cell factor
};

// A = (j d_r^2/(4 pi k)) sinc(k v_y d_r/2) sinc(k v_z d_r/2), v = d_mn/|d_mn|, d_mn = t_n - r_m.
cd receiver_factor(const Vec3 &d_mn, double k, double d_r);

// B = ((1+Gamma) d_t^2/(4 pi)) sinc(k u_y d_t/2) sinc(k u_z d_t/2) cos(phi_nk), with the
// direction mismatch u = d_cn/|d_cn| - (p - t_n)/|p - t_n| and d_cn = t_n - d_c.
cd cell_factor(const Vec3 &t_n, const Vec3 &d_c, const Vec3 &source, double k, double d_t, cd gamma);

UnitCellResponse unit_cell_response(const SystemGeometry &g, int m, int n, const Vec3 &source);

// Field at receiver m through cell n from a unit source at `source`, phase omega_n applied.
cd field_closed_form(const SystemGeometry &g, int m, int n, const Vec3 &source, double omega_n);

struct QuadratureOptions
{
    int order = 16;
    bool verify = false; // recompute at 2*order, throw if the change exceeds 1e-6 relative
};

// Aperture-integral evaluation of the same field by 2-D Gauss-Legendre quadrature.
cd field_exact(const SystemGeometry &g, int m, int n, const Vec3 &source, double omega_n,
               const QuadratureOptions &opt = {});

// Same field without the far-zone linearisation: exact distances from every point of the cell
// aperture to the source and to every point of the receiver aperture (4-D tensor quadrature).
cd field_aperture_integral(const SystemGeometry &g, int m, int n, const Vec3 &source, double omega_n, int order = 8);

// Received vector with every entry from field_exact, summed over cells and sources.
CVec received_exact(const SystemGeometry &g, const std::vector<Vec3> &sources, const CVec &phase, const CVec &s,
                    const QuadratureOptions &opt = {});

CMat build_H(const SystemGeometry &g);
CMat build_G(const SystemGeometry &g, const std::vector<Vec3> &sources);

// Column k = (B_k/r_k) e^{jk d_n}: one amplitude per source (center cell), exact element distances.
CMat build_G_uniform_amplitude(const SystemGeometry &g, const std::vector<SourcePlacement> &sources);

struct DecoupledChannel
{
    CVec h_r; // e^{jk |d_c + delta_m|}
    CMat C;   // A_mn e^{-jk |d_c|} / |d_mn|
    CVec h_t; // e^{jk |d_c - t_n|}
    CMat assemble() const;
};

DecoupledChannel build_H_decoupled(const SystemGeometry &g);

// (A_c/|d_c|) h_M h_N^T, h_M = e^{jk dhat.delta_m}, h_N = e^{-jk dhat.t_n}. Rank one.
CMat build_H_farfield(const SystemGeometry &g);

// y = H diag(phase) G s + n, n ~ CN(0, sigma^2 I).
CVec received_signal(const CMat &H, const CVec &phase, const CMat &G, const CVec &s, double sigma, Rng &rng);

// |a^H b|^2 / (|a|^2 |b|^2).
double model_correlation(const CVec &a, const CVec &b);

// Squared singular values, descending, divided by the largest.
std::vector<double> dof_spectrum(const CMat &H);

// sigma from the mean noiseless per-entry power and an SNR in dB.
double noise_sigma(double signal_power, double snr_db);

} // namespace mela
