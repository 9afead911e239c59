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

#include <utility>
#include <vector>

namespace mela
{
// Phase parameters of the quadratic (Fresnel) manifold:
//   gamma_a = -k d sin(theta)          gamma_e = -k d sin(phi)
//   beta_a  =  k d^2 cos^2(theta)/(2r) beta_e  =  k d^2 cos^2(phi)/(2r)
//   alpha   = -k d^2 sin(theta) sin(phi)/r
struct SteeringParams
{
    double gamma_a = 0.0;
    double gamma_e = 0.0;
    double beta_a = 0.0;
    double beta_e = 0.0;
    double alpha = 0.0;
    double range_m = 0.0; // 0 or inf drops the global e^{jkr} factor
};

using LatticeCoords = std::vector<std::pair<int, int>>;

SteeringParams params_from_geometry(double r, double theta, double phi, double k, double d);
SteeringParams params_far(double theta, double phi, double k, double d);

// Inverse maps for the range; throw DomainError when the coefficient vanishes.
double range_from_beta_e(double beta_e, double phi, double k, double d);
double range_from_alpha(double alpha, double theta, double phi, double k, double d);

// (theta, phi) from (gamma_a, gamma_e); arguments outside [-1, 1] are clamped.
std::pair<double, double> angles_from_gammas(double gamma_a, double gamma_e, double k, double d);

double exact_distance(double r, double theta, double phi, int ny, int nz, double d);
double taylor_distance(double r, double theta, double phi, int ny, int nz, double d);

// Lattice coordinates in canonical (y-major) order.
LatticeCoords lattice_coords(const MetasurfaceLayout &layout);

// Per-entry phase n_y gamma_a + n_z gamma_e + n_y^2 beta_a + n_z^2 beta_e + n_y n_z alpha.
double manifold_phase(const SteeringParams &p, int ny, int nz);

// e^{j manifold_phase} e^{jkr} over arbitrary coordinates.
CVec steering_on(const SteeringParams &p, const LatticeCoords &coords, double k);

CVec steering_near(const SteeringParams &p, const MetasurfaceLayout &layout, double k);
CVec steering_far(double theta, double phi, const MetasurfaceLayout &layout, double k);

// e^{jk d_n} with the exact element distance.
CVec steering_exact(double r, double theta, double phi, const MetasurfaceLayout &layout, double k);

} // namespace mela
