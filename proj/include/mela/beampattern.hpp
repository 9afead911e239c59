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

#include <functional>
#include <vector>

namespace mela
{

// Feed antenna behind the surface at rear_point(range, azimuth, elevation).
struct Feed
{
    double range_m = 1.0;
    double azimuth_rad = 0.0;
    double elevation_rad = 0.0;
};

using FeedSet = std::vector<Feed>;

enum class PatternAxis
{
    Azimuth,
    Elevation
};

struct ArrayFactorCurve
{
    std::vector<double> angles;           // rad, along the chosen axis
    std::vector<double> normalized_power; // |AF|^2 / AF_max^2
};

// Copy of `g` whose receiver elements are the feeds (element side = receiver element side).
SystemGeometry geometry_with_feeds(const SystemGeometry &g, const FeedSet &feeds);

// Transmit-mode pattern of the surface illuminated by a feed set.
class MelaPattern
{
public:
    // B_r is the centre-cell factor toward the steering direction (theta_r, phi_r), r_r = 1.
    MelaPattern(const SystemGeometry &g, const FeedSet &feeds, double theta_r, double phi_r);

    // c = (B_r / r_r) alpha(theta, phi) (.) sum_m h_m, h_m the m-th column of H^H.
    CVec aggregate(double theta, double phi) const;
    // c(theta_out, phi_out)^H w.
    cd array_factor(double theta_out, double phi_out, const CVec &w) const;
    const CVec &feed_sum() const { return hsum_; }

private:
    SystemGeometry geom_;
    CVec hsum_;
    cd b_r_;
};

CVec aggregate_vector_c(double theta_r, double phi_r, const FeedSet &feeds, const SystemGeometry &g);

// e^{j arg(c_n)}, with phase 0 for zero entries.
CVec compensating_phases(const CVec &c);

cd array_factor(double theta_out, double phi_out, const CVec &w, double theta_r, double phi_r, const FeedSet &feeds,
               const SystemGeometry &g);

// Width in rad between the -3 dB crossings of 20 log10(gain) around x0, where gain(x0) = 1.
// Marches outward in 0.1 deg steps, then bisects each crossing to `tol` rad.
// Throws NumericalError if a side has no crossing inside the valid angular range.
double half_power_width(const std::function<double(double)> &gain, double x0, double lo, double hi,
                        double tol = deg2rad(1e-5));

// HPBW of the compensated MELA pattern along `axis`, in rad.
double hpbw(double theta_r, double phi_r, const FeedSet &feeds, const SystemGeometry &g, PatternAxis axis);

// Uniform-amplitude, phase-steered array on the same lattice.
double elaa_array_factor(double theta_out, double phi_out, double theta_r, double phi_r,
                         const MetasurfaceLayout &layout, double k);
double elaa_hpbw(double theta_r, double phi_r, const MetasurfaceLayout &layout, double k, PatternAxis axis);

// Closed-form normalized uniform pattern |D_Nh(psi_1) D_Nv(psi_2)|, D_N(psi) = sin(N psi/2)/(N sin(psi/2)),
// psi_1 = k d (sin theta_out - sin theta_r), psi_2 = k d (sin phi_out - sin phi_r).
double dirichlet_pattern(double theta_out, double phi_out, double theta_r, double phi_r,
                         const MetasurfaceLayout &layout, double k);

ArrayFactorCurve array_factor_curve(double theta_r, double phi_r, const FeedSet &feeds, const SystemGeometry &g,
                                    PatternAxis axis, const std::vector<double> &angles);

struct HpbwSweep
{
    std::vector<double> distance_m;
    std::vector<double> hpbw_rad;
    double elaa_rad = 0.0;
    double far_field_marker_m = 0.0; // 2 (D_h^2 + D_v^2) / lambda
};

// Feed m sits at range r + offsets[m] in direction (azimuth, elevation) for every sweep value r.
HpbwSweep hpbw_vs_feed_distance(double azimuth, double elevation, const std::vector<double> &offsets,
                                const std::vector<double> &distances, double theta_r, double phi_r,
                                const SystemGeometry &g, PatternAxis axis);

} // namespace mela
