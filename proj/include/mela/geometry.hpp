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

#include "mela/types.hpp"

#include <vector>

namespace mela
{
struct Carrier
{
    double frequency_hz = 28e9;
    double wavelength_m = speed_of_light / 28e9;
    double wavenumber = 2.0 * pi / (speed_of_light / 28e9);

    static Carrier from_frequency(double frequency_hz);
};

// Cell (n_y, n_z) sits at [0, n_y d, n_z d], n_y in [-n_h, n_h], n_z in [-n_v, n_v].
struct MetasurfaceLayout
{
    int n_h = 10;
    int n_v = 10;
    double spacing_m = 0.0;
    double cell_side_m = 0.0;
    cd transmission = {1.0, 0.0};

    int rows() const { return 2 * n_h + 1; } // along y
    int cols() const { return 2 * n_v + 1; } // along z
    int count() const { return rows() * cols(); }
    double aperture_h() const { return rows() * spacing_m; }
    double aperture_v() const { return cols() * spacing_m; }
    void validate() const;
};

// Receiver element m sits at center + offsets[m].
struct ReceiverLayout
{
    Vec3 center_m = Vec3::Zero();
    std::vector<Vec3> offsets_m;
    double element_side_m = 0.0;
    double spacing_m = 0.0; // nominal element spacing, used for the aperture D1

    int count() const { return static_cast<int>(offsets_m.size()); }
    Vec3 position(int m) const { return center_m + offsets_m[static_cast<size_t>(m)]; }
    double aperture() const { return count() * spacing_m; }
    void validate() const;

    // M elements along y, centred on `center`.
    static ReceiverLayout linear(const Vec3 &center, int M, double spacing, double element_side);
};

struct SourcePlacement
{
    double range_m = 1.0;
    double azimuth_rad = 0.0;
    double elevation_rad = 0.0;
};

struct SystemGeometry
{
    Carrier carrier;
    MetasurfaceLayout surface;
    ReceiverLayout receiver;

    double k() const { return carrier.wavenumber; }
    double lambda() const { return carrier.wavelength_m; }
};

// 21 x 21 surface with lambda/2 cells at 28 GHz, and a 15-element lambda/2 receiver at `rx_center`.
SystemGeometry default_geometry(const Vec3 &rx_center);

// Cell positions, n_y outer loop, n_z inner loop.
std::vector<Vec3> element_positions(const MetasurfaceLayout &layout);

// (n_y, n_z) of cell index n in the same ordering.
std::pair<int, int> element_index(const MetasurfaceLayout &layout, int n);

// r [sqrt(cos^2 phi - sin^2 theta), sin theta, sin phi]; throws DomainError if cos^2 phi < sin^2 theta.
Vec3 source_to_cartesian(const SourcePlacement &s);

// Same parameterisation on the receiver side of the surface (negative x).
Vec3 rear_point(double range, double azimuth, double elevation);

// Inverse of source_to_cartesian for points with x >= 0.
SourcePlacement cartesian_to_source(const Vec3 &p);

bool placement_valid(double azimuth, double elevation);

double decoupling_bound(double D1, double Dh, double lambda, double eps);
double linear_bound(double D1, double Dh, double Dv, double lambda, double eps);
double fresnel_threshold(double Dh, double Dv, double lambda);

enum class FieldClass
{
    NearField,
    FarField
};

// FarField iff r > threshold.
FieldClass classify_field(double r, double threshold);
const char *to_string(FieldClass c);

} // namespace mela
