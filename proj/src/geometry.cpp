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

#include "mela/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mela
{
Carrier Carrier::from_frequency(double frequency_hz)
{
    if (!(frequency_hz > 0.0))
        throw DomainError("carrier frequency must be positive");
    Carrier c;
    c.frequency_hz = frequency_hz;
    c.wavelength_m = speed_of_light / frequency_hz;
    c.wavenumber = 2.0 * pi / c.wavelength_m;
    return c;
}

void MetasurfaceLayout::validate() const
{
    if (n_h < 0 || n_v < 0)
        throw DomainError("metasurface half-sizes must be nonnegative");
    if (!(spacing_m > 0.0) || !(cell_side_m > 0.0))
        throw DomainError("metasurface spacing and cell side must be positive");
    if (cell_side_m > spacing_m * (1.0 + 1e-12))
        throw DomainError("metasurface cells overlap (cell side exceeds spacing)");
}

void ReceiverLayout::validate() const
{
    if (offsets_m.empty())
        throw DomainError("receiver needs at least one element");
    if (!(element_side_m > 0.0))
        throw DomainError("receiver element side must be positive");
    Vec3 mean = Vec3::Zero();
    double scale = 0.0;
    for (const auto &o : offsets_m)
    {
        mean += o;
        scale = std::max(scale, o.norm());
    }
    mean /= static_cast<double>(offsets_m.size());
    if (mean.norm() > 1e-9 * std::max(scale, 1.0))
        throw DomainError("receiver offsets must be centred on the array center");
}

ReceiverLayout ReceiverLayout::linear(const Vec3 &center, int M, double spacing, double element_side)
{
    if (M < 1)
        throw DomainError("receiver needs at least one element");
    ReceiverLayout r;
    r.center_m = center;
    r.element_side_m = element_side;
    r.spacing_m = spacing;
    r.offsets_m.reserve(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m)
        r.offsets_m.emplace_back(0.0, (m - 0.5 * (M - 1)) * spacing, 0.0);
    return r;
}

SystemGeometry default_geometry(const Vec3 &rx_center)
{
    SystemGeometry g;
    g.carrier = Carrier::from_frequency(28e9);
    double d = 0.5 * g.carrier.wavelength_m;
    g.surface.n_h = 10;
    g.surface.n_v = 10;
    g.surface.spacing_m = d;
    g.surface.cell_side_m = d;
    g.receiver = ReceiverLayout::linear(rx_center, 15, d, d);
    return g;
}

std::vector<Vec3> element_positions(const MetasurfaceLayout &layout)
{
    std::vector<Vec3> out;
    out.reserve(static_cast<size_t>(layout.count()));
    for (int ny = -layout.n_h; ny <= layout.n_h; ++ny)
        for (int nz = -layout.n_v; nz <= layout.n_v; ++nz)
            out.emplace_back(0.0, ny * layout.spacing_m, nz * layout.spacing_m);
    return out;
}

std::pair<int, int> element_index(const MetasurfaceLayout &layout, int n)
{
    int cols = layout.cols();
    return {n / cols - layout.n_h, n % cols - layout.n_v};
}

bool placement_valid(double azimuth, double elevation)
{
    double c = std::cos(elevation), s = std::sin(azimuth);
    return c * c - s * s >= -1e-15;
}

Vec3 source_to_cartesian(const SourcePlacement &s)
{
    if (!(s.range_m > 0.0))
        throw DomainError("source range must be positive");
    double c = std::cos(s.elevation_rad), a = std::sin(s.azimuth_rad);
    double rad = c * c - a * a;
    if (rad < -1e-15)
        throw DomainError("invalid source angles: cos^2(elevation) < sin^2(azimuth)");
    return s.range_m * Vec3(std::sqrt(std::max(rad, 0.0)), a, std::sin(s.elevation_rad));
}

Vec3 rear_point(double range, double azimuth, double elevation)
{
    Vec3 p = source_to_cartesian({range, azimuth, elevation});
    p.x() = -p.x();
    return p;
}

SourcePlacement cartesian_to_source(const Vec3 &p)
{
    double r = p.norm();
    if (!(r > 0.0))
        throw DomainError("cannot convert the origin to a source placement");
    return {r, std::asin(std::clamp(p.y() / r, -1.0, 1.0)), std::asin(std::clamp(p.z() / r, -1.0, 1.0))};
}

double decoupling_bound(double D1, double Dh, double lambda, double eps)
{
    return pi * D1 * Dh / (2.0 * lambda * eps);
}

double linear_bound(double D1, double Dh, double Dv, double lambda, double eps)
{
    return pi * ((Dh + D1) * (Dh + D1) + Dv * Dv) / (4.0 * lambda * eps);
}

double fresnel_threshold(double Dh, double Dv, double lambda)
{
    return 2.0 * (Dh * Dh + Dv * Dv) / lambda;
}

FieldClass classify_field(double r, double threshold)
{
    return r > threshold ? FieldClass::FarField : FieldClass::NearField;
}

const char *to_string(FieldClass c)
{
    return c == FieldClass::FarField ? "far" : "near";
}

} // namespace mela
