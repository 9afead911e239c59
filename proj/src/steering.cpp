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

#include "mela/steering.hpp"

#include <algorithm>
#include <cmath>

namespace mela
{
SteeringParams params_from_geometry(double r, double theta, double phi, double k, double d)
{
    if (!(r > 0.0))
        throw DomainError("steering: range must be positive");
    SteeringParams p;
    double st = std::sin(theta), sp = std::sin(phi);
    double ct = std::cos(theta), cp = std::cos(phi);
    p.gamma_a = -k * d * st;
    p.gamma_e = -k * d * sp;
    p.range_m = r;
    if (std::isinf(r))
        return p;
    p.beta_a = k * d * d * ct * ct / (2.0 * r);
    p.beta_e = k * d * d * cp * cp / (2.0 * r);
    p.alpha = -k * d * d * st * sp / r;
    return p;
}

SteeringParams params_far(double theta, double phi, double k, double d)
{
    SteeringParams p;
    p.gamma_a = -k * d * std::sin(theta);
    p.gamma_e = -k * d * std::sin(phi);
    return p;
}

double range_from_beta_e(double beta_e, double phi, double k, double d)
{
    double c = std::cos(phi);
    if (c * c < 1e-12)
        throw DomainError("range_from_beta_e: cos(phi) vanishes, beta_e carries no range");
    if (!(beta_e > 0.0))
        throw DomainError("range_from_beta_e: beta_e must be positive");
    return k * d * d * c * c / (2.0 * beta_e);
}

double range_from_alpha(double alpha, double theta, double phi, double k, double d)
{
    double s = std::sin(theta) * std::sin(phi);
    if (std::abs(s) < 1e-12)
        throw DomainError("range_from_alpha: sin(theta) sin(phi) vanishes, alpha carries no range");
    if (alpha == 0.0)
        throw DomainError("range_from_alpha: alpha is zero");
    return -k * d * d * s / alpha;
}

std::pair<double, double> angles_from_gammas(double gamma_a, double gamma_e, double k, double d)
{
    double sa = std::clamp(-gamma_a / (k * d), -1.0, 1.0);
    double se = std::clamp(-gamma_e / (k * d), -1.0, 1.0);
    return {std::asin(sa), std::asin(se)};
}

double exact_distance(double r, double theta, double phi, int ny, int nz, double d)
{
    double rad = r * r - 2.0 * r * std::sin(theta) * ny * d - 2.0 * r * std::sin(phi) * nz * d +
                 (double(ny) * ny + double(nz) * nz) * d * d;
    if (rad < 0.0)
        throw DomainError("exact_distance: negative radicand");
    return std::sqrt(rad);
}

double taylor_distance(double r, double theta, double phi, int ny, int nz, double d)
{
    double st = std::sin(theta), sp = std::sin(phi);
    double ct = std::cos(theta), cp = std::cos(phi);
    return r - d * (st * ny + sp * nz) - d * d * st * sp * ny * nz / r +
           d * d / (2.0 * r) * (ct * ct * ny * ny + cp * cp * nz * nz);
}

LatticeCoords lattice_coords(const MetasurfaceLayout &layout)
{
    LatticeCoords c;
    c.reserve(static_cast<size_t>(layout.count()));
    for (int ny = -layout.n_h; ny <= layout.n_h; ++ny)
        for (int nz = -layout.n_v; nz <= layout.n_v; ++nz)
            c.emplace_back(ny, nz);
    return c;
}

double manifold_phase(const SteeringParams &p, int ny, int nz)
{
    double y = ny, z = nz;
    return y * p.gamma_a + z * p.gamma_e + y * y * p.beta_a + z * z * p.beta_e + y * z * p.alpha;
}

CVec steering_on(const SteeringParams &p, const LatticeCoords &coords, double k)
{
    double global = (p.range_m > 0.0 && std::isfinite(p.range_m)) ? k * p.range_m : 0.0;
    CVec v(static_cast<Eigen::Index>(coords.size()));
    for (size_t i = 0; i < coords.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = std::polar(1.0, manifold_phase(p, coords[i].first, coords[i].second) + global);
    return v;
}

CVec steering_near(const SteeringParams &p, const MetasurfaceLayout &layout, double k)
{
    return steering_on(p, lattice_coords(layout), k);
}

CVec steering_far(double theta, double phi, const MetasurfaceLayout &layout, double k)
{
    return steering_on(params_far(theta, phi, k, layout.spacing_m), lattice_coords(layout), k);
}

CVec steering_exact(double r, double theta, double phi, const MetasurfaceLayout &layout, double k)
{
    CVec v(layout.count());
    Eigen::Index i = 0;
    for (int ny = -layout.n_h; ny <= layout.n_h; ++ny)
        for (int nz = -layout.n_v; nz <= layout.n_v; ++nz)
            v(i++) = std::polar(1.0, k * exact_distance(r, theta, phi, ny, nz, layout.spacing_m));
    return v;
}

} // namespace mela
