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

#include "mela/beampattern.hpp"
#include "mela/em_channel.hpp"
#include "mela/steering.hpp"

#include <cmath>

namespace mela
{

SystemGeometry geometry_with_feeds(const SystemGeometry &g, const FeedSet &feeds)
{
    if (feeds.empty())
        throw DomainError("feed set is empty");
    std::vector<Vec3> pos;
    Vec3 centroid = Vec3::Zero();
    for (const auto &f : feeds)
    {
        if (!(f.range_m > 0.0))
            throw DomainError("feed range must be positive");
        pos.push_back(rear_point(f.range_m, f.azimuth_rad, f.elevation_rad));
        centroid += pos.back();
    }
    centroid /= static_cast<double>(feeds.size());
    SystemGeometry out = g;
    out.receiver.center_m = centroid;
    out.receiver.offsets_m.clear();
    for (const auto &p : pos)
        out.receiver.offsets_m.push_back(p - centroid);
    return out;
}

MelaPattern::MelaPattern(const SystemGeometry &g, const FeedSet &feeds, double theta_r, double phi_r)
    : geom_(geometry_with_feeds(g, feeds))
{
    const auto &s = geom_.surface;
    hsum_ = build_H(geom_).colwise().sum().conjugate().transpose();
    b_r_ = cell_factor(Vec3::Zero(), geom_.receiver.center_m, source_to_cartesian({1.0, theta_r, phi_r}), geom_.k(),
                       s.cell_side_m, s.transmission);
}

CVec MelaPattern::aggregate(double theta, double phi) const
{
    return b_r_ * steering_far(theta, phi, geom_.surface, geom_.k()).cwiseProduct(hsum_);
}

cd MelaPattern::array_factor(double theta_out, double phi_out, const CVec &w) const
{
    return aggregate(theta_out, phi_out).dot(w);
}

CVec aggregate_vector_c(double theta_r, double phi_r, const FeedSet &feeds, const SystemGeometry &g)
{
    return MelaPattern(g, feeds, theta_r, phi_r).aggregate(theta_r, phi_r);
}

CVec compensating_phases(const CVec &c)
{
    CVec w(c.size());
    for (Eigen::Index n = 0; n < c.size(); ++n)
        w(n) = c(n) == cd(0.0) ? cd(1.0) : std::polar(1.0, std::arg(c(n)));
    return w;
}

cd array_factor(double theta_out, double phi_out, const CVec &w, double theta_r, double phi_r, const FeedSet &feeds,
               const SystemGeometry &g)
{
    return MelaPattern(g, feeds, theta_r, phi_r).array_factor(theta_out, phi_out, w);
}

double half_power_width(const std::function<double(double)> &gain, double x0, double lo, double hi, double tol)
{
    const double step = deg2rad(0.1);
    auto below = [&](double x) { return 20.0 * std::log10(gain(x)) < -3.0; };
    auto crossing = [&](double dir) {
        double inside = x0;
        for (;;)
        {
            double next = inside + dir * step;
            if (next < lo || next > hi)
            {
                next = dir > 0 ? hi : lo;
                if (next == inside || !below(next))
                    throw NumericalError("half_power_width: no -3 dB crossing inside the angular range");
            }
            if (below(next))
            {
                double a = inside, b = next;
                while (std::abs(b - a) > tol)
                {
                    double m = 0.5 * (a + b);
                    (below(m) ? b : a) = m;
                }
                return 0.5 * (a + b);
            }
            inside = next;
        }
    };
    return crossing(1.0) - crossing(-1.0);
}

namespace
{
// Valid interval of the scanned angle with the other one held fixed.
std::pair<double, double> axis_limits(double fixed)
{
    double lim = 0.5 * pi - std::abs(fixed) - 1e-9;
    return {-lim, lim};
}
} // namespace

double hpbw(double theta_r, double phi_r, const FeedSet &feeds, const SystemGeometry &g, PatternAxis axis)
{
    MelaPattern pat(g, feeds, theta_r, phi_r);
    CVec w = compensating_phases(pat.aggregate(theta_r, phi_r));
    double peak = std::abs(pat.array_factor(theta_r, phi_r, w));
    if (!(peak > 0.0))
        throw NumericalError("hpbw: zero array factor at the steering direction");
    if (axis == PatternAxis::Azimuth)
    {
        auto [lo, hi] = axis_limits(phi_r);
        return half_power_width([&](double x) { return std::abs(pat.array_factor(x, phi_r, w)) / peak; }, theta_r,
                                lo, hi);
    }
    auto [lo, hi] = axis_limits(theta_r);
    return half_power_width([&](double x) { return std::abs(pat.array_factor(theta_r, x, w)) / peak; }, phi_r, lo,
                            hi);
}

double elaa_array_factor(double theta_out, double phi_out, double theta_r, double phi_r,
                         const MetasurfaceLayout &layout, double k)
{
    CVec a_out = steering_far(theta_out, phi_out, layout, k);
    CVec a_r = steering_far(theta_r, phi_r, layout, k);
    return std::abs(a_out.dot(a_r));
}

double elaa_hpbw(double theta_r, double phi_r, const MetasurfaceLayout &layout, double k, PatternAxis axis)
{
    const double peak = static_cast<double>(layout.count());
    if (axis == PatternAxis::Azimuth)
    {
        auto [lo, hi] = axis_limits(phi_r);
        return half_power_width(
            [&](double x) { return elaa_array_factor(x, phi_r, theta_r, phi_r, layout, k) / peak; }, theta_r, lo,
            hi);
    }
    auto [lo, hi] = axis_limits(theta_r);
    return half_power_width([&](double x) { return elaa_array_factor(theta_r, x, theta_r, phi_r, layout, k) / peak; },
                            phi_r, lo, hi);
}

double dirichlet_pattern(double theta_out, double phi_out, double theta_r, double phi_r,
                         const MetasurfaceLayout &layout, double k)
{
    auto D = [](int N, double psi) {
        double den = N * std::sin(0.5 * psi);
        return std::abs(den) < 1e-14 ? 1.0 : std::sin(0.5 * N * psi) / den;
    };
    const double kd = k * layout.spacing_m;
    double p1 = kd * (std::sin(theta_out) - std::sin(theta_r));
    double p2 = kd * (std::sin(phi_out) - std::sin(phi_r));
    return std::abs(D(layout.rows(), p1) * D(layout.cols(), p2));
}

ArrayFactorCurve array_factor_curve(double theta_r, double phi_r, const FeedSet &feeds, const SystemGeometry &g,
                                    PatternAxis axis, const std::vector<double> &angles)
{
    MelaPattern pat(g, feeds, theta_r, phi_r);
    CVec w = compensating_phases(pat.aggregate(theta_r, phi_r));
    double peak = std::abs(pat.array_factor(theta_r, phi_r, w));
    ArrayFactorCurve out;
    out.angles = angles;
    for (double x : angles)
    {
        cd af = axis == PatternAxis::Azimuth ? pat.array_factor(x, phi_r, w) : pat.array_factor(theta_r, x, w);
        out.normalized_power.push_back(std::norm(af) / (peak * peak));
    }
    return out;
}

HpbwSweep hpbw_vs_feed_distance(double azimuth, double elevation, const std::vector<double> &offsets,
                                const std::vector<double> &distances, double theta_r, double phi_r,
                                const SystemGeometry &g, PatternAxis axis)
{
    for (size_t i = 1; i < distances.size(); ++i)
        if (!(distances[i] > distances[i - 1]))
            throw DomainError("hpbw_vs_feed_distance: sweep must be ascending");
    HpbwSweep out;
    out.elaa_rad = elaa_hpbw(theta_r, phi_r, g.surface, g.k(), axis);
    out.far_field_marker_m = fresnel_threshold(g.surface.aperture_h(), g.surface.aperture_v(), g.lambda());
    for (double r : distances)
    {
        FeedSet feeds;
        for (double o : offsets)
            feeds.push_back({r + o, azimuth, elevation});
        out.distance_m.push_back(r);
        out.hpbw_rad.push_back(hpbw(theta_r, phi_r, feeds, g, axis));
    }
    return out;
}

} // namespace mela
