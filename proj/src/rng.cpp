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

#include "mela/rng.hpp"

#include <cmath>

namespace mela
{
std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s)
    {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view preset, std::uint64_t trial, std::uint64_t tag)
{
    std::uint64_t h = splitmix64_mix(seed ^ 0x6D656C61ULL);
    h = splitmix64_mix(h ^ fnv1a64(preset));
    h = splitmix64_mix(h ^ trial);
    return splitmix64_mix(h ^ (tag * 0x9E3779B97F4A7C15ULL));
}

std::uint64_t Rng::next_u64()
{
    ++counter_;
    return splitmix64_mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double Rng::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log1p(-u1)); // 1 - u1 in (0, 1]
    double ang = 2.0 * pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

cd Rng::complex_normal(double variance)
{
    double s = std::sqrt(0.5 * variance);
    double re = normal();
    double im = normal();
    return {s * re, s * im};
}

cd Rng::unit_phase()
{
    double a = 2.0 * pi * uniform();
    return {std::cos(a), std::sin(a)};
}

} // namespace mela
