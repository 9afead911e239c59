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

#include <catch_amalgamated.hpp>

#include "mela/rng.hpp"

#include <cmath>
#include <set>

// Covered tests:
// - SplitMix64 finalizer and FNV-1a against published reference values
// - Stream reproducibility and independence of keys
// - Uniform range, normal and complex normal moments
// - Unit-phase modulus

using namespace mela;

TEST_CASE("RNG - Reference values")
{
    // Standard SplitMix64 with state 0: the first two outputs.
    Rng r(0);
    CHECK(r.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(r.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
}

TEST_CASE("RNG - Reproducible and keyed streams")
{
    const auto k1 = stream_key(7, "fig10_mse", 3, tag_stage2_noise);
    CHECK(k1 == stream_key(7, "fig10_mse", 3, tag_stage2_noise));
    std::set<std::uint64_t> keys = {k1, stream_key(8, "fig10_mse", 3, tag_stage2_noise),
                                    stream_key(7, "fig11_compare", 3, tag_stage2_noise),
                                    stream_key(7, "fig10_mse", 4, tag_stage2_noise),
                                    stream_key(7, "fig10_mse", 3, tag_stage2_phase)};
    CHECK(keys.size() == 5);

    Rng a(k1), b(k1);
    for (int i = 0; i < 100; ++i)
        CHECK(a.normal() == b.normal());
    CHECK(a.counter() == b.counter());
}

TEST_CASE("RNG - Distributions")
{
    Rng r(stream_key(1, "test", 0, tag_misc));
    const int n = 20000;
    double umin = 1.0, umax = 0.0, m = 0.0, v = 0.0, cv = 0.0;
    for (int i = 0; i < n; ++i)
    {
        double u = r.uniform();
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    CHECK(umin >= 0.0);
    CHECK(umax < 1.0);
    for (int i = 0; i < n; ++i)
    {
        double x = r.normal();
        m += x / n;
        v += x * x / n;
    }
    CHECK(std::abs(m) < 0.03);
    CHECK(std::abs(v - 1.0) < 0.05);
    for (int i = 0; i < n; ++i)
        cv += std::norm(r.complex_normal(2.0)) / n;
    CHECK(std::abs(cv - 2.0) < 0.1);
    for (int i = 0; i < 100; ++i)
        CHECK(std::abs(std::abs(r.unit_phase()) - 1.0) < 1e-14);
    for (int i = 0; i < 100; ++i)
    {
        double u = r.uniform(-2.0, 3.0);
        CHECK(u >= -2.0);
        CHECK(u < 3.0);
    }
}
