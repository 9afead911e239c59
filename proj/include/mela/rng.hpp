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

#include <cstdint>
#include <string_view>

namespace mela
{
// Counter-based SplitMix64 stream.
//
// Value i of a stream with key K is mix(K + (i + 1) * 0x9E3779B97F4A7C15), where mix is the
// SplitMix64 finalizer. Streams are keyed by stream_key(seed, preset, trial, tag), so any
// trial can be regenerated independently of all others and of the worker count.
//   uniform():  (x >> 11) * 2^-53, in [0, 1)
//   normal():   Box-Muller on two uniforms, cosine branch then sine branch
class Rng
{
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // N(0, 1)
    cd complex_normal(double variance);    // CN(0, variance)
    cd unit_phase();                       // e^{j 2 pi U}

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64_mix(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t stream_key(std::uint64_t seed, std::string_view preset, std::uint64_t trial, std::uint64_t tag);

// Stream tags used by the harness.
enum StreamTag : std::uint64_t
{
    tag_geometry = 1,
    tag_symbols = 2,
    tag_stage1_noise = 3,
    tag_stage2_phase = 4,
    tag_stage2_noise = 5,
    tag_weights = 6,
    tag_feeds = 7,
    tag_misc = 8,
    tag_stage2_symbols = 9
};

} // namespace mela
