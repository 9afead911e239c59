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

#include "mela/estimator.hpp"

#include <vector>

namespace mela
{

// ---- Modified MUSIC --------------------------------------------------------------------------

struct MusicOptions
{
    int sub_h = 10;               // window rows (along y)
    int sub_v = 10;               // window columns (along z)
    bool forward_backward = false;
    SpectrumOptions search;       // angle grid, refinement and range grid settings
};

// Number of sub_h x sub_v windows on the lattice.
int smoothing_window_count(const MetasurfaceLayout &layout, int sub_h, int sub_v);

// Average of the window blocks of Sigma (optionally forward-backward).
CMat smoothed_covariance(const CMat &Sigma, const MetasurfaceLayout &layout, int sub_h, int sub_v,
                         bool forward_backward = false);

// Window manifold e^{j(a gamma_a + b gamma_e + a^2 beta_a + b^2 beta_e)} with centred window coordinates.
CVec window_manifold(double gamma_a, double gamma_e, double beta_a, double beta_e, int sub_h, int sub_v);

struct ParamEstimate
{
    double theta = 0.0;
    double phi = 0.0;
    double range = 0.0; // inf for far-field
    FieldClass field = FieldClass::NearField;
};

// Forward-smoothed MUSIC: angle search on the linear window manifold inside the support boxes,
// then a range search per angle on the quadratic manifold without the cross term.
std::vector<ParamEstimate> modified_music(const CMat &X, int K, const AngularSupport &support,
                                          const SystemGeometry &geom, const MusicOptions &opt = {});

// ---- Hybrid-field OMP ------------------------------------------------------------------------

struct PolarLabel
{
    double theta = 0.0;
    double phi = 0.0;
    double range = 0.0; // inf for the far-field ring
};

struct PolarDictionary
{
    CMat atoms; // N x L, unit-norm columns
    std::vector<PolarLabel> labels;
};

struct PolarDictionaryOptions
{
    double step = deg2rad(1.0);
    double margin = deg2rad(2.0);
    std::vector<double> ring_fractions = {0.125, 0.25, 0.5, 1.0}; // of the Fresnel threshold; far ring added
};

// Angle grid aligned to multiples of `step`, covering every support box widened by `margin`,
// crossed with the near rings and the far-field ring.
PolarDictionary build_polar_dictionary(const AngularSupport &support, const SystemGeometry &geom,
                                       const PolarDictionaryOptions &opt = {});

// Largest |a_i^H a_j| over distinct atoms.
double dictionary_coherence(const PolarDictionary &dict);

struct OmpResult
{
    std::vector<int> indices;
    std::vector<PolarLabel> labels;
    CMat coefficients;                 // K x T
    std::vector<double> residual_norms; // Frobenius norm after each iteration, first entry is |Y|
};

// Simultaneous OMP on the columns of Y; an empty sensing matrix means identity.
OmpResult hf_omp(const CMat &Y, const CMat &sensing, const PolarDictionary &dict, int K);

// Y = U_s Lambda_s^{1/2}: the K-column measurement used for HF-OMP.
CMat subspace_measurements(const SubspaceBundle &sub);

} // namespace mela
