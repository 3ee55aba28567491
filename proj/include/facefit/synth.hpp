/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/synth.hpp
 *
 * Copyright 2026 The facefit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "facefit/camera.hpp"
#include "facefit/correspondence.hpp"
#include "facefit/energy.hpp"
#include "facefit/model.hpp"

#include <cstdint>

namespace facefit {

/**
 * @brief One synthetic image with known ground truth.
 *
 * With noise_sigma = 0 the observations equal the model-generated
 * projections exactly; the bbox is the tight box of all projected vertices
 * padded by 5% of each extent (2.5% per side). Landmarks whose vertex is
 * back-facing at the true pose are masked invalid, emulating self-occlusion.
 */
struct SyntheticScene
{
    ProjectionParams truth_m;
    ShapeParams truth_p;
    Observations observations;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

/// A coupled pair of scenes sharing identity/expression coefficients, with
/// matched keypoints sampled at vertices front-facing in both poses.
struct PairScene
{
    SyntheticScene image_i;
    SyntheticScene image_j;
    KeypointPair keypoints;
    std::vector<int> truth_vertex_ids; // sorted, one per keypoint column
};

/**
 * Generates one scene: landmarks are the projected markup vertices plus iid
 * Gaussian noise, contour points are every contour_subsample-th silhouette
 * vertex of the true shape (projected, plus noise). Deterministic in seed.
 */
SyntheticScene generate_scene(const MorphableModel& model, const Pose& pose, const ShapeParams& p,
                              double noise_sigma, std::uint64_t seed,
                              const std::string& markup_name = "pts68", int contour_subsample = 3);

/**
 * Generates a same-identity pair: both scenes share p, and n_sift keypoints
 * are sampled among vertices front-facing in both poses (their true vertex
 * ids are retained for oracle checks). Throws ParameterError listing the
 * achievable count when fewer than n_sift vertices qualify.
 */
PairScene generate_pair(const MorphableModel& model, const Pose& pose_i, const Pose& pose_j,
                        const ShapeParams& shared_p, int n_sift, double noise_sigma, std::uint64_t seed,
                        const std::string& markup_name = "pts68", int contour_subsample = 3);

} /* namespace facefit */
