/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/study.hpp
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

#include "facefit/energy.hpp"
#include "facefit/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace facefit {

/**
 * @brief A constraint on/off comparison study over synthetic scenes.
 *
 * kind "single": per seed, one large-yaw scene with self-occlusion-masked
 * landmarks is fitted once per toggle set (LFC/CFC/PC subsets); the
 * comparison metric is the yaw error and the landmark NME against the
 * noise-free truth.
 *
 * kind "pair": per seed, a same-identity pair (image i near-frontal and
 * fully landmarked, image j at large yaw with one-profile landmarks) is
 * fitted per toggle set (SPC on/off); metrics are image j's.
 */
struct StudySpec
{
    std::string study_name = "study";
    std::string kind = "single"; // "single" or "pair"
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<TermTag>> toggle_sets;
    double yaw_min_deg = 25.0;
    double yaw_max_deg = 60.0;
    double noise_sigma = 1.0;
    int n_sift = 30;
    double init_yaw_offset_deg = 25.0;
    int contour_subsample = 3;
    int threads = 1;

    // Synthetic model parameters, or a path to a model file.
    std::string model_path;
    std::uint64_t model_seed = 1;
    int model_q = 642;
    int model_n_id = 4;
    int model_n_exp = 2;

    static StudySpec from_json_file(const std::string& path);
    void validate() const;
};

struct StudyCell
{
    std::uint64_t seed = 0;
    int toggle_index = 0;
    double yaw_true_deg = 0.0;
    double yaw_err_deg = 0.0;
    double nme = 0.0;
    bool converged = false;
    bool failed = false;
    std::string error;
};

/// Paired comparison of two toggle sets over the seeds where both succeeded.
struct StudyComparison
{
    int base_index = 0;
    int alt_index = 0;
    int n = 0;
    int wins_le_yaw = 0; // alt yaw error <= base
    int wins_lt_yaw = 0;
    int wins_le_nme = 0;
    int wins_lt_nme = 0;
};

struct StudyReport
{
    StudySpec spec;
    std::vector<StudyCell> cells; // cells[s * n_toggles + t]
    std::vector<StudyComparison> comparisons;

    const StudyCell& cell(std::size_t seed_index, std::size_t toggle_index) const;
};

std::string toggles_to_string(const std::vector<TermTag>& toggles);

/// Runs all (seed x toggle-set) cells; individual fit failures are recorded
/// in the cells, not fatal. Deterministic given the spec.
StudyReport run_study(const StudySpec& spec);

/// Writes results.csv and summary.md under out_dir (created if missing).
/// Regeneration from the same spec is byte-identical.
void write_study_report(const StudyReport& report, const std::string& out_dir);

} /* namespace facefit */
