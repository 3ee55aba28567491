/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/io.hpp
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

#include "facefit/common.hpp"
#include "facefit/correspondence.hpp"
#include "facefit/energy.hpp"
#include "facefit/eval.hpp"
#include "facefit/solver.hpp"
#include "facefit/synth.hpp"

#include <optional>
#include <string>
#include <vector>

namespace facefit {

/**
 * Landmark CSV: one `x,y,valid` row per landmark in markup order, with an
 * optional `# bbox x y w h` header line. Lines starting with '#' other than
 * the bbox header are comments.
 */
struct LandmarkFile
{
    Point2Set points;
    std::vector<bool> valid;
    std::optional<BBox> bbox;
};

LandmarkFile read_landmarks_csv(const std::string& path);
void write_landmarks_csv(const std::string& path, const Point2Set& points, const std::vector<bool>& valid,
                         const std::optional<BBox>& bbox);

/// Edge-point CSV: one `x,y` row per point.
Point2Set read_points_csv(const std::string& path);
void write_points_csv(const std::string& path, const Point2Set& points);

/// Keypoint match CSV: one `xi,yi,xj,yj` row per matched pair.
KeypointPair read_matches_csv(const std::string& path);
void write_matches_csv(const std::string& path, const KeypointPair& pair);

/// Fit result JSON (pose angles in degrees for readability; APIs use radians).
std::string fit_result_to_json(const FitResult& result);
void write_fit_result(const std::string& path, const FitResult& result);

/// Scene ground-truth side-file (JSON).
void write_truth_json(const std::string& path, const SyntheticScene& scene);
struct TruthFile
{
    ProjectionParams m;
    Eigen::VectorXd p_id;
    Eigen::VectorXd p_exp;
};
TruthFile read_truth_json(const std::string& path);

/// Per-image evaluation records CSV: `image_id,metric,nme,n_points`.
void write_error_records_csv(const std::string& path, const std::vector<ErrorRecord>& records);

/// CED CSV: `threshold,fraction`.
void write_ced_csv(const std::string& path, const std::vector<std::pair<double, double>>& curve);

/// Deterministic shortest-roundtrip formatting for doubles (used by all CSV
/// writers so identical values always serialize identically).
std::string format_double(double value);

} /* namespace facefit */
