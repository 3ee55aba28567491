/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/eval.hpp
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

#include <string>
#include <vector>

namespace facefit {

/// One per-image evaluation row.
struct ErrorRecord
{
    std::string image_id;
    double nme = 0.0;
    std::string metric_kind; // "lp" or "nf"
    int n_points = 0;
};

/**
 * Large-pose normalized mean error: mean Euclidean landmark distance over
 * valid points, divided by sqrt(w*h) of the face box.
 *
 * Throws ParameterError for an empty mask or nonpositive box.
 */
double nme_lp(const Point2Set& pred, const Point2Set& gt, const std::vector<bool>& mask, const BBox& bbox);

/// Near-frontal normalized mean error: mean valid-point distance divided by
/// the inter-ocular distance.
double nme_nf(const Point2Set& pred, const Point2Set& gt, const std::vector<bool>& mask,
              double interocular);

/// Outer-eye-corner distance of a 68-point ground-truth set (columns 36 and
/// 45, zero-based).
double interocular_outer_68(const Point2Set& gt);

/**
 * Cumulative error distribution: for each threshold (ascending), the
 * fraction of errors <= threshold (inclusive). Throws ParameterError for an
 * empty error list or unsorted thresholds.
 */
std::vector<std::pair<double, double>> ced_curve(const std::vector<double>& errors,
                                                 const std::vector<double>& thresholds);

} /* namespace facefit */
