/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/eval.cpp
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
#include "facefit/eval.hpp"

#include <algorithm>
#include <cmath>

namespace facefit {

namespace {

double mean_valid_distance(const Point2Set& pred, const Point2Set& gt, const std::vector<bool>& mask)
{
    if (pred.cols() != gt.cols())
        throw DimensionError("prediction and ground-truth point counts differ");
    if (!mask.empty() && static_cast<int>(mask.size()) != pred.cols())
        throw DimensionError("mask length does not match point count");
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index c = 0; c < pred.cols(); ++c)
    {
        if (!mask.empty() && !mask[c])
            continue;
        sum += (pred.col(c) - gt.col(c)).norm();
        ++count;
    }
    if (count == 0)
        throw ParameterError("no valid points to evaluate");
    return sum / count;
}

} // namespace

double nme_lp(const Point2Set& pred, const Point2Set& gt, const std::vector<bool>& mask, const BBox& bbox)
{
    if (!(bbox.w > 0.0) || !(bbox.h > 0.0))
        throw ParameterError("bbox width and height must be positive");
    return mean_valid_distance(pred, gt, mask) / std::sqrt(bbox.w * bbox.h);
}

double nme_nf(const Point2Set& pred, const Point2Set& gt, const std::vector<bool>& mask, double interocular)
{
    if (!(interocular > 0.0))
        throw ParameterError("interocular distance must be positive");
    return mean_valid_distance(pred, gt, mask) / interocular;
}

double interocular_outer_68(const Point2Set& gt)
{
    if (gt.cols() != 68)
        throw DimensionError("outer-eye-corner interocular requires a 68-point set");
    return (gt.col(45) - gt.col(36)).norm();
}

std::vector<std::pair<double, double>> ced_curve(const std::vector<double>& errors,
                                                 const std::vector<double>& thresholds)
{
    if (errors.empty())
        throw ParameterError("ced_curve: empty error list");
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw ParameterError("ced_curve: thresholds must be sorted ascending");
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> curve;
    curve.reserve(thresholds.size());
    for (double t : thresholds)
    {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        curve.emplace_back(t, static_cast<double>(it - sorted.begin()) / sorted.size());
    }
    return curve;
}

} /* namespace facefit */
