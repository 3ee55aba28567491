/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/solver.hpp
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
#include "facefit/common.hpp"
#include "facefit/energy.hpp"
#include "facefit/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace facefit {

/**
 * @brief Solver configuration.
 *
 * The fit alternates an outer loop, which recomputes the silhouette /
 * contour matches and keypoint-vertex lookups, with an inner damped
 * Gauss-Newton loop that keeps those correspondences frozen. Convergence is
 * declared when the parameter step across one whole outer iteration falls
 * below step_tol (energies from different outer iterations are not
 * comparable, since the correspondence sets change).
 */
struct SolveOptions
{
    int max_outer = 10;
    int max_inner = 50;
    double lm_damping_init = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.1;
    double energy_tol = 1e-8; // relative per-step energy decrease
    double step_tol = 1e-10;  // relative parameter step
    Weights weights;
    bool visible_only_sift = false;

    /// Reference point of the parameter prior term; defaults to the
    /// initialization for m and zero coefficients for p.
    std::optional<Vector8d> prior_m;
    std::optional<Eigen::VectorXd> prior_p;

    void validate() const;
};

struct TraceEntry
{
    int outer = 0;
    /// -1 marks the fresh-correspondence evaluation at the start of an outer
    /// iteration; entries >= 0 are accepted inner steps.
    int inner = -1;
    double energy = 0.0;
    double damping = 0.0;
};

struct FitResult
{
    ProjectionParams m;
    ShapeParams p;
    Pose pose;
    /// Unweighted term values (mean-squared for the normalized terms);
    /// inactive terms report 0.
    std::map<std::string, double> per_term_energies;
    int outer_iterations = 0;
    std::vector<TraceEntry> trace;
    bool converged = false;
};

/// Bbox-based default initialization: zero rotation, scale matching the
/// box width against the projected mean-shape width, translation centering
/// the projected mean in the box, zero coefficients.
std::pair<ProjectionParams, ShapeParams> init_from_bbox(const MorphableModel& model, const BBox& bbox);

/**
 * Fits one image by minimizing the weighted sum of the active residual
 * terms over (m, p). Contour matching runs only when lambda_c > 0 and
 * contour points are present; with lambda_c = 0 the computation is bitwise
 * identical to omitting the contour points.
 *
 * Throws InitializationError for a non-finite initial energy and
 * DegenerateCameraError if damping exceeds 1e12 while rejecting
 * degenerate-camera steps.
 */
FitResult fit_single(const MorphableModel& model, const Observations& obs, const ProjectionParams& init_m,
                     const ShapeParams& init_p, const SolveOptions& opts);

/**
 * Joint fit of an image pair coupled by matched keypoints: one damped
 * Gauss-Newton system over [m_i; p_i; m_j; p_j], with keypoint-vertex
 * lookups refreshed at outer iterations. With no matches or lambda_s = 0
 * the problem decouples and this delegates to two independent fit_single
 * calls.
 */
std::pair<FitResult, FitResult> fit_pair(const MorphableModel& model, const Observations& obs_i,
                                         const Observations& obs_j, const KeypointPair& pair,
                                         const ProjectionParams& init_m_i, const ShapeParams& init_p_i,
                                         const ProjectionParams& init_m_j, const ShapeParams& init_p_j,
                                         const SolveOptions& opts);

} /* namespace facefit */
