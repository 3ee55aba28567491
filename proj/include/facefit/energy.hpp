/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/energy.hpp
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
#include "facefit/correspondence.hpp"
#include "facefit/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace facefit {

/// The four residual terms of the fitting energy.
enum class TermTag
{
    PC,  ///< parameter prior: deviation from reference (m, p)
    LFC, ///< landmark fitting: projected markup vertices vs. labeled landmarks
    CFC, ///< contour fitting: projected silhouette vertices vs. image edge points
    SPC  ///< keypoint pairing: cross-mapped matched keypoints of an image pair
};

const char* term_name(TermTag tag);

/// Per-term weights of the total energy. Defaults follow the library-wide
/// convention (lm, s, c) = (5, 1, 1) with a unit parameter prior.
struct Weights
{
    double lambda_pr = 1.0;
    double lambda_lm = 5.0;
    double lambda_c = 1.0;
    double lambda_s = 1.0;

    double for_tag(TermTag tag) const;
};

/// Everything observed for one image: labeled landmarks with a validity
/// mask, optional pre-filtered contour points, and the face box.
struct Observations
{
    std::string markup_name;
    Point2Set landmarks;             // 2xL, markup order
    std::vector<bool> landmark_mask; // invalid landmarks are excluded from all sums
    Point2Set contour_points;        // 2xLc, may be empty
    BBox bbox;

    int valid_landmark_count() const;
};

/**
 * @brief One least-squares term: residual values with analytic Jacobians
 * w.r.t. the camera 8-vector and the [id; exp] coefficient vector.
 *
 * Residual entries carry any per-term normalization (1/sqrt(L)), so
 * values.squaredNorm() is the term's unweighted energy; `weight` is the
 * multiplier applied by total_energy and the solver.
 */
struct ResidualBlock
{
    TermTag tag = TermTag::PC;
    double weight = 1.0;
    Eigen::VectorXd values;
    Eigen::MatrixXd jm; // |values| x 8
    Eigen::MatrixXd jp; // |values| x (n_id + n_exp)

    int rows() const { return static_cast<int>(values.size()); }
    double energy() const { return values.squaredNorm(); }
};

/// A keypoint-pairing term couples two images; Jacobians are kept per image
/// and per parameter group so the solver can place them in a stacked system
/// [m_i; p_i; m_j; p_j].
struct PairResidualBlock
{
    double weight = 1.0;
    Eigen::VectorXd values;
    Eigen::MatrixXd jm_i, jp_i, jm_j, jp_j;

    int rows() const { return static_cast<int>(values.size()); }
    double energy() const { return values.squaredNorm(); }

    /// [jm_i jp_i jm_j jp_j], the Jacobian over the stacked parameter vector.
    Eigen::MatrixXd stacked_jacobian() const;
};

/**
 * Parameter prior term: residual [m - prior_m; p - prior_p] with identity
 * Jacobian blocks. Its squared norm is the plain squared parameter distance
 * (no 1/L normalization).
 */
ResidualBlock residual_pc(const ProjectionParams& m, const ShapeParams& p, const ProjectionParams& prior_m,
                          const Eigen::VectorXd& prior_p);

/**
 * Landmark term: for every valid landmark, the 2D difference between the
 * projected markup vertex and the label, scaled by 1/sqrt(L) with L the
 * number of valid landmarks, so the squared norm is the mean squared pixel
 * error. Throws EmptyTermError when no landmark is valid.
 */
ResidualBlock residual_lfc(const ProjectionParams& m, const ShapeParams& p, const MorphableModel& model,
                           const LandmarkMarkup& markup, const Point2Set& landmarks,
                           const std::vector<bool>& mask);

/**
 * Contour term: per contour point, the 2D difference between the projection
 * of its frozen silhouette vertex and the point, scaled by 1/sqrt(Lc). The
 * frozen vertex indices come from the correspondence stage and are treated
 * as constants when differentiating. Empty correspondences yield an empty
 * block (the term contributes zero).
 */
ResidualBlock residual_cfc(const ProjectionParams& m, const ShapeParams& p, const MorphableModel& model,
                           const Point2Set& contour_points, const std::vector<int>& frozen_vertices);

/**
 * Keypoint-pairing term over an image pair, both cross terms stacked: image
 * i's shape evaluated at the vertices found in image j (against image i's
 * keypoints), and vice versa, each row scaled by 1/sqrt(L_ij). Vertex indices
 * are frozen during differentiation. L_ij = 0 yields an empty block.
 */
PairResidualBlock residual_spc(const ProjectionParams& m_i, const ShapeParams& p_i,
                               const ProjectionParams& m_j, const ShapeParams& p_j,
                               const MorphableModel& model, const KeypointPair& pair,
                               const std::vector<int>& vertices_i, const std::vector<int>& vertices_j);

/// Weighted total: sum over blocks of weights[tag] * ||values||^2.
double total_energy(std::span<const ResidualBlock> blocks, const Weights& weights);

} /* namespace facefit */
