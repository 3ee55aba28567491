/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/camera.hpp
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

namespace facefit {

/**
 * @brief Weak-perspective camera: the first two rows of a 3x4 projection
 * matrix, stored as the 8-vector [m1..m8].
 *
 * (m1,m2,m3)/(m5,m6,m7) are scale-times-rotation rows; m4/m8 are the x/y
 * translations in pixels. The depth translation is fixed to zero.
 */
struct ProjectionParams
{
    Vector8d m = Vector8d::Zero();

    Eigen::Vector3d row_x() const { return m.segment<3>(0); }
    Eigen::Vector3d row_y() const { return m.segment<3>(4); }
    double tx() const { return m[3]; }
    double ty() const { return m[7]; }
};

/**
 * @brief The 6-DoF pose behind a weak-perspective camera: uniform scale,
 * rotation angles in radians (pitch, yaw, roll) and pixel translations.
 *
 * The rotation convention throughout the library is
 * R = Rz(roll) * Ry(yaw) * Rx(pitch).
 */
struct Pose
{
    double scale = 1.0;
    double pitch = 0.0;
    double yaw = 0.0;
    double roll = 0.0;
    double tx = 0.0;
    double ty = 0.0;
};

/// Rotation matrix for the library-wide convention Rz(roll)*Ry(yaw)*Rx(pitch).
Eigen::Matrix3d rotation_from_angles(double pitch, double yaw, double roll);

/**
 * Completes the camera's third rotation row as the cross product of the
 * normalized first two rows. The result has unit norm and is invariant to
 * positive scaling of the rows.
 *
 * Throws DegenerateCameraError if either row is (near) zero.
 */
Eigen::Vector3d complete_third_row(const ProjectionParams& m);

/**
 * Applies the weak-perspective transform. Rows x,y come directly from m;
 * the z row is the completed third rotation row scaled by the mean of the
 * two row norms (depth translation is zero), so z is commensurate with the
 * pixel-space x,y.
 */
TransformedShape transform(const ProjectionParams& m, const DenseShape& shape);

/// Orthographic projection: drops the z row.
Point2Set project(const TransformedShape& transformed);

/// Builds the 8-vector from a pose. Throws ParameterError if scale <= 0.
ProjectionParams compose_m(const Pose& pose);

/**
 * Recovers the pose from an 8-vector that need not be an exact scaled
 * rotation: scale is the mean of the two row norms and the rotation is the
 * Gram-Schmidt orthonormalization of the rows (row x kept, row y projected).
 *
 * Throws DegenerateCameraError if a row is near zero or the rows are
 * parallel.
 */
Pose decompose_pose(const ProjectionParams& m);

} /* namespace facefit */
