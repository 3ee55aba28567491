/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/camera.cpp
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
#include "facefit/camera.hpp"

#include <cmath>

namespace facefit {

namespace {
constexpr double kDegenerateRowNorm = 1e-12;
} // namespace

Eigen::Matrix3d rotation_from_angles(double pitch, double yaw, double roll)
{
    const double ca = std::cos(pitch), sa = std::sin(pitch);
    const double cb = std::cos(yaw), sb = std::sin(yaw);
    const double cg = std::cos(roll), sg = std::sin(roll);
    Eigen::Matrix3d rx, ry, rz;
    rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
    ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
    rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
    return rz * ry * rx;
}

Eigen::Vector3d complete_third_row(const ProjectionParams& m)
{
    const Eigen::Vector3d rx = m.row_x();
    const Eigen::Vector3d ry = m.row_y();
    const double nx = rx.norm();
    const double ny = ry.norm();
    if (nx <= kDegenerateRowNorm || ny <= kDegenerateRowNorm)
        throw DegenerateCameraError("camera row norm below 1e-12");
    return (rx / nx).cross(ry / ny);
}

TransformedShape transform(const ProjectionParams& m, const DenseShape& shape)
{
    const Eigen::Vector3d rz = complete_third_row(m);
    const double depth_scale = 0.5 * (m.row_x().norm() + m.row_y().norm());
    TransformedShape out(3, shape.cols());
    out.row(0) = (m.row_x().transpose() * shape).array() + m.tx();
    out.row(1) = (m.row_y().transpose() * shape).array() + m.ty();
    out.row(2) = depth_scale * (rz.transpose() * shape);
    return out;
}

Point2Set project(const TransformedShape& transformed)
{
    return transformed.topRows<2>();
}

ProjectionParams compose_m(const Pose& pose)
{
    if (!(pose.scale > 0.0))
        throw ParameterError("pose scale must be positive");
    const Eigen::Matrix3d r = rotation_from_angles(pose.pitch, pose.yaw, pose.roll);
    ProjectionParams m;
    m.m.segment<3>(0) = pose.scale * r.row(0).transpose();
    m.m[3] = pose.tx;
    m.m.segment<3>(4) = pose.scale * r.row(1).transpose();
    m.m[7] = pose.ty;
    return m;
}

Pose decompose_pose(const ProjectionParams& m)
{
    const Eigen::Vector3d rx = m.row_x();
    const Eigen::Vector3d ry = m.row_y();
    const double nx = rx.norm();
    const double ny = ry.norm();
    if (nx <= kDegenerateRowNorm || ny <= kDegenerateRowNorm)
        throw DegenerateCameraError("camera row norm below 1e-12");

    // Project back to the nearest rotation: keep row x, Gram-Schmidt row y.
    const Eigen::Vector3d r0 = rx / nx;
    Eigen::Vector3d r1 = ry / ny;
    r1 -= r1.dot(r0) * r0;
    const double residual_norm = r1.norm();
    if (residual_norm <= kDegenerateRowNorm)
        throw DegenerateCameraError("camera rows are parallel");
    r1 /= residual_norm;
    const Eigen::Vector3d r2 = r0.cross(r1);

    Eigen::Matrix3d r;
    r.row(0) = r0.transpose();
    r.row(1) = r1.transpose();
    r.row(2) = r2.transpose();

    Pose pose;
    pose.scale = 0.5 * (nx + ny);
    pose.tx = m.tx();
    pose.ty = m.ty();

    // R = Rz(roll)*Ry(yaw)*Rx(pitch):
    //   R(2,0) = -sin(yaw), R(2,1) = cos(yaw) sin(pitch), R(2,2) = cos(yaw) cos(pitch),
    //   R(1,0) = sin(roll) cos(yaw), R(0,0) = cos(roll) cos(yaw).
    const double sy = -r(2, 0);
    if (std::abs(sy) < 1.0 - 1e-12)
    {
        pose.yaw = std::asin(sy);
        pose.pitch = std::atan2(r(2, 1), r(2, 2));
        pose.roll = std::atan2(r(1, 0), r(0, 0));
    } else
    {
        // Gimbal lock: pitch and roll are coupled; fix roll = 0.
        pose.yaw = sy > 0 ? M_PI / 2.0 : -M_PI / 2.0;
        pose.roll = 0.0;
        if (sy > 0)
            pose.pitch = std::atan2(r(0, 1), r(0, 2));
        else
            pose.pitch = std::atan2(-r(0, 1), -r(0, 2));
    }
    return pose;
}

} /* namespace facefit */
