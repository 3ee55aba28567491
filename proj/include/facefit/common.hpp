/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/common.hpp
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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace facefit {

/**
 * Dense shapes are 3xQ matrices with one column per vertex (rows x, y, z).
 * A DenseShape lives in model units; a TransformedShape has x, y in image
 * pixels and z in camera-depth units on the same scale.
 */
using DenseShape = Eigen::Matrix3Xd;
using TransformedShape = Eigen::Matrix3Xd;

/// 2D point sets are 2xN matrices, one column per point, in pixels.
using Point2Set = Eigen::Matrix2Xd;

using Vector8d = Eigen::Matrix<double, 8, 1>;

/// Axis-aligned face box in pixels.
struct BBox
{
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Matrix/vector sizes do not agree (e.g. coefficient count vs. basis count).
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// A loaded or constructed value violates a documented invariant.
class ValidationError : public Error
{
public:
    using Error::Error;
};

/// The camera rows are (near) zero or parallel; no rotation can be recovered.
class DegenerateCameraError : public Error
{
public:
    using Error::Error;
};

/// An argument value is outside the supported range.
class ParameterError : public Error
{
public:
    using Error::Error;
};

/// A matching operation was asked to select from an empty candidate set.
class NoCandidatesError : public Error
{
public:
    using Error::Error;
};

/// A residual term that must be nonempty would be empty.
class EmptyTermError : public Error
{
public:
    using Error::Error;
};

/// The solver cannot start (e.g. non-finite energy at the initial point).
class InitializationError : public Error
{
public:
    using Error::Error;
};

} /* namespace facefit */
