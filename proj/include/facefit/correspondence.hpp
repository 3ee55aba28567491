/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/correspondence.hpp
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
#include "facefit/mesh.hpp"
#include "facefit/model.hpp"

#include <vector>

namespace facefit {

/// One nearest-neighbour pairing per query point.
struct MatchSet
{
    struct Pair
    {
        int query = -1;
        int target = -1;
        double squared_distance = 0.0;
    };
    std::vector<Pair> pairs;

    double total_squared_distance() const;
};

/**
 * Exact 2D nearest-neighbour matching: for every query point, the target
 * index with minimal squared Euclidean distance, ties broken by the smaller
 * target index. Backed by a uniform grid with ring expansion; results are
 * identical to an exhaustive scan, the grid only skips provably farther
 * candidates.
 *
 * Throws NoCandidatesError if targets is empty.
 */
MatchSet closest_point_match(const Point2Set& queries, const Point2Set& targets);

/**
 * For each keypoint, the index of the vertex whose projection (x,y rows of
 * the transformed shape) is nearest, ties broken by the smaller vertex index.
 * With visibility_topology given, only front-facing vertices (positive summed
 * face-normal z) are candidates; if none is front-facing all vertices are.
 */
std::vector<int> sift_vertex_lookup(const Point2Set& keypoints, const TransformedShape& transformed,
                                    const MeshTopology* visibility_topology = nullptr);

/// Matched keypoints of an image pair; column k of each matrix is the same
/// physical point seen in the two images.
struct KeypointPair
{
    Point2Set in_i;
    Point2Set in_j;

    int size() const;
};

struct BandFilterResult
{
    Point2Set points;
    /// True when fewer than two polyline landmarks were given; the input is
    /// then returned unchanged.
    bool band_undefined = false;
};

/**
 * Keeps edge points within distance tau of the open polyline through
 * consecutive contour landmarks (point-to-segment distance, inclusive
 * threshold). Input order is preserved. Throws ParameterError if tau <= 0.
 */
BandFilterResult band_filter_edges(const Point2Set& edge_points, const Point2Set& contour_landmarks,
                                   double tau);

/// Distance from a point to the closest segment of an open polyline.
double polyline_distance(const Eigen::Vector2d& point, const Point2Set& polyline);

} /* namespace facefit */
