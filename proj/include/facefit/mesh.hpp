/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/mesh.hpp
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
#include "facefit/model.hpp"

#include <span>
#include <utility>
#include <vector>

namespace facefit {

/// Unnormalized per-face normals (only their signs are consumed downstream).
/// Faces with exactly zero area are listed in degenerate_faces and get a zero
/// normal, which excludes them from all sign tests.
struct FaceNormals
{
    std::vector<Eigen::Vector3d> normals;
    std::vector<int> degenerate_faces;
};

FaceNormals face_normals(const TransformedShape& transformed, const MeshTopology& topology);

/**
 * @brief The occluding contour of a posed mesh.
 *
 * boundary_edges are the closed-mesh edges whose two adjacent faces have
 * strictly opposite normal-z signs (faces with |z| < 1e-12 never create a
 * boundary); vertex_indices is the sorted, deduplicated set of their
 * endpoints. Open edges are skipped and counted.
 */
struct SilhouetteSet
{
    std::vector<int> vertex_indices;
    std::vector<std::pair<int, int>> boundary_edges;
    int open_edges_skipped = 0;
};

SilhouetteSet silhouette_vertices(const TransformedShape& transformed, const MeshTopology& topology);

/// Intersects a silhouette with a candidate vertex region (e.g. a model's
/// "contour_mask" markup). Keeps only edges with both endpoints allowed.
SilhouetteSet restrict_silhouette(const SilhouetteSet& silhouette, std::span<const int> allowed_vertices);

/// Per-vertex sum of incident unnormalized face-normal z components. The sign
/// is a cheap front/back-facing test used for visibility masks.
Eigen::VectorXd vertex_normal_z(const TransformedShape& transformed, const MeshTopology& topology);

} /* namespace facefit */
