/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/mesh.cpp
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
#include "facefit/mesh.hpp"

#include <algorithm>
#include <set>

namespace facefit {

namespace {
// Faces with |normal z| below this count as sign 0 and never flip visibility.
constexpr double kFlatFaceZ = 1e-12;

int z_sign(double z)
{
    if (z > kFlatFaceZ)
        return 1;
    if (z < -kFlatFaceZ)
        return -1;
    return 0;
}
} // namespace

FaceNormals face_normals(const TransformedShape& transformed, const MeshTopology& topology)
{
    FaceNormals result;
    result.normals.resize(topology.triangles.size());
    for (std::size_t f = 0; f < topology.triangles.size(); ++f)
    {
        const auto& t = topology.triangles[f];
        const Eigen::Vector3d a = transformed.col(t[0]);
        const Eigen::Vector3d n = (transformed.col(t[1]) - a).cross(transformed.col(t[2]) - a);
        if (n.squaredNorm() == 0.0)
        {
            result.normals[f].setZero();
            result.degenerate_faces.push_back(static_cast<int>(f));
        } else
        {
            result.normals[f] = n;
        }
    }
    return result;
}

SilhouetteSet silhouette_vertices(const TransformedShape& transformed, const MeshTopology& topology)
{
    const FaceNormals normals = face_normals(transformed, topology);
    SilhouetteSet out;
    std::set<int> vertices;
    for (const auto& edge : topology.edges)
    {
        if (edge.open())
        {
            ++out.open_edges_skipped;
            continue;
        }
        const int s0 = z_sign(normals.normals[edge.face0].z());
        const int s1 = z_sign(normals.normals[edge.face1].z());
        if (s0 * s1 < 0)
        {
            out.boundary_edges.emplace_back(edge.v0, edge.v1);
            vertices.insert(edge.v0);
            vertices.insert(edge.v1);
        }
    }
    out.vertex_indices.assign(vertices.begin(), vertices.end());
    return out;
}

SilhouetteSet restrict_silhouette(const SilhouetteSet& silhouette, std::span<const int> allowed_vertices)
{
    const std::set<int> allowed(allowed_vertices.begin(), allowed_vertices.end());
    SilhouetteSet out;
    out.open_edges_skipped = silhouette.open_edges_skipped;
    for (int v : silhouette.vertex_indices)
        if (allowed.count(v))
            out.vertex_indices.push_back(v);
    for (const auto& [a, b] : silhouette.boundary_edges)
        if (allowed.count(a) && allowed.count(b))
            out.boundary_edges.emplace_back(a, b);
    return out;
}

Eigen::VectorXd vertex_normal_z(const TransformedShape& transformed, const MeshTopology& topology)
{
    const FaceNormals normals = face_normals(transformed, topology);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(transformed.cols());
    for (std::size_t f = 0; f < topology.triangles.size(); ++f)
    {
        for (int v : topology.triangles[f])
            z[v] += normals.normals[f].z();
    }
    return z;
}

} /* namespace facefit */
