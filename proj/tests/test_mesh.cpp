/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: tests/test_mesh.cpp
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

#include "facefit/camera.hpp"
#include "oracles.hpp"

#include <Eigen/Cholesky>
#include <doctest.h>

#include <set>

using namespace facefit;

namespace {

/// Recovers the unit-sphere vertex coordinates of a synthetic model by
/// fitting the axis-aligned ellipsoid through its mean shape.
TransformedShape unit_sphere_coords(const MorphableModel& model)
{
    const DenseShape& mean = model.mean_shape();
    Eigen::MatrixXd a(mean.cols(), 3);
    for (int k = 0; k < mean.cols(); ++k)
    {
        a(k, 0) = mean(0, k) * mean(0, k);
        a(k, 1) = mean(1, k) * mean(1, k);
        a(k, 2) = mean(2, k) * mean(2, k);
    }
    const Eigen::Vector3d coeffs =
        (a.transpose() * a).ldlt().solve(a.transpose() * Eigen::VectorXd::Ones(mean.cols()));
    TransformedShape unit(3, mean.cols());
    for (int r = 0; r < 3; ++r)
        unit.row(r) = std::sqrt(coeffs[r]) * mean.row(r);
    return unit;
}

} // namespace

TEST_SUITE_BEGIN("mesh");

TEST_CASE("right-handed triangle normal points +z")
{
    TransformedShape a(3, 3);
    a << 0, 1, 0, 0, 0, 1, 0, 0, 0;
    const MeshTopology topo = MeshTopology::build({{0, 1, 2}}, 3);
    const FaceNormals normals = face_normals(a, topo);
    CHECK((normals.normals[0] - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-15);
    CHECK(normals.degenerate_faces.empty());

    const MeshTopology flipped = MeshTopology::build({{0, 2, 1}}, 3);
    const FaceNormals normals2 = face_normals(a, flipped);
    CHECK((normals2.normals[0] - Eigen::Vector3d(0, 0, -1)).norm() <= 1e-15);
}

TEST_CASE("zero-area faces are flagged and excluded")
{
    TransformedShape a(3, 3);
    a << 1, 1, 1, 2, 2, 2, 3, 3, 3; // all three vertices coincide
    const MeshTopology topo = MeshTopology::build({{0, 1, 2}}, 3);
    const FaceNormals normals = face_normals(a, topo);
    REQUIRE(normals.degenerate_faces.size() == 1);
    CHECK(normals.normals[0].isZero(0.0));
}

TEST_CASE("sphere faces with front centroid face front at identity")
{
    const MorphableModel model = synth_model(1, 162, 0, 0);
    const TransformedShape a = transform(compose_m(Pose{}), model.mean_shape());
    const FaceNormals normals = face_normals(a, model.topology());
    for (std::size_t f = 0; f < model.topology().triangles.size(); ++f)
    {
        const auto& t = model.topology().triangles[f];
        const double centroid_z = (a(2, t[0]) + a(2, t[1]) + a(2, t[2])) / 3.0;
        if (std::abs(centroid_z) < 0.05)
            continue; // equator band: centroid sign is not informative
        CHECK(normals.normals[f].z() * centroid_z > 0.0);
    }
}

TEST_CASE("an isolated triangle has no silhouette")
{
    TransformedShape a(3, 3);
    a << 0, 1, 0, 0, 0, 1, 0, 0, 0;
    const MeshTopology topo = MeshTopology::build({{0, 1, 2}}, 3);
    const SilhouetteSet sil = silhouette_vertices(a, topo);
    CHECK(sil.vertex_indices.empty());
    CHECK(sil.boundary_edges.empty());
    CHECK(sil.open_edges_skipped == 3);
}

TEST_CASE("regular tetrahedron: boundary edges separate front from back faces")
{
    TransformedShape a(3, 4);
    a.col(0) = Eigen::Vector3d(1, 1, 1) / std::sqrt(3.0);
    a.col(1) = Eigen::Vector3d(1, -1, -1) / std::sqrt(3.0);
    a.col(2) = Eigen::Vector3d(-1, 1, -1) / std::sqrt(3.0);
    a.col(3) = Eigen::Vector3d(-1, -1, 1) / std::sqrt(3.0);
    // Outward winding: orient each face so its normal points away from the
    // origin.
    std::vector<std::array<int, 3>> tris = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    for (auto& t : tris)
    {
        const Eigen::Vector3d v0 = a.col(t[0]);
        const Eigen::Vector3d n = (a.col(t[1]) - v0).cross(a.col(t[2]) - v0);
        if (n.dot(v0 + a.col(t[1]) + a.col(t[2])) < 0.0)
            std::swap(t[1], t[2]);
    }
    const MeshTopology topo = MeshTopology::build(tris, 4);

    // Hand oracle over all 6 edges: sign of the independently computed
    // normal z per adjacent face.
    std::set<std::pair<int, int>> expected;
    auto face_z = [&](const std::array<int, 3>& t) {
        const Eigen::Vector3d v0 = a.col(t[0]);
        return (a.col(t[1]) - v0).cross(a.col(t[2]) - v0).z();
    };
    int front = 0, back = 0;
    for (const auto& t : tris)
        (face_z(t) > 0 ? front : back) += 1;
    REQUIRE(front == 2);
    REQUIRE(back == 2);
    for (const auto& e : topo.edges)
    {
        const double z0 = face_z(tris[e.face0]);
        const double z1 = face_z(tris[e.face1]);
        if (z0 * z1 < 0)
            expected.insert({e.v0, e.v1});
    }
    REQUIRE(expected.size() == 4);

    const SilhouetteSet sil = silhouette_vertices(a, topo);
    std::set<std::pair<int, int>> got(sil.boundary_edges.begin(), sil.boundary_edges.end());
    CHECK(got == expected);
    CHECK(sil.vertex_indices.size() == 4); // all vertices touch a boundary edge
}

TEST_CASE("sphere silhouette matches the brute-force scan and hugs the outline ring")
{
    const MorphableModel model = synth_model(1, 162, 0, 0);
    const TransformedShape unit = unit_sphere_coords(model);
    const SilhouetteSet sil = silhouette_vertices(unit, model.topology());
    const std::set<int> expected = oracles::silhouette_bruteforce(unit, model.topology().triangles);
    const std::set<int> got(sil.vertex_indices.begin(), sil.vertex_indices.end());
    CHECK(got == expected);
    REQUIRE_FALSE(sil.vertex_indices.empty());
    for (int v : sil.vertex_indices)
    {
        const double ring_radius = std::hypot(unit(0, v), unit(1, v));
        CHECK(std::abs(ring_radius - 1.0) <= 0.02);
    }
}

TEST_CASE("posed sphere silhouette matches the brute-force scan across poses")
{
    const MorphableModel model = synth_model(3, 162, 2, 1);
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> angle(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep)
    {
        Pose pose;
        pose.scale = 80.0;
        pose.pitch = angle(rng);
        pose.yaw = angle(rng);
        pose.roll = angle(rng);
        const TransformedShape a = transform(compose_m(pose), model.mean_shape());
        const SilhouetteSet sil = silhouette_vertices(a, model.topology());
        const std::set<int> expected = oracles::silhouette_bruteforce(a, model.topology().triangles);
        CHECK(std::set<int>(sil.vertex_indices.begin(), sil.vertex_indices.end()) == expected);
        CHECK(std::is_sorted(sil.vertex_indices.begin(), sil.vertex_indices.end()));
    }
}

TEST_CASE("silhouette size is stable under a one-degree yaw change")
{
    const MorphableModel model = synth_model(1, 162, 0, 0);
    // Generic poses only: at exactly symmetric orientations some faces sit
    // flat-on (normal z within the sign-0 band) and the count legitimately
    // jumps when they tip over.
    for (double yaw_deg : {3.7, 11.3, 24.6, 38.9})
    {
        Pose pose;
        pose.pitch = 4.2 * M_PI / 180.0;
        pose.yaw = yaw_deg * M_PI / 180.0;
        Pose nudged = pose;
        nudged.yaw += 1.0 * M_PI / 180.0;
        const auto sil_a =
            silhouette_vertices(transform(compose_m(pose), model.mean_shape()), model.topology());
        const auto sil_b =
            silhouette_vertices(transform(compose_m(nudged), model.mean_shape()), model.topology());
        const double size_a = static_cast<double>(sil_a.vertex_indices.size());
        const double size_b = static_cast<double>(sil_b.vertex_indices.size());
        CHECK(std::abs(size_a - size_b) < 0.2 * size_a);
    }
}

TEST_CASE("silhouette is invariant under uniform positive scaling")
{
    const MorphableModel model = synth_model(2, 162, 0, 0);
    Pose pose;
    pose.yaw = 0.4;
    const TransformedShape a = transform(compose_m(pose), model.mean_shape());
    const SilhouetteSet sil_a = silhouette_vertices(a, model.topology());
    const TransformedShape scaled = 3.5 * a;
    const SilhouetteSet sil_b = silhouette_vertices(scaled, model.topology());
    CHECK(sil_a.vertex_indices == sil_b.vertex_indices);
    CHECK(sil_a.boundary_edges == sil_b.boundary_edges);
}

TEST_CASE("restrict_silhouette keeps only allowed vertices and edges")
{
    const MorphableModel model = synth_model(1, 162, 0, 0);
    const TransformedShape a = transform(compose_m(Pose{}), model.mean_shape());
    const SilhouetteSet sil = silhouette_vertices(a, model.topology());
    REQUIRE(sil.vertex_indices.size() >= 4);
    // Allow only half of the silhouette vertices.
    std::vector<int> allowed(sil.vertex_indices.begin(),
                             sil.vertex_indices.begin() + sil.vertex_indices.size() / 2);
    const SilhouetteSet restricted = restrict_silhouette(sil, allowed);
    CHECK(restricted.vertex_indices == allowed);
    for (const auto& [va, vb] : restricted.boundary_edges)
    {
        CHECK(std::find(allowed.begin(), allowed.end(), va) != allowed.end());
        CHECK(std::find(allowed.begin(), allowed.end(), vb) != allowed.end());
    }
}

TEST_CASE("vertex normal z sign splits front and back of the sphere")
{
    const MorphableModel model = synth_model(1, 162, 0, 0);
    const TransformedShape a = transform(compose_m(Pose{}), model.mean_shape());
    const Eigen::VectorXd vz = vertex_normal_z(a, model.topology());
    int agree = 0;
    for (int k = 0; k < a.cols(); ++k)
    {
        if (std::abs(a(2, k)) < 0.2)
            continue; // skip the equator band
        agree += (vz[k] > 0) == (a(2, k) > 0) ? 1 : 0;
    }
    CHECK(agree > 100);
}

TEST_SUITE_END();
