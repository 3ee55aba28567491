/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: tests/test_synth.cpp
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
#include "facefit/synth.hpp"

#include "facefit/mesh.hpp"
#include "facefit/solver.hpp"

#include <doctest.h>

#include <random>

using namespace facefit;

namespace {

constexpr double kDegToRad = M_PI / 180.0;

Pose pose_deg(double yaw_deg, double pitch_deg = 0.0, double scale = 120.0)
{
    Pose pose;
    pose.scale = scale;
    pose.yaw = yaw_deg * kDegToRad;
    pose.pitch = pitch_deg * kDegToRad;
    pose.tx = 128.0;
    pose.ty = 128.0;
    return pose;
}

/// Contour correspondences at the truth, computed through the matching path.
std::vector<int> truth_contour_correspondences(const MorphableModel& model, const SyntheticScene& scene)
{
    const TransformedShape a = transform(scene.truth_m, assemble_shape(model, scene.truth_p));
    const SilhouetteSet sil = silhouette_vertices(a, model.topology());
    Point2Set targets(2, static_cast<Eigen::Index>(sil.vertex_indices.size()));
    for (std::size_t c = 0; c < sil.vertex_indices.size(); ++c)
        targets.col(static_cast<Eigen::Index>(c)) = a.col(sil.vertex_indices[c]).head<2>();
    const MatchSet matches = closest_point_match(scene.observations.contour_points, targets);
    std::vector<int> frozen(matches.pairs.size());
    for (const auto& pair : matches.pairs)
        frozen[pair.query] = sil.vertex_indices[pair.target];
    return frozen;
}

} // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("noise-free observations are exact: landmark and contour residuals vanish")
{
    const MorphableModel model = synth_model(31, 162, 3, 2);
    std::mt19937_64 rng(41);
    std::normal_distribution<double> gauss(0.0, 0.3);
    ShapeParams p = model.zero_params();
    for (Eigen::Index i = 0; i < p.id.size(); ++i)
        p.id[i] = gauss(rng);
    const SyntheticScene scene = generate_scene(model, pose_deg(18.0), p, 0.0, 3);

    const ResidualBlock lfc =
        residual_lfc(scene.truth_m, scene.truth_p, model, model.markup("pts68"),
                     scene.observations.landmarks, scene.observations.landmark_mask);
    CHECK(lfc.values.cwiseAbs().maxCoeff() == 0.0);

    const std::vector<int> frozen = truth_contour_correspondences(model, scene);
    const ResidualBlock cfc =
        residual_cfc(scene.truth_m, scene.truth_p, model, scene.observations.contour_points, frozen);
    CHECK(cfc.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a frontal pose leaves every markup point front-facing")
{
    const MorphableModel model = synth_model(32, 162, 3, 2);
    const SyntheticScene scene = generate_scene(model, pose_deg(0.0), model.zero_params(), 0.0, 4);
    for (bool valid : scene.observations.landmark_mask)
        CHECK(valid);
}

TEST_CASE("a large yaw masks part of the markup")
{
    const MorphableModel model = synth_model(32, 162, 3, 2);
    const SyntheticScene scene = generate_scene(model, pose_deg(50.0), model.zero_params(), 0.0, 4);
    CHECK(scene.observations.valid_landmark_count() < 68);
    CHECK(scene.observations.valid_landmark_count() > 20);
}

TEST_CASE("landmark displacement matches the Rayleigh mean")
{
    const MorphableModel model = synth_model(33, 162, 2, 1);
    const double sigma = 1.0;
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed)
    {
        const SyntheticScene noisy = generate_scene(model, pose_deg(5.0), model.zero_params(), sigma, seed);
        const SyntheticScene clean = generate_scene(model, pose_deg(5.0), model.zero_params(), 0.0, seed);
        for (Eigen::Index c = 0; c < noisy.observations.landmarks.cols(); ++c)
        {
            total += (noisy.observations.landmarks.col(c) - clean.observations.landmarks.col(c)).norm();
            ++count;
        }
    }
    const double expected = sigma * std::sqrt(M_PI / 2.0);
    CHECK(std::abs(total / count - expected) <= 0.05 * expected);
}

TEST_CASE("scenes are deterministic in the seed and differ across seeds")
{
    const MorphableModel model = synth_model(34, 162, 2, 1);
    const SyntheticScene a = generate_scene(model, pose_deg(10.0), model.zero_params(), 1.0, 42);
    const SyntheticScene b = generate_scene(model, pose_deg(10.0), model.zero_params(), 1.0, 42);
    CHECK((a.observations.landmarks.array() == b.observations.landmarks.array()).all());
    CHECK((a.observations.contour_points.array() == b.observations.contour_points.array()).all());
    const SyntheticScene c = generate_scene(model, pose_deg(10.0), model.zero_params(), 1.0, 43);
    CHECK_FALSE((a.observations.landmarks.array() == c.observations.landmarks.array()).all());
}

TEST_CASE("the bbox tightly bounds the projected vertices with 5% padding")
{
    const MorphableModel model = synth_model(34, 162, 2, 1);
    const SyntheticScene scene = generate_scene(model, pose_deg(25.0), model.zero_params(), 0.0, 7);
    const Point2Set projected =
        project(transform(scene.truth_m, assemble_shape(model, scene.truth_p)));
    const double w_tight = projected.row(0).maxCoeff() - projected.row(0).minCoeff();
    const double h_tight = projected.row(1).maxCoeff() - projected.row(1).minCoeff();
    CHECK(scene.observations.bbox.w == doctest::Approx(1.05 * w_tight).epsilon(1e-12));
    CHECK(scene.observations.bbox.h == doctest::Approx(1.05 * h_tight).epsilon(1e-12));
}

TEST_CASE("a zero-noise scene is a solver fixed point")
{
    const MorphableModel model = synth_model(35, 162, 3, 2);
    std::mt19937_64 rng(52);
    std::normal_distribution<double> gauss(0.0, 0.3);
    ShapeParams p = model.zero_params();
    for (Eigen::Index i = 0; i < p.id.size(); ++i)
        p.id[i] = gauss(rng);
    const SyntheticScene scene = generate_scene(model, pose_deg(12.0), p, 0.0, 6);
    SolveOptions opts;
    opts.weights.lambda_pr = 0.0;
    opts.weights.lambda_s = 0.0;
    const FitResult fit = fit_single(model, scene.observations, scene.truth_m, scene.truth_p, opts);
    CHECK(fit.per_term_energies.at("LFC") < 1e-16);
    CHECK(fit.per_term_energies.at("CFC") < 1e-16);
    CHECK((fit.m.m - scene.truth_m.m).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("identical poses in a noise-free pair give identical keypoints")
{
    const MorphableModel model = synth_model(36, 162, 3, 2);
    const Pose pose = pose_deg(15.0);
    const PairScene pair = generate_pair(model, pose, pose, model.zero_params(), 25, 0.0, 8);
    CHECK((pair.keypoints.in_i.array() == pair.keypoints.in_j.array()).all());
}

TEST_CASE("visible-only vertex lookup recovers the ground-truth keypoint vertices at zero noise")
{
    const MorphableModel model = synth_model(37, 162, 3, 2);
    std::mt19937_64 rng(62);
    std::normal_distribution<double> gauss(0.0, 0.3);
    ShapeParams p = model.zero_params();
    for (Eigen::Index i = 0; i < p.id.size(); ++i)
        p.id[i] = gauss(rng);
    const PairScene pair = generate_pair(model, pose_deg(20.0), pose_deg(-25.0), p, 30, 0.0, 9);
    const TransformedShape a_i = transform(pair.image_i.truth_m, assemble_shape(model, p));
    const std::vector<int> found = sift_vertex_lookup(pair.keypoints.in_i, a_i, &model.topology());
    CHECK(found == pair.truth_vertex_ids);
}

TEST_CASE("sampled pair vertices are front-facing in both views")
{
    const MorphableModel model = synth_model(38, 162, 2, 1);
    const PairScene pair =
        generate_pair(model, pose_deg(30.0), pose_deg(-30.0), model.zero_params(), 30, 0.0, 10);
    const DenseShape shape = assemble_shape(model, model.zero_params());
    const Eigen::VectorXd vz_i =
        vertex_normal_z(transform(pair.image_i.truth_m, shape), model.topology());
    const Eigen::VectorXd vz_j =
        vertex_normal_z(transform(pair.image_j.truth_m, shape), model.topology());
    for (int v : pair.truth_vertex_ids)
    {
        CHECK(vz_i[v] > 0.0);
        CHECK(vz_j[v] > 0.0);
    }
}

TEST_CASE("requesting more keypoints than commonly visible vertices raises with the achievable count")
{
    const MorphableModel model = synth_model(39, 42, 1, 1);
    CHECK_THROWS_WITH_AS(
        generate_pair(model, pose_deg(40.0), pose_deg(-40.0), model.zero_params(), 42, 0.0, 11, "pts21"),
        doctest::Contains("front-facing"), ParameterError);
}

TEST_SUITE_END();
