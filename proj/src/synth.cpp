/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/synth.cpp
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

#include <algorithm>
#include <random>
#include <sstream>

namespace facefit {

namespace {

void add_noise(Point2Set& points, double sigma, std::mt19937_64& rng)
{
    if (sigma <= 0.0)
        return;
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Eigen::Index c = 0; c < points.cols(); ++c)
    {
        points(0, c) += gauss(rng);
        points(1, c) += gauss(rng);
    }
}

BBox padded_bbox(const Point2Set& projected)
{
    BBox box;
    const double min_x = projected.row(0).minCoeff();
    const double max_x = projected.row(0).maxCoeff();
    const double min_y = projected.row(1).minCoeff();
    const double max_y = projected.row(1).maxCoeff();
    const double pad_x = 0.025 * (max_x - min_x);
    const double pad_y = 0.025 * (max_y - min_y);
    box.x = min_x - pad_x;
    box.y = min_y - pad_y;
    box.w = (max_x - min_x) + 2.0 * pad_x;
    box.h = (max_y - min_y) + 2.0 * pad_y;
    return box;
}

} // namespace

SyntheticScene generate_scene(const MorphableModel& model, const Pose& pose, const ShapeParams& p,
                              double noise_sigma, std::uint64_t seed, const std::string& markup_name,
                              int contour_subsample)
{
    if (noise_sigma < 0.0)
        throw ParameterError("noise sigma must be nonnegative");
    if (contour_subsample < 1)
        throw ParameterError("contour subsample stride must be >= 1");
    const LandmarkMarkup& markup = model.markup(markup_name);

    SyntheticScene scene;
    scene.noise_sigma = noise_sigma;
    scene.seed = seed;
    scene.truth_m = compose_m(pose); // throws for degenerate pose
    scene.truth_p = p;

    const DenseShape shape = assemble_shape(model, p);
    const TransformedShape transformed = transform(scene.truth_m, shape);
    const Point2Set projected = project(transformed);

    std::mt19937_64 rng(seed);

    Observations& obs = scene.observations;
    obs.markup_name = markup_name;
    obs.landmarks.resize(2, markup.size());
    for (int l = 0; l < markup.size(); ++l)
        obs.landmarks.col(l) = projected.col(markup.indices[l]);
    add_noise(obs.landmarks, noise_sigma, rng);

    // Self-occlusion mask from the true pose: back-facing markup vertices
    // (nonpositive summed face-normal z) are invalid.
    const Eigen::VectorXd vz = vertex_normal_z(transformed, model.topology());
    obs.landmark_mask.resize(markup.size());
    for (int l = 0; l < markup.size(); ++l)
        obs.landmark_mask[l] = vz[markup.indices[l]] > 0.0;

    const SilhouetteSet silhouette = silhouette_vertices(transformed, model.topology());
    std::vector<int> sampled;
    for (std::size_t k = 0; k < silhouette.vertex_indices.size(); k += contour_subsample)
        sampled.push_back(silhouette.vertex_indices[k]);
    obs.contour_points.resize(2, static_cast<Eigen::Index>(sampled.size()));
    for (std::size_t c = 0; c < sampled.size(); ++c)
        obs.contour_points.col(static_cast<Eigen::Index>(c)) = projected.col(sampled[c]);
    add_noise(obs.contour_points, noise_sigma, rng);

    obs.bbox = padded_bbox(projected);
    return scene;
}

PairScene generate_pair(const MorphableModel& model, const Pose& pose_i, const Pose& pose_j,
                        const ShapeParams& shared_p, int n_sift, double noise_sigma, std::uint64_t seed,
                        const std::string& markup_name, int contour_subsample)
{
    if (n_sift < 0 || n_sift > model.vertex_count())
        throw ParameterError("n_sift must lie in [0, Q]");

    std::mt19937_64 root(seed);
    const std::uint64_t seed_i = root();
    const std::uint64_t seed_j = root();
    const std::uint64_t seed_k = root();

    PairScene pair_scene;
    pair_scene.image_i =
        generate_scene(model, pose_i, shared_p, noise_sigma, seed_i, markup_name, contour_subsample);
    pair_scene.image_j =
        generate_scene(model, pose_j, shared_p, noise_sigma, seed_j, markup_name, contour_subsample);

    const DenseShape shape = assemble_shape(model, shared_p);
    const TransformedShape transformed_i = transform(pair_scene.image_i.truth_m, shape);
    const TransformedShape transformed_j = transform(pair_scene.image_j.truth_m, shape);
    const Eigen::VectorXd vz_i = vertex_normal_z(transformed_i, model.topology());
    const Eigen::VectorXd vz_j = vertex_normal_z(transformed_j, model.topology());

    std::vector<int> candidates;
    for (int k = 0; k < model.vertex_count(); ++k)
        if (vz_i[k] > 0.0 && vz_j[k] > 0.0)
            candidates.push_back(k);
    if (static_cast<int>(candidates.size()) < n_sift)
    {
        std::ostringstream msg;
        msg << "only " << candidates.size() << " vertices are front-facing in both poses; requested "
            << n_sift;
        throw ParameterError(msg.str());
    }

    std::mt19937_64 rng(seed_k);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(n_sift);
    std::sort(candidates.begin(), candidates.end());
    pair_scene.truth_vertex_ids = candidates;

    KeypointPair& keypoints = pair_scene.keypoints;
    keypoints.in_i.resize(2, n_sift);
    keypoints.in_j.resize(2, n_sift);
    for (int c = 0; c < n_sift; ++c)
    {
        keypoints.in_i.col(c) = transformed_i.col(candidates[c]).head<2>();
        keypoints.in_j.col(c) = transformed_j.col(candidates[c]).head<2>();
    }
    add_noise(keypoints.in_i, noise_sigma, rng);
    add_noise(keypoints.in_j, noise_sigma, rng);
    return pair_scene;
}

} /* namespace facefit */
