/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: tests/test_energy.cpp
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
#include "facefit/energy.hpp"

#include "facefit/gradcheck.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace facefit;

namespace {

ShapeParams random_params(const MorphableModel& model, std::mt19937_64& rng, double sigma = 0.5)
{
    std::normal_distribution<double> gauss(0.0, sigma);
    ShapeParams p = model.zero_params();
    for (Eigen::Index i = 0; i < p.id.size(); ++i)
        p.id[i] = gauss(rng);
    for (Eigen::Index j = 0; j < p.exp.size(); ++j)
        p.exp[j] = gauss(rng);
    return p;
}

ProjectionParams posed(double scale, double yaw, double tx = 0.0, double ty = 0.0)
{
    Pose pose;
    pose.scale = scale;
    pose.yaw = yaw;
    pose.tx = tx;
    pose.ty = ty;
    return compose_m(pose);
}

Point2Set projected_markup(const MorphableModel& model, const ProjectionParams& m, const ShapeParams& p,
                           const LandmarkMarkup& markup)
{
    const DenseShape cols = assemble_columns(model, p, markup.indices);
    return project(transform(m, cols));
}

} // namespace

TEST_SUITE_BEGIN("energy");

TEST_CASE("parameter prior residual at the prior is zero")
{
    const MorphableModel model = synth_model(1, 12, 3, 3);
    const ProjectionParams m = posed(2.0, 0.3);
    std::mt19937_64 rng(1);
    const ShapeParams p = random_params(model, rng);
    const ResidualBlock block = residual_pc(m, p, m, p.flatten());
    CHECK(block.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parameter prior with zero prior is the parameter vector")
{
    const MorphableModel model = synth_model(1, 12, 3, 3);
    const ProjectionParams m = posed(2.0, 0.3, 4.0, -1.0);
    std::mt19937_64 rng(2);
    const ShapeParams p = random_params(model, rng);
    ProjectionParams zero_m;
    const ResidualBlock block = residual_pc(m, p, zero_m, Eigen::VectorXd::Zero(6));
    Eigen::VectorXd expected(14);
    expected << m.m, p.flatten();
    CHECK((block.values - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parameter prior energy equals the direct formula")
{
    const MorphableModel model = synth_model(1, 12, 3, 3);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 5.0);
    for (int rep = 0; rep < 20; ++rep)
    {
        ProjectionParams m, prior_m;
        for (int k = 0; k < 8; ++k)
        {
            m.m[k] = gauss(rng);
            prior_m.m[k] = gauss(rng);
        }
        const ShapeParams p = random_params(model, rng);
        Eigen::VectorXd prior_p(6);
        for (int k = 0; k < 6; ++k)
            prior_p[k] = gauss(rng);
        const ResidualBlock block = residual_pc(m, p, prior_m, prior_p);
        double direct = 0.0;
        for (int k = 0; k < 8; ++k)
            direct += (m.m[k] - prior_m.m[k]) * (m.m[k] - prior_m.m[k]);
        const Eigen::VectorXd flat = p.flatten();
        for (int k = 0; k < 6; ++k)
            direct += (flat[k] - prior_p[k]) * (flat[k] - prior_p[k]);
        CHECK(std::abs(block.energy() - direct) <= 1e-12 * std::max(1.0, direct));
    }
}

TEST_CASE("landmark residual vanishes on the model's own projections")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const LandmarkMarkup& markup = model.markup("pts68");
    const ProjectionParams m = posed(90.0, 0.25, 10.0, -5.0);
    std::mt19937_64 rng(4);
    const ShapeParams p = random_params(model, rng);
    const Point2Set labels = projected_markup(model, m, p, markup);
    const ResidualBlock block = residual_lfc(m, p, model, markup, labels, {});
    CHECK(block.values.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("landmark residual responds linearly to an x translation")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const LandmarkMarkup& markup = model.markup("pts68");
    const ProjectionParams m = posed(90.0, 0.0);
    const ShapeParams p = model.zero_params();
    const Point2Set labels = projected_markup(model, m, p, markup);
    const double delta = 3.25;
    ProjectionParams shifted = m;
    shifted.m[3] += delta;
    const ResidualBlock block = residual_lfc(shifted, p, model, markup, labels, {});
    const double l = markup.size();
    for (int c = 0; c < markup.size(); ++c)
    {
        CHECK(std::abs(block.values[2 * c] - delta / std::sqrt(l)) <= 1e-12);
        CHECK(std::abs(block.values[2 * c + 1]) <= 1e-12);
    }
    // Squared norm: delta^2 * (number of x rows) / L = delta^2.
    CHECK(block.energy() == doctest::Approx(delta * delta).epsilon(1e-12));
}

TEST_CASE("masked landmark residual equals the reduced-markup residual")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const LandmarkMarkup& markup = model.markup("pts68");
    const ProjectionParams m = posed(85.0, 0.4);
    std::mt19937_64 rng(6);
    const ShapeParams p = random_params(model, rng);
    Point2Set labels = projected_markup(model, m, p, markup);
    labels.array() += 1.5; // some nonzero residual

    std::vector<bool> mask(markup.indices.size(), true);
    for (std::size_t k = 0; k < mask.size(); k += 3)
        mask[k] = false;
    const ResidualBlock masked = residual_lfc(m, p, model, markup, labels, mask);

    LandmarkMarkup reduced;
    reduced.name = "reduced";
    std::vector<int> kept_cols;
    for (std::size_t k = 0; k < mask.size(); ++k)
    {
        if (mask[k])
        {
            reduced.indices.push_back(markup.indices[k]);
            kept_cols.push_back(static_cast<int>(k));
        }
    }
    Point2Set reduced_labels(2, static_cast<Eigen::Index>(kept_cols.size()));
    for (std::size_t c = 0; c < kept_cols.size(); ++c)
        reduced_labels.col(static_cast<Eigen::Index>(c)) = labels.col(kept_cols[c]);
    const ResidualBlock direct = residual_lfc(m, p, model, reduced, reduced_labels, {});
    CHECK((masked.values - direct.values).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((masked.jm - direct.jm).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((masked.jp - direct.jp).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("landmark residual with no valid landmarks raises")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const LandmarkMarkup& markup = model.markup("pts21");
    const Point2Set labels = Point2Set::Zero(2, markup.size());
    const std::vector<bool> mask(markup.indices.size(), false);
    CHECK_THROWS_AS(residual_lfc(posed(1, 0), model.zero_params(), model, markup, labels, mask),
                    EmptyTermError);
}

TEST_CASE("contour residual vanishes at exactly sampled silhouette projections")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const ProjectionParams m = posed(90.0, 0.3);
    std::mt19937_64 rng(7);
    const ShapeParams p = random_params(model, rng);
    const DenseShape shape = assemble_shape(model, p);
    const TransformedShape a = transform(m, shape);
    // Sample a handful of vertices as "contour points".
    const std::vector<int> frozen = {3, 50, 90, 120};
    Point2Set contour(2, 4);
    for (int c = 0; c < 4; ++c)
        contour.col(c) = a.col(frozen[c]).head<2>();
    const ResidualBlock block = residual_cfc(m, p, model, contour, frozen);
    CHECK(block.values.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("single contour point at offset (3,4) has squared norm 25")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const ProjectionParams m = posed(80.0, 0.0);
    const ShapeParams p = model.zero_params();
    const TransformedShape a = transform(m, model.mean_shape());
    const std::vector<int> frozen = {11};
    Point2Set contour(2, 1);
    contour.col(0) = a.col(11).head<2>() - Eigen::Vector2d(3.0, 4.0);
    const ResidualBlock block = residual_cfc(m, p, model, contour, frozen);
    CHECK(block.energy() == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("empty contour correspondences give an empty block")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const ResidualBlock block =
        residual_cfc(posed(1, 0), model.zero_params(), model, Point2Set(2, 0), {});
    CHECK(block.rows() == 0);
}

TEST_CASE("pairing residual vanishes for identical images with keypoints at vertices")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const ProjectionParams m = posed(90.0, 0.2);
    std::mt19937_64 rng(8);
    const ShapeParams p = random_params(model, rng);
    const TransformedShape a = transform(m, assemble_shape(model, p));
    const std::vector<int> verts = {5, 17, 40, 77, 140};
    KeypointPair pair;
    pair.in_i.resize(2, 5);
    pair.in_j.resize(2, 5);
    for (int c = 0; c < 5; ++c)
    {
        pair.in_i.col(c) = a.col(verts[c]).head<2>();
        pair.in_j.col(c) = a.col(verts[c]).head<2>();
    }
    const PairResidualBlock block = residual_spc(m, p, m, p, model, pair, verts, verts);
    CHECK(block.values.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("pairing residual cross-term structure under a one-image translation")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const ProjectionParams m = posed(90.0, 0.2);
    std::mt19937_64 rng(9);
    const ShapeParams p = random_params(model, rng);
    const TransformedShape a = transform(m, assemble_shape(model, p));
    const std::vector<int> verts = {5, 17, 40, 77, 140};
    const int l = static_cast<int>(verts.size());
    KeypointPair pair;
    pair.in_i.resize(2, l);
    pair.in_j.resize(2, l);
    for (int c = 0; c < l; ++c)
    {
        pair.in_i.col(c) = a.col(verts[c]).head<2>();
        pair.in_j.col(c) = a.col(verts[c]).head<2>();
    }
    const double delta = 2.5;
    ProjectionParams m_j = m;
    m_j.m[3] += delta;
    const PairResidualBlock block = residual_spc(m, p, m_j, p, model, pair, verts, verts);
    // First term (image i) is untouched; second term's x rows are delta/sqrt(L).
    for (int c = 0; c < l; ++c)
    {
        CHECK(std::abs(block.values[2 * c]) <= 1e-13);
        CHECK(std::abs(block.values[2 * c + 1]) <= 1e-13);
        CHECK(std::abs(block.values[2 * l + 2 * c] - delta / std::sqrt(double(l))) <= 1e-12);
        CHECK(std::abs(block.values[2 * l + 2 * c + 1]) <= 1e-13);
    }
}

TEST_CASE("total energy sums weighted squared norms")
{
    const MorphableModel model = synth_model(5, 162, 3, 2);
    const LandmarkMarkup& markup = model.markup("pts68");
    const ProjectionParams m = posed(90.0, 0.35, 5.0, 5.0);
    std::mt19937_64 rng(10);
    const ShapeParams p = random_params(model, rng);
    Point2Set labels = projected_markup(model, m, p, markup);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (Eigen::Index c = 0; c < labels.cols(); ++c)
        labels.col(c) += Eigen::Vector2d(gauss(rng), gauss(rng));

    std::vector<ResidualBlock> blocks;
    blocks.push_back(residual_pc(m, p, posed(88.0, 0.3), Eigen::VectorXd::Zero(5)));
    blocks.push_back(residual_lfc(m, p, model, markup, labels, {}));
    const std::vector<int> frozen = {4, 9, 31};
    Point2Set contour(2, 3);
    const TransformedShape a = transform(m, assemble_shape(model, p));
    for (int c = 0; c < 3; ++c)
        contour.col(c) = a.col(frozen[c]).head<2>() + Eigen::Vector2d(gauss(rng), gauss(rng));
    blocks.push_back(residual_cfc(m, p, model, contour, frozen));

    Weights weights; // (5, 1, 1) with unit prior
    CHECK(weights.lambda_lm == 5.0);
    CHECK(weights.lambda_s == 1.0);
    CHECK(weights.lambda_c == 1.0);
    CHECK(weights.lambda_pr == 1.0);

    // Independent summation of the weighted terms.
    double expected = 0.0;
    for (const auto& block : blocks)
    {
        double sq = 0.0;
        for (Eigen::Index k = 0; k < block.values.size(); ++k)
            sq += block.values[k] * block.values[k];
        expected += weights.for_tag(block.tag) * sq;
    }
    const double total = total_energy(blocks, weights);
    CHECK(std::abs(total - expected) <= 1e-12 * std::max(1.0, expected));

    // All-zero blocks sum to zero; a single unit-weight prior equals its energy.
    const ResidualBlock pc_only = residual_pc(m, p, m, p.flatten());
    CHECK(total_energy(std::vector<ResidualBlock>{pc_only}, weights) == 0.0);
}

TEST_CASE("residual terms are invariant to a consistent vertex permutation")
{
    const MorphableModel model = synth_model(5, 42, 2, 1);
    const int q = model.vertex_count();
    std::mt19937_64 rng(11);
    std::vector<int> perm(q);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng); // perm[old] = new

    // Permute the model's vertex order consistently.
    DenseShape mean(3, q);
    for (int k = 0; k < q; ++k)
        mean.col(perm[k]) = model.mean_shape().col(k);
    auto permute_basis = [&](const DenseShape& b) {
        DenseShape out(3, q);
        for (int k = 0; k < q; ++k)
            out.col(perm[k]) = b.col(k);
        return out;
    };
    std::vector<DenseShape> id_bases, exp_bases;
    for (const auto& b : model.id_bases())
        id_bases.push_back(permute_basis(b));
    for (const auto& b : model.exp_bases())
        exp_bases.push_back(permute_basis(b));
    std::vector<std::array<int, 3>> triangles;
    for (const auto& t : model.topology().triangles)
        triangles.push_back({perm[t[0]], perm[t[1]], perm[t[2]]});
    std::map<std::string, LandmarkMarkup> markups;
    for (const auto& [name, markup] : model.markups())
    {
        LandmarkMarkup moved;
        moved.name = name;
        for (int v : markup.indices)
            moved.indices.push_back(perm[v]);
        markups.emplace(name, std::move(moved));
    }
    const MorphableModel permuted(mean, id_bases, exp_bases, MeshTopology::build(triangles, q), markups);

    const ProjectionParams m = posed(75.0, -0.3, 3.0, -8.0);
    const ShapeParams p = random_params(model, rng);
    const Point2Set labels = oracles::random_points(model.markup("pts21").size(), 0.0, 100.0, rng);
    const ResidualBlock original =
        residual_lfc(m, p, model, model.markup("pts21"), labels, {});
    const ResidualBlock moved =
        residual_lfc(m, p, permuted, permuted.markup("pts21"), labels, {});
    CHECK(std::abs(original.energy() - moved.energy()) <= 1e-12 * std::max(1.0, original.energy()));

    const std::vector<int> frozen = {1, 17, 30};
    std::vector<int> frozen_moved;
    for (int v : frozen)
        frozen_moved.push_back(perm[v]);
    const Point2Set contour = oracles::random_points(3, 0.0, 100.0, rng);
    const ResidualBlock cfc_a = residual_cfc(m, p, model, contour, frozen);
    const ResidualBlock cfc_b = residual_cfc(m, p, permuted, contour, frozen_moved);
    CHECK(std::abs(cfc_a.energy() - cfc_b.energy()) <= 1e-12 * std::max(1.0, cfc_a.energy()));
}

TEST_CASE("analytic Jacobians match finite differences for all four terms")
{
    const MorphableModel model = synth_model(5, 42, 3, 2);
    const GradCheckReport report = check_jacobians(model, 10, 123);
    CHECK(report.max_rel_pc <= 1e-6);
    CHECK(report.max_rel_lfc <= 1e-6);
    CHECK(report.max_rel_cfc <= 1e-6);
    CHECK(report.max_rel_spc <= 1e-6);
}

TEST_CASE("the corrupted-Jacobian hook makes the gradient check fail")
{
    const MorphableModel model = synth_model(5, 42, 3, 2);
    const GradCheckReport report = check_jacobians(model, 2, 123, true);
    CHECK_FALSE(report.pass(1e-6));
}

TEST_SUITE_END();
