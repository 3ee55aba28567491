/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/energy.cpp
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

#include <cmath>
#include <sstream>

namespace facefit {

const char* term_name(TermTag tag)
{
    switch (tag)
    {
    case TermTag::PC:
        return "PC";
    case TermTag::LFC:
        return "LFC";
    case TermTag::CFC:
        return "CFC";
    case TermTag::SPC:
        return "SPC";
    }
    return "?";
}

double Weights::for_tag(TermTag tag) const
{
    switch (tag)
    {
    case TermTag::PC:
        return lambda_pr;
    case TermTag::LFC:
        return lambda_lm;
    case TermTag::CFC:
        return lambda_c;
    case TermTag::SPC:
        return lambda_s;
    }
    return 0.0;
}

int Observations::valid_landmark_count() const
{
    if (landmark_mask.empty())
        return static_cast<int>(landmarks.cols());
    int count = 0;
    for (bool v : landmark_mask)
        count += v ? 1 : 0;
    return count;
}

Eigen::MatrixXd PairResidualBlock::stacked_jacobian() const
{
    Eigen::MatrixXd j(rows(), jm_i.cols() + jp_i.cols() + jm_j.cols() + jp_j.cols());
    j << jm_i, jp_i, jm_j, jp_j;
    return j;
}

ResidualBlock residual_pc(const ProjectionParams& m, const ShapeParams& p, const ProjectionParams& prior_m,
                          const Eigen::VectorXd& prior_p)
{
    const Eigen::VectorXd p_flat = p.flatten();
    if (prior_p.size() != p_flat.size())
        throw DimensionError("prior coefficient vector has length " + std::to_string(prior_p.size()) +
                             ", expected " + std::to_string(p_flat.size()));
    const int n = static_cast<int>(p_flat.size());
    ResidualBlock block;
    block.tag = TermTag::PC;
    block.values.resize(8 + n);
    block.values.head<8>() = m.m - prior_m.m;
    block.values.tail(n) = p_flat - prior_p;
    block.jm = Eigen::MatrixXd::Zero(8 + n, 8);
    block.jm.topLeftCorner(8, 8).setIdentity();
    block.jp = Eigen::MatrixXd::Zero(8 + n, n);
    block.jp.bottomRightCorner(n, n).setIdentity();
    return block;
}

namespace {

/**
 * Shared core of the landmark-style 2D terms: residual rows (x then y per
 * point) for projected model vertices against observed 2D points, scaled by
 * `scale`, with Jacobians w.r.t. m and the coefficients.
 *
 * For vertex position s (a function of p) the projection is
 *   x = (m1,m2,m3).s + m4,  y = (m5,m6,m7).s + m8,
 * so d(x)/dm = [s 1 0 0], d(y)/dm = [0 0 s 1] and d(x)/dp_i = rowx . B_i(:,k).
 */
ResidualBlock projected_point_block(TermTag tag, const ProjectionParams& m, const ShapeParams& p,
                                    const MorphableModel& model, std::span<const int> vertices,
                                    const Point2Set& observed, std::span<const int> observed_cols,
                                    double scale)
{
    const int count = static_cast<int>(vertices.size());
    const int n = model.num_coeffs();
    const Eigen::Vector3d row_x = m.row_x();
    const Eigen::Vector3d row_y = m.row_y();

    ResidualBlock block;
    block.tag = tag;
    block.values.resize(2 * count);
    block.jm = Eigen::MatrixXd::Zero(2 * count, 8);
    block.jp.resize(2 * count, n);

    const DenseShape s = assemble_columns(model, p, vertices);
    for (int c = 0; c < count; ++c)
    {
        const Eigen::Vector3d sv = s.col(c);
        const int obs_col = observed_cols[c];
        const double proj_x = row_x.dot(sv) + m.tx();
        const double proj_y = row_y.dot(sv) + m.ty();
        const int rx = 2 * c;
        const int ry = 2 * c + 1;
        block.values[rx] = scale * (proj_x - observed(0, obs_col));
        block.values[ry] = scale * (proj_y - observed(1, obs_col));
        block.jm.block<1, 3>(rx, 0) = scale * sv.transpose();
        block.jm(rx, 3) = scale;
        block.jm.block<1, 3>(ry, 4) = scale * sv.transpose();
        block.jm(ry, 7) = scale;
        const int k = vertices[c];
        for (int i = 0; i < model.num_id(); ++i)
        {
            const Eigen::Vector3d b = model.id_bases()[i].col(k);
            block.jp(rx, i) = scale * row_x.dot(b);
            block.jp(ry, i) = scale * row_y.dot(b);
        }
        for (int j = 0; j < model.num_exp(); ++j)
        {
            const Eigen::Vector3d b = model.exp_bases()[j].col(k);
            block.jp(rx, model.num_id() + j) = scale * row_x.dot(b);
            block.jp(ry, model.num_id() + j) = scale * row_y.dot(b);
        }
    }
    return block;
}

std::vector<int> iota_vector(int n)
{
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = i;
    return v;
}

} // namespace

ResidualBlock residual_lfc(const ProjectionParams& m, const ShapeParams& p, const MorphableModel& model,
                           const LandmarkMarkup& markup, const Point2Set& landmarks,
                           const std::vector<bool>& mask)
{
    if (landmarks.cols() != markup.size())
    {
        std::ostringstream msg;
        msg << "landmark count " << landmarks.cols() << " does not match markup '" << markup.name << "' ("
            << markup.size() << ")";
        throw DimensionError(msg.str());
    }
    if (!mask.empty() && static_cast<int>(mask.size()) != markup.size())
        throw DimensionError("landmark mask length does not match markup");

    std::vector<int> vertices;
    std::vector<int> cols;
    for (int l = 0; l < markup.size(); ++l)
    {
        if (mask.empty() || mask[l])
        {
            vertices.push_back(markup.indices[l]);
            cols.push_back(l);
        }
    }
    if (vertices.empty())
        throw EmptyTermError("landmark term: no valid landmarks");
    const double scale = 1.0 / std::sqrt(static_cast<double>(vertices.size()));
    return projected_point_block(TermTag::LFC, m, p, model, vertices, landmarks, cols, scale);
}

ResidualBlock residual_cfc(const ProjectionParams& m, const ShapeParams& p, const MorphableModel& model,
                           const Point2Set& contour_points, const std::vector<int>& frozen_vertices)
{
    if (static_cast<int>(frozen_vertices.size()) != contour_points.cols())
        throw DimensionError("frozen correspondence count does not match contour point count");
    ResidualBlock block;
    block.tag = TermTag::CFC;
    if (frozen_vertices.empty())
    {
        block.values.resize(0);
        block.jm.resize(0, 8);
        block.jp.resize(0, model.num_coeffs());
        return block;
    }
    for (int k : frozen_vertices)
        if (k < 0 || k >= model.vertex_count())
            throw ValidationError("frozen correspondence vertex index out of range");
    const double scale = 1.0 / std::sqrt(static_cast<double>(frozen_vertices.size()));
    const std::vector<int> cols = iota_vector(static_cast<int>(frozen_vertices.size()));
    return projected_point_block(TermTag::CFC, m, p, model, frozen_vertices, contour_points, cols, scale);
}

PairResidualBlock residual_spc(const ProjectionParams& m_i, const ShapeParams& p_i,
                               const ProjectionParams& m_j, const ShapeParams& p_j,
                               const MorphableModel& model, const KeypointPair& pair,
                               const std::vector<int>& vertices_i, const std::vector<int>& vertices_j)
{
    const int l = pair.size();
    const int n = model.num_coeffs();
    PairResidualBlock block;
    if (l == 0)
    {
        block.values.resize(0);
        block.jm_i.resize(0, 8);
        block.jp_i.resize(0, n);
        block.jm_j.resize(0, 8);
        block.jp_j.resize(0, n);
        return block;
    }
    if (static_cast<int>(vertices_i.size()) != l || static_cast<int>(vertices_j.size()) != l)
        throw DimensionError("keypoint vertex lookups do not match match count");

    const double scale = 1.0 / std::sqrt(static_cast<double>(l));
    const std::vector<int> cols = iota_vector(l);
    // Cross terms: image i's shape at the vertices located in image j, and
    // image j's shape at the vertices located in image i.
    const ResidualBlock term_i =
        projected_point_block(TermTag::SPC, m_i, p_i, model, vertices_j, pair.in_i, cols, scale);
    const ResidualBlock term_j =
        projected_point_block(TermTag::SPC, m_j, p_j, model, vertices_i, pair.in_j, cols, scale);

    block.values.resize(4 * l);
    block.values.head(2 * l) = term_i.values;
    block.values.tail(2 * l) = term_j.values;
    block.jm_i = Eigen::MatrixXd::Zero(4 * l, 8);
    block.jp_i = Eigen::MatrixXd::Zero(4 * l, n);
    block.jm_j = Eigen::MatrixXd::Zero(4 * l, 8);
    block.jp_j = Eigen::MatrixXd::Zero(4 * l, n);
    block.jm_i.topRows(2 * l) = term_i.jm;
    block.jp_i.topRows(2 * l) = term_i.jp;
    block.jm_j.bottomRows(2 * l) = term_j.jm;
    block.jp_j.bottomRows(2 * l) = term_j.jp;
    return block;
}

double total_energy(std::span<const ResidualBlock> blocks, const Weights& weights)
{
    double total = 0.0;
    for (const auto& block : blocks)
        total += weights.for_tag(block.tag) * block.energy();
    return total;
}

} /* namespace facefit */
