/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/correspondence.cpp
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
#include "facefit/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace facefit {

double MatchSet::total_squared_distance() const
{
    double total = 0.0;
    for (const auto& p : pairs)
        total += p.squared_distance;
    return total;
}

int KeypointPair::size() const
{
    if (in_i.cols() != in_j.cols())
        throw DimensionError("keypoint pair matrices have different column counts");
    return static_cast<int>(in_i.cols());
}

namespace {

/**
 * Uniform grid over the target bounding box. Cell boundaries are the exact
 * doubles b[i] = lo + i*cell, and every target is assigned to the cell whose
 * [b[i], b[i+1]) span contains it (after a local adjustment that undoes any
 * floating-point drift of the floor estimate). That containment guarantee is
 * what lets ring expansion stop early without ever missing the true nearest
 * neighbour.
 */
class UniformGrid
{
public:
    explicit UniformGrid(const Point2Set& targets)
    {
        const int m = static_cast<int>(targets.cols());
        lo_ = targets.rowwise().minCoeff();
        const Eigen::Vector2d hi = targets.rowwise().maxCoeff();
        const int side = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(m))), 1, 1024);
        nx_ = side;
        ny_ = side;
        cw_ = (hi.x() - lo_.x()) / nx_;
        ch_ = (hi.y() - lo_.y()) / ny_;
        buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (int t = 0; t < m; ++t)
            buckets_[cell_index(cell_of(targets.col(t)))].push_back(t);
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }

    std::pair<int, int> cell_of(const Eigen::Vector2d& p) const
    {
        return {axis_cell(p.x(), lo_.x(), cw_, nx_), axis_cell(p.y(), lo_.y(), ch_, ny_)};
    }

    const std::vector<int>& bucket(int cx, int cy) const { return buckets_[cell_index({cx, cy})]; }

    double boundary(int i, bool x_axis) const
    {
        return x_axis ? lo_.x() + i * cw_ : lo_.y() + i * ch_;
    }

private:
    static int axis_cell(double v, double lo, double cell, int n)
    {
        if (!(cell > 0.0))
            return 0;
        int i = static_cast<int>(std::floor((v - lo) / cell));
        i = std::clamp(i, 0, n - 1);
        // Adjust so that lo + i*cell <= v < lo + (i+1)*cell holds exactly in
        // double arithmetic (up to the clamped ends).
        while (i > 0 && v < lo + i * cell)
            --i;
        while (i < n - 1 && v >= lo + (i + 1) * cell)
            ++i;
        return i;
    }

    std::size_t cell_index(std::pair<int, int> c) const
    {
        return static_cast<std::size_t>(c.second) * nx_ + c.first;
    }

    Eigen::Vector2d lo_;
    int nx_ = 1, ny_ = 1;
    double cw_ = 0.0, ch_ = 0.0;
    std::vector<std::vector<int>> buckets_;
};

struct Best
{
    double d2 = std::numeric_limits<double>::infinity();
    int index = -1;

    void consider(double d2_candidate, int idx)
    {
        if (d2_candidate < d2 || (d2_candidate == d2 && idx < index))
        {
            d2 = d2_candidate;
            index = idx;
        }
    }
};

} // namespace

MatchSet closest_point_match(const Point2Set& queries, const Point2Set& targets)
{
    if (targets.cols() == 0)
        throw NoCandidatesError("closest_point_match: empty target set");
    MatchSet result;
    result.pairs.resize(queries.cols());
    const UniformGrid grid(targets);

    for (int qi = 0; qi < queries.cols(); ++qi)
    {
        const Eigen::Vector2d q = queries.col(qi);
        const auto [qcx, qcy] = grid.cell_of(q);
        Best best;
        for (int r = 0;; ++r)
        {
            const int x0 = std::max(qcx - r, 0), x1 = std::min(qcx + r, grid.nx() - 1);
            const int y0 = std::max(qcy - r, 0), y1 = std::min(qcy + r, grid.ny() - 1);
            auto scan_cell = [&](int cx, int cy) {
                for (int t : grid.bucket(cx, cy))
                {
                    const double d2 = (targets.col(t) - q).squaredNorm();
                    best.consider(d2, t);
                }
            };
            if (r == 0)
            {
                scan_cell(x0, y0);
            } else
            {
                // Chebyshev shell at radius r (cells not scanned before).
                for (int cx = x0; cx <= x1; ++cx)
                {
                    if (qcy - r >= 0)
                        scan_cell(cx, qcy - r);
                    if (qcy + r <= grid.ny() - 1)
                        scan_cell(cx, qcy + r);
                }
                for (int cy = std::max(qcy - r + 1, 0); cy <= std::min(qcy + r - 1, grid.ny() - 1); ++cy)
                {
                    if (qcx - r >= 0)
                        scan_cell(qcx - r, cy);
                    if (qcx + r <= grid.nx() - 1)
                        scan_cell(qcx + r, cy);
                }
            }
            const bool covers_grid = (qcx - r <= 0 && qcx + r >= grid.nx() - 1 && qcy - r <= 0 &&
                                      qcy + r >= grid.ny() - 1);
            if (covers_grid)
                break; // every target has been scanned
            // All unscanned targets lie outside the world-space rectangle of
            // the scanned cell block; stop once the incumbent is provably
            // closer than that rectangle's boundary (with a small safety
            // factor so rounding can only cause extra scanning).
            const double exit_x0 = q.x() - grid.boundary(x0, true);
            const double exit_x1 = grid.boundary(x1 + 1, true) - q.x();
            const double exit_y0 = q.y() - grid.boundary(y0, false);
            const double exit_y1 = grid.boundary(y1 + 1, false) - q.y();
            const double bound = std::min(std::min(exit_x0, exit_x1), std::min(exit_y0, exit_y1));
            if (best.index >= 0 && bound > 0.0 && best.d2 < bound * bound * (1.0 - 1e-9))
                break;
        }
        result.pairs[qi] = MatchSet::Pair{qi, best.index, best.d2};
    }
    return result;
}

std::vector<int> sift_vertex_lookup(const Point2Set& keypoints, const TransformedShape& transformed,
                                    const MeshTopology* visibility_topology)
{
    if (transformed.cols() == 0)
        throw NoCandidatesError("sift_vertex_lookup: empty shape");

    std::vector<int> candidates;
    if (visibility_topology != nullptr)
    {
        const Eigen::VectorXd vz = vertex_normal_z(transformed, *visibility_topology);
        for (int k = 0; k < transformed.cols(); ++k)
            if (vz[k] > 0.0)
                candidates.push_back(k);
    }
    const bool restricted = !candidates.empty();
    Point2Set targets;
    if (restricted)
    {
        targets.resize(2, static_cast<Eigen::Index>(candidates.size()));
        for (std::size_t c = 0; c < candidates.size(); ++c)
            targets.col(static_cast<Eigen::Index>(c)) = transformed.col(candidates[c]).head<2>();
    } else
    {
        targets = transformed.topRows<2>();
    }

    const MatchSet matches = closest_point_match(keypoints, targets);
    std::vector<int> out(keypoints.cols());
    for (const auto& pair : matches.pairs)
        out[pair.query] = restricted ? candidates[pair.target] : pair.target;
    return out;
}

double polyline_distance(const Eigen::Vector2d& point, const Point2Set& polyline)
{
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s + 1 < polyline.cols(); ++s)
    {
        const Eigen::Vector2d a = polyline.col(s);
        const Eigen::Vector2d b = polyline.col(s + 1);
        const Eigen::Vector2d ab = b - a;
        const double len2 = ab.squaredNorm();
        double t = 0.0;
        if (len2 > 0.0)
            t = std::clamp((point - a).dot(ab) / len2, 0.0, 1.0);
        best = std::min(best, (point - (a + t * ab)).norm());
    }
    return best;
}

BandFilterResult band_filter_edges(const Point2Set& edge_points, const Point2Set& contour_landmarks,
                                   double tau)
{
    if (!(tau > 0.0))
        throw ParameterError("band_filter_edges: tau must be positive");
    BandFilterResult result;
    if (contour_landmarks.cols() < 2)
    {
        result.points = edge_points;
        result.band_undefined = true;
        return result;
    }
    std::vector<int> kept;
    for (int i = 0; i < edge_points.cols(); ++i)
        if (polyline_distance(edge_points.col(i), contour_landmarks) <= tau)
            kept.push_back(i);
    result.points.resize(2, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c)
        result.points.col(static_cast<Eigen::Index>(c)) = edge_points.col(kept[c]);
    return result;
}

} /* namespace facefit */
