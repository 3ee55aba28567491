/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/gradcheck.cpp
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
#include "facefit/gradcheck.hpp"

#include "facefit/camera.hpp"

#include <algorithm>
#include <functional>
#include <random>

namespace facefit {

double GradCheckReport::max_rel() const
{
    return std::max(std::max(max_rel_pc, max_rel_lfc), std::max(max_rel_cfc, max_rel_spc));
}

namespace {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central finite differences of fn at x, step 1e-6 per-coordinate scale.
Eigen::MatrixXd fd_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x)
{
    const Eigen::VectorXd r0 = fn(x);
    Eigen::MatrixXd jac(r0.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k)
    {
        const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[k] += h;
        xm[k] -= h;
        jac.col(k) = (fn(xp) - fn(xm)) / (2.0 * h);
    }
    return jac;
}

double max_rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd)
{
    double worst = 0.0;
    for (Eigen::Index r = 0; r < analytic.rows(); ++r)
    {
        for (Eigen::Index c = 0; c < analytic.cols(); ++c)
        {
            const double a = analytic(r, c);
            const double f = fd(r, c);
            const double rel = std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

struct RandomConfig
{
    ProjectionParams m;
    ShapeParams p;
};

RandomConfig random_config(const MorphableModel& model, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> angle(-0.6, 0.6);
    std::uniform_real_distribution<double> scale(40.0, 160.0);
    std::uniform_real_distribution<double> shift(-40.0, 40.0);
    std::normal_distribution<double> coeff(0.0, 0.5);
    Pose pose;
    pose.scale = scale(rng);
    pose.pitch = angle(rng);
    pose.yaw = angle(rng);
    pose.roll = angle(rng);
    pose.tx = shift(rng);
    pose.ty = shift(rng);
    RandomConfig cfg;
    cfg.m = compose_m(pose);
    // Off-manifold perturbation: the solver's iterates are not exact scaled
    // rotations either.
    std::normal_distribution<double> jitter(0.0, 0.5);
    for (int k = 0; k < 8; ++k)
        cfg.m.m[k] += jitter(rng);
    cfg.p = model.zero_params();
    for (Eigen::Index i = 0; i < cfg.p.id.size(); ++i)
        cfg.p.id[i] = coeff(rng);
    for (Eigen::Index j = 0; j < cfg.p.exp.size(); ++j)
        cfg.p.exp[j] = coeff(rng);
    return cfg;
}

Eigen::VectorXd pack(const ProjectionParams& m, const ShapeParams& p)
{
    Eigen::VectorXd x(8 + p.size());
    x.head<8>() = m.m;
    x.tail(p.size()) = p.flatten();
    return x;
}

void unpack(const MorphableModel& model, const Eigen::VectorXd& x, ProjectionParams& m, ShapeParams& p)
{
    m.m = x.head<8>();
    p = model.params_from_flat(x.tail(x.size() - 8));
}

std::vector<int> random_vertices(const MorphableModel& model, int count, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> pick(0, model.vertex_count() - 1);
    std::vector<int> v(count);
    for (int& k : v)
        k = pick(rng);
    return v;
}

Point2Set random_points(int count, double spread, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, spread);
    Point2Set pts(2, count);
    for (int c = 0; c < count; ++c)
    {
        pts(0, c) = gauss(rng);
        pts(1, c) = gauss(rng);
    }
    return pts;
}

} // namespace

GradCheckReport check_jacobians(const MorphableModel& model, int trials, std::uint64_t seed,
                                bool corrupt_analytic)
{
    if (trials <= 0)
        throw ParameterError("gradient check requires trials > 0");

    std::mt19937_64 rng(seed);
    GradCheckReport report;
    const int n = model.num_coeffs();
    const double corruption = corrupt_analytic ? 1e-3 : 0.0;

    // The markup with the most points gives the most informative LFC test.
    const LandmarkMarkup* markup = nullptr;
    for (const auto& [name, mk] : model.markups())
        if (markup == nullptr || mk.size() > markup->size())
            markup = &mk;
    if (markup == nullptr)
        throw ValidationError("gradient check requires a model with at least one markup");

    for (int trial = 0; trial < trials; ++trial)
    {
        const RandomConfig cfg = random_config(model, rng);
        const Eigen::VectorXd x0 = pack(cfg.m, cfg.p);

        // PC ---------------------------------------------------------------
        {
            ProjectionParams prior_m;
            std::normal_distribution<double> gauss(0.0, 10.0);
            for (int k = 0; k < 8; ++k)
                prior_m.m[k] = gauss(rng);
            Eigen::VectorXd prior_p(n);
            for (int k = 0; k < n; ++k)
                prior_p[k] = gauss(rng);
            const ResidualFn fn = [&](const Eigen::VectorXd& x) {
                ProjectionParams m;
                ShapeParams p;
                unpack(model, x, m, p);
                return residual_pc(m, p, prior_m, prior_p).values;
            };
            ResidualBlock block = residual_pc(cfg.m, cfg.p, prior_m, prior_p);
            Eigen::MatrixXd analytic(block.rows(), 8 + n);
            analytic << block.jm, block.jp;
            analytic(0, 0) += corruption;
            report.max_rel_pc = std::max(report.max_rel_pc, max_rel_error(analytic, fd_jacobian(fn, x0)));
        }

        // LFC --------------------------------------------------------------
        {
            std::vector<bool> mask(markup->size(), true);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (std::size_t k = 1; k < mask.size(); ++k)
                mask[k] = unit(rng) > 0.15;
            Point2Set labels = random_points(markup->size(), 60.0, rng);
            const ResidualFn fn = [&](const Eigen::VectorXd& x) {
                ProjectionParams m;
                ShapeParams p;
                unpack(model, x, m, p);
                return residual_lfc(m, p, model, *markup, labels, mask).values;
            };
            ResidualBlock block = residual_lfc(cfg.m, cfg.p, model, *markup, labels, mask);
            Eigen::MatrixXd analytic(block.rows(), 8 + n);
            analytic << block.jm, block.jp;
            analytic(0, 0) += corruption;
            report.max_rel_lfc = std::max(report.max_rel_lfc, max_rel_error(analytic, fd_jacobian(fn, x0)));
        }

        // CFC --------------------------------------------------------------
        {
            const int lc = 12;
            const std::vector<int> frozen = random_vertices(model, lc, rng);
            Point2Set contour = random_points(lc, 60.0, rng);
            const ResidualFn fn = [&](const Eigen::VectorXd& x) {
                ProjectionParams m;
                ShapeParams p;
                unpack(model, x, m, p);
                return residual_cfc(m, p, model, contour, frozen).values;
            };
            ResidualBlock block = residual_cfc(cfg.m, cfg.p, model, contour, frozen);
            Eigen::MatrixXd analytic(block.rows(), 8 + n);
            analytic << block.jm, block.jp;
            analytic(0, 0) += corruption;
            report.max_rel_cfc = std::max(report.max_rel_cfc, max_rel_error(analytic, fd_jacobian(fn, x0)));
        }

        // SPC --------------------------------------------------------------
        {
            const RandomConfig other = random_config(model, rng);
            const int lij = 10;
            KeypointPair pair;
            pair.in_i = random_points(lij, 60.0, rng);
            pair.in_j = random_points(lij, 60.0, rng);
            const std::vector<int> verts_i = random_vertices(model, lij, rng);
            const std::vector<int> verts_j = random_vertices(model, lij, rng);
            Eigen::VectorXd stacked(2 * (8 + n));
            stacked << pack(cfg.m, cfg.p), pack(other.m, other.p);
            const ResidualFn fn = [&](const Eigen::VectorXd& x) {
                ProjectionParams mi, mj;
                ShapeParams pi, pj;
                unpack(model, x.head(8 + n), mi, pi);
                unpack(model, x.tail(8 + n), mj, pj);
                return residual_spc(mi, pi, mj, pj, model, pair, verts_i, verts_j).values;
            };
            PairResidualBlock block =
                residual_spc(cfg.m, cfg.p, other.m, other.p, model, pair, verts_i, verts_j);
            Eigen::MatrixXd analytic = block.stacked_jacobian();
            analytic(0, 0) += corruption;
            report.max_rel_spc =
                std::max(report.max_rel_spc, max_rel_error(analytic, fd_jacobian(fn, stacked)));
        }
    }
    return report;
}

} /* namespace facefit */
