/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/solver.cpp
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
#include "facefit/solver.hpp"

#include "facefit/mesh.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <functional>
#include <limits>

namespace facefit {

void SolveOptions::validate() const
{
    if (max_outer <= 0 || max_inner <= 0)
        throw ParameterError("iteration caps must be positive");
    if (!(energy_tol > 0.0 && energy_tol < 1.0) || !(step_tol > 0.0 && step_tol < 1.0))
        throw ParameterError("tolerances must lie in (0,1)");
    if (!(lm_damping_init > 0.0) || !(damping_up > 1.0) || !(damping_down > 0.0 && damping_down < 1.0))
        throw ParameterError("invalid damping configuration");
    if (weights.lambda_pr < 0 || weights.lambda_lm < 0 || weights.lambda_c < 0 || weights.lambda_s < 0)
        throw ParameterError("weights must be nonnegative");
}

std::pair<ProjectionParams, ShapeParams> init_from_bbox(const MorphableModel& model, const BBox& bbox)
{
    if (!(bbox.w > 0.0) || !(bbox.h > 0.0))
        throw ParameterError("bbox width and height must be positive");
    const auto& mean = model.mean_shape();
    const double width = mean.row(0).maxCoeff() - mean.row(0).minCoeff();
    if (!(width > 0.0))
        throw ParameterError("mean shape has zero projected width");
    Pose pose;
    pose.scale = bbox.w / width;
    pose.tx = bbox.x + 0.5 * bbox.w - pose.scale * 0.5 * (mean.row(0).maxCoeff() + mean.row(0).minCoeff());
    pose.ty = bbox.y + 0.5 * bbox.h - pose.scale * 0.5 * (mean.row(1).maxCoeff() + mean.row(1).minCoeff());
    return {compose_m(pose), model.zero_params()};
}

namespace {

constexpr double kDampingLimit = 1e12;
constexpr double kDampingFloor = 1e-15;

struct Linearization
{
    double energy = 0.0;
    Eigen::VectorXd residual; // rows pre-scaled by sqrt(term weight)
    Eigen::MatrixXd jacobian;
};

/// Frozen correspondences for one image, valid for one inner solve.
struct FrozenSet
{
    std::vector<int> contour_vertices; // one per contour point; empty: no contour term
};

bool camera_rows_valid(const Vector8d& m)
{
    const Eigen::Vector3d rx = m.segment<3>(0);
    const Eigen::Vector3d ry = m.segment<3>(4);
    const double nx = rx.norm();
    const double ny = ry.norm();
    if (!(nx > 1e-12) || !(ny > 1e-12))
        return false;
    return (rx / nx).cross(ry / ny).norm() > 1e-12;
}

/// One image's term setup; builds the active residual blocks at (m, p).
struct ImageProblem
{
    const MorphableModel* model = nullptr;
    const Observations* obs = nullptr;
    const LandmarkMarkup* markup = nullptr;
    Weights weights;
    Vector8d prior_m = Vector8d::Zero();
    Eigen::VectorXd prior_p;
    bool use_pc = false;
    bool use_lfc = false;
    bool contour_enabled = false; // lambda_c > 0 and contour points present

    std::vector<ResidualBlock> build(const ProjectionParams& m, const ShapeParams& p,
                                     const FrozenSet& frozen) const
    {
        std::vector<ResidualBlock> blocks;
        if (use_pc)
        {
            ProjectionParams prior;
            prior.m = prior_m;
            ResidualBlock block = residual_pc(m, p, prior, prior_p);
            block.weight = weights.lambda_pr;
            blocks.push_back(std::move(block));
        }
        if (use_lfc)
        {
            ResidualBlock block =
                residual_lfc(m, p, *model, *markup, obs->landmarks, obs->landmark_mask);
            block.weight = weights.lambda_lm;
            blocks.push_back(std::move(block));
        }
        if (contour_enabled && !frozen.contour_vertices.empty())
        {
            ResidualBlock block = residual_cfc(m, p, *model, obs->contour_points, frozen.contour_vertices);
            block.weight = weights.lambda_c;
            blocks.push_back(std::move(block));
        }
        return blocks;
    }

    /// Recomputes the contour correspondences at (m, p): silhouette of the
    /// transformed shape, optionally intersected with the model's
    /// "contour_mask" markup, matched against the observed contour points.
    FrozenSet refresh(const ProjectionParams& m, const ShapeParams& p) const
    {
        FrozenSet frozen;
        if (!contour_enabled)
            return frozen;
        const DenseShape shape = assemble_shape(*model, p);
        const TransformedShape transformed = transform(m, shape);
        SilhouetteSet silhouette = silhouette_vertices(transformed, model->topology());
        if (model->has_markup("contour_mask"))
            silhouette = restrict_silhouette(silhouette, model->markup("contour_mask").indices);
        if (silhouette.vertex_indices.empty())
            return frozen;
        Point2Set targets(2, static_cast<Eigen::Index>(silhouette.vertex_indices.size()));
        for (std::size_t c = 0; c < silhouette.vertex_indices.size(); ++c)
            targets.col(static_cast<Eigen::Index>(c)) =
                transformed.col(silhouette.vertex_indices[c]).head<2>();
        const MatchSet matches = closest_point_match(obs->contour_points, targets);
        frozen.contour_vertices.resize(matches.pairs.size());
        for (const auto& pair : matches.pairs)
            frozen.contour_vertices[pair.query] = silhouette.vertex_indices[pair.target];
        return frozen;
    }
};

ImageProblem make_image_problem(const MorphableModel& model, const Observations& obs,
                                const SolveOptions& opts, const Vector8d& init_m)
{
    ImageProblem problem;
    problem.model = &model;
    problem.obs = &obs;
    problem.markup = &model.markup(obs.markup_name);
    if (obs.landmarks.cols() != problem.markup->size())
        throw DimensionError("observations landmark count does not match markup '" + obs.markup_name + "'");
    problem.weights = opts.weights;
    problem.use_pc = opts.weights.lambda_pr > 0.0;
    // An active landmark term with zero valid landmarks fails loudly inside
    // residual_lfc rather than being skipped silently.
    problem.use_lfc = opts.weights.lambda_lm > 0.0;
    problem.contour_enabled = opts.weights.lambda_c > 0.0 && obs.contour_points.cols() > 0;
    problem.prior_m = opts.prior_m.value_or(init_m);
    problem.prior_p = opts.prior_p.value_or(Eigen::VectorXd::Zero(model.num_coeffs()));
    if (problem.prior_p.size() != model.num_coeffs())
        throw DimensionError("prior coefficient vector length does not match model");
    return problem;
}

Linearization stack_blocks(const std::vector<const ResidualBlock*>& singles,
                           const std::vector<int>& offsets, const PairResidualBlock* pair_block,
                           int pair_offset_i, int pair_offset_j, int n_params, int n_coeffs)
{
    int rows = 0;
    for (const auto* b : singles)
        rows += b->rows();
    if (pair_block != nullptr)
        rows += pair_block->rows();

    Linearization lin;
    lin.residual.resize(rows);
    lin.jacobian = Eigen::MatrixXd::Zero(rows, n_params);
    int row = 0;
    for (std::size_t k = 0; k < singles.size(); ++k)
    {
        const ResidualBlock& b = *singles[k];
        const double sw = std::sqrt(b.weight);
        lin.residual.segment(row, b.rows()) = sw * b.values;
        lin.jacobian.block(row, offsets[k], b.rows(), 8) = sw * b.jm;
        lin.jacobian.block(row, offsets[k] + 8, b.rows(), n_coeffs) = sw * b.jp;
        lin.energy += b.weight * b.energy();
        row += b.rows();
    }
    if (pair_block != nullptr)
    {
        const PairResidualBlock& b = *pair_block;
        const double sw = std::sqrt(b.weight);
        lin.residual.segment(row, b.rows()) = sw * b.values;
        lin.jacobian.block(row, pair_offset_i, b.rows(), 8) = sw * b.jm_i;
        lin.jacobian.block(row, pair_offset_i + 8, b.rows(), n_coeffs) = sw * b.jp_i;
        lin.jacobian.block(row, pair_offset_j, b.rows(), 8) = sw * b.jm_j;
        lin.jacobian.block(row, pair_offset_j + 8, b.rows(), n_coeffs) = sw * b.jp_j;
        lin.energy += b.weight * b.energy();
    }
    return lin;
}

using EvalFn = std::function<Linearization(const Eigen::VectorXd&)>;
using ValidateFn = std::function<bool(const Eigen::VectorXd&)>;

/// Damped Gauss-Newton descent on a frozen-correspondence linearization.
/// Accepts only strictly decreasing steps; damping scales the normal-equation
/// diagonal. Returns the energy at the final (accepted) point.
double lm_inner(Eigen::VectorXd& x, const EvalFn& eval, const ValidateFn& validate,
                const SolveOptions& opts, int outer, std::vector<TraceEntry>& trace,
                Linearization lin)
{
    double damping = opts.lm_damping_init;
    double energy = lin.energy;
    for (int inner = 0; inner < opts.max_inner; ++inner)
    {
        const Eigen::MatrixXd h = lin.jacobian.transpose() * lin.jacobian;
        const Eigen::VectorXd g = lin.jacobian.transpose() * lin.residual;
        const Eigen::VectorXd diag = h.diagonal().cwiseMax(1e-12);
        bool rejected_degenerate = false;
        // Retry with increased damping until a step is accepted or damping
        // blows past the limit.
        for (;;)
        {
            Eigen::MatrixXd damped = h;
            damped.diagonal() += damping * diag;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            Eigen::VectorXd delta;
            bool solvable = ldlt.info() == Eigen::Success;
            if (solvable)
            {
                delta = ldlt.solve(-g);
                solvable = delta.allFinite();
            }
            if (solvable && delta.norm() <= opts.step_tol * (opts.step_tol + x.norm()))
                return energy; // step collapsed: inner problem converged
            bool accepted = false;
            double new_energy = energy;
            Linearization new_lin;
            if (solvable)
            {
                const Eigen::VectorXd x_new = x + delta;
                if (!validate(x_new))
                {
                    rejected_degenerate = true;
                } else
                {
                    new_lin = eval(x_new);
                    new_energy = new_lin.energy;
                    if (std::isfinite(new_energy) && new_energy < energy)
                    {
                        x = x_new;
                        accepted = true;
                    }
                }
            }
            if (accepted)
            {
                trace.push_back(TraceEntry{outer, inner, new_energy, damping});
                const double decrease = energy - new_energy;
                energy = new_energy;
                lin = std::move(new_lin);
                damping = std::max(damping * opts.damping_down, kDampingFloor);
                if (decrease <= opts.energy_tol * std::max(energy + decrease, 0.0))
                    return energy;
                break; // next inner iteration with fresh linearization
            }
            damping *= opts.damping_up;
            if (damping > kDampingLimit)
            {
                if (rejected_degenerate)
                    throw DegenerateCameraError(
                        "damping exceeded 1e12 while rejecting degenerate-camera steps");
                return energy;
            }
        }
    }
    return energy;
}

std::map<std::string, double> zero_term_energies()
{
    return {{"PC", 0.0}, {"LFC", 0.0}, {"CFC", 0.0}, {"SPC", 0.0}};
}

} // namespace

FitResult fit_single(const MorphableModel& model, const Observations& obs, const ProjectionParams& init_m,
                     const ShapeParams& init_p, const SolveOptions& opts)
{
    opts.validate();
    const ImageProblem problem = make_image_problem(model, obs, opts, init_m.m);
    const int n = model.num_coeffs();
    const int n_params = 8 + n;

    auto unpack_m = [](const Eigen::VectorXd& x) {
        ProjectionParams m;
        m.m = x.head<8>();
        return m;
    };
    auto unpack_p = [&](const Eigen::VectorXd& x) { return model.params_from_flat(x.tail(n)); };

    auto eval_at = [&](const Eigen::VectorXd& x, const FrozenSet& frozen) {
        const auto blocks = problem.build(unpack_m(x), unpack_p(x), frozen);
        std::vector<const ResidualBlock*> ptrs;
        std::vector<int> offsets;
        for (const auto& b : blocks)
        {
            ptrs.push_back(&b);
            offsets.push_back(0);
        }
        return stack_blocks(ptrs, offsets, nullptr, 0, 0, n_params, n);
    };
    const ValidateFn validate = [](const Eigen::VectorXd& x) { return camera_rows_valid(x.head<8>()); };

    Eigen::VectorXd x(n_params);
    x.head<8>() = init_m.m;
    x.tail(n) = init_p.flatten();
    if (!x.allFinite())
        throw InitializationError("initial parameters are not finite");
    if (!camera_rows_valid(init_m.m))
        throw DegenerateCameraError("initial camera is degenerate");

    FitResult result;
    FrozenSet frozen = problem.refresh(unpack_m(x), unpack_p(x));
    Linearization lin = eval_at(x, frozen);
    if (!std::isfinite(lin.energy))
        throw InitializationError("energy at the initial point is not finite");

    Eigen::VectorXd best_x = x;
    double best_energy = lin.energy;
    bool converged = false;
    int outer_done = 0;

    for (int outer = 0; outer < opts.max_outer; ++outer)
    {
        if (outer > 0)
        {
            frozen = problem.refresh(unpack_m(x), unpack_p(x));
            lin = eval_at(x, frozen);
        }
        // Fresh correspondences: lin.energy is the live objective at x.
        result.trace.push_back(TraceEntry{outer, -1, lin.energy, opts.lm_damping_init});
        if (lin.energy < best_energy)
        {
            best_energy = lin.energy;
            best_x = x;
        }
        const Eigen::VectorXd x_start = x;
        const EvalFn eval = [&](const Eigen::VectorXd& xv) { return eval_at(xv, frozen); };
        lm_inner(x, eval, validate, opts, outer, result.trace, lin);
        outer_done = outer + 1;
        if ((x - x_start).norm() <= opts.step_tol * (1.0 + x_start.norm()))
        {
            converged = true;
            break;
        }
    }
    result.outer_iterations = outer_done;
    result.converged = converged;

    // Final live objective; keep whichever visited point scores best on it.
    frozen = problem.refresh(unpack_m(x), unpack_p(x));
    const double final_energy = eval_at(x, frozen).energy;
    if (final_energy <= best_energy)
    {
        best_energy = final_energy;
        best_x = x;
    } else
    {
        frozen = problem.refresh(unpack_m(best_x), unpack_p(best_x));
    }

    result.m = unpack_m(best_x);
    result.p = unpack_p(best_x);
    result.pose = decompose_pose(result.m);
    result.per_term_energies = zero_term_energies();
    for (const auto& block : problem.build(result.m, result.p, frozen))
        result.per_term_energies[term_name(block.tag)] = block.energy();
    return result;
}

std::pair<FitResult, FitResult> fit_pair(const MorphableModel& model, const Observations& obs_i,
                                         const Observations& obs_j, const KeypointPair& pair,
                                         const ProjectionParams& init_m_i, const ShapeParams& init_p_i,
                                         const ProjectionParams& init_m_j, const ShapeParams& init_p_j,
                                         const SolveOptions& opts)
{
    opts.validate();
    if (pair.size() == 0 || opts.weights.lambda_s <= 0.0)
    {
        // No coupling: identical to two independent single-image fits.
        return {fit_single(model, obs_i, init_m_i, init_p_i, opts),
                fit_single(model, obs_j, init_m_j, init_p_j, opts)};
    }

    const ImageProblem prob_i = make_image_problem(model, obs_i, opts, init_m_i.m);
    const ImageProblem prob_j = make_image_problem(model, obs_j, opts, init_m_j.m);
    const int n = model.num_coeffs();
    const int per_image = 8 + n;
    const int n_params = 2 * per_image;

    struct PairFrozen
    {
        FrozenSet image_i;
        FrozenSet image_j;
        std::vector<int> verts_i; // lookup of pair.in_i on image i's shape
        std::vector<int> verts_j;
    };

    auto unpack = [&](const Eigen::VectorXd& x, int offset) {
        ProjectionParams m;
        m.m = x.segment<8>(offset);
        return std::make_pair(m, model.params_from_flat(x.segment(offset + 8, n)));
    };

    auto refresh = [&](const Eigen::VectorXd& x) {
        PairFrozen frozen;
        const auto [mi, pi] = unpack(x, 0);
        const auto [mj, pj] = unpack(x, per_image);
        frozen.image_i = prob_i.refresh(mi, pi);
        frozen.image_j = prob_j.refresh(mj, pj);
        const MeshTopology* topo = opts.visible_only_sift ? &model.topology() : nullptr;
        frozen.verts_i = sift_vertex_lookup(pair.in_i, transform(mi, assemble_shape(model, pi)), topo);
        frozen.verts_j = sift_vertex_lookup(pair.in_j, transform(mj, assemble_shape(model, pj)), topo);
        return frozen;
    };

    auto eval_at = [&](const Eigen::VectorXd& x, const PairFrozen& frozen) {
        const auto [mi, pi] = unpack(x, 0);
        const auto [mj, pj] = unpack(x, per_image);
        const auto blocks_i = prob_i.build(mi, pi, frozen.image_i);
        const auto blocks_j = prob_j.build(mj, pj, frozen.image_j);
        PairResidualBlock spc = residual_spc(mi, pi, mj, pj, model, pair, frozen.verts_i, frozen.verts_j);
        spc.weight = opts.weights.lambda_s;
        std::vector<const ResidualBlock*> ptrs;
        std::vector<int> offsets;
        for (const auto& b : blocks_i)
        {
            ptrs.push_back(&b);
            offsets.push_back(0);
        }
        for (const auto& b : blocks_j)
        {
            ptrs.push_back(&b);
            offsets.push_back(per_image);
        }
        return stack_blocks(ptrs, offsets, &spc, 0, per_image, n_params, n);
    };
    const ValidateFn validate = [&](const Eigen::VectorXd& x) {
        return camera_rows_valid(x.segment<8>(0)) && camera_rows_valid(x.segment<8>(per_image));
    };

    Eigen::VectorXd x(n_params);
    x.segment<8>(0) = init_m_i.m;
    x.segment(8, n) = init_p_i.flatten();
    x.segment<8>(per_image) = init_m_j.m;
    x.segment(per_image + 8, n) = init_p_j.flatten();
    if (!x.allFinite())
        throw InitializationError("initial parameters are not finite");
    if (!camera_rows_valid(init_m_i.m) || !camera_rows_valid(init_m_j.m))
        throw DegenerateCameraError("initial camera is degenerate");

    std::vector<TraceEntry> trace;
    PairFrozen frozen = refresh(x);
    Linearization lin = eval_at(x, frozen);
    if (!std::isfinite(lin.energy))
        throw InitializationError("energy at the initial point is not finite");

    Eigen::VectorXd best_x = x;
    double best_energy = lin.energy;
    bool converged = false;
    int outer_done = 0;

    for (int outer = 0; outer < opts.max_outer; ++outer)
    {
        if (outer > 0)
        {
            frozen = refresh(x);
            lin = eval_at(x, frozen);
        }
        trace.push_back(TraceEntry{outer, -1, lin.energy, opts.lm_damping_init});
        if (lin.energy < best_energy)
        {
            best_energy = lin.energy;
            best_x = x;
        }
        const Eigen::VectorXd x_start = x;
        const EvalFn eval = [&](const Eigen::VectorXd& xv) { return eval_at(xv, frozen); };
        lm_inner(x, eval, validate, opts, outer, trace, lin);
        outer_done = outer + 1;
        if ((x - x_start).norm() <= opts.step_tol * (1.0 + x_start.norm()))
        {
            converged = true;
            break;
        }
    }

    frozen = refresh(x);
    const double final_energy = eval_at(x, frozen).energy;
    if (final_energy <= best_energy)
    {
        best_x = x;
    } else
    {
        frozen = refresh(best_x);
    }

    const auto [mi, pi] = unpack(best_x, 0);
    const auto [mj, pj] = unpack(best_x, per_image);
    FitResult res_i, res_j;
    res_i.m = mi;
    res_i.p = pi;
    res_i.pose = decompose_pose(mi);
    res_j.m = mj;
    res_j.p = pj;
    res_j.pose = decompose_pose(mj);
    res_i.outer_iterations = res_j.outer_iterations = outer_done;
    res_i.converged = res_j.converged = converged;
    res_i.trace = trace;
    res_j.trace = std::move(trace);

    res_i.per_term_energies = zero_term_energies();
    res_j.per_term_energies = zero_term_energies();
    for (const auto& block : prob_i.build(mi, pi, frozen.image_i))
        res_i.per_term_energies[term_name(block.tag)] = block.energy();
    for (const auto& block : prob_j.build(mj, pj, frozen.image_j))
        res_j.per_term_energies[term_name(block.tag)] = block.energy();
    const PairResidualBlock spc =
        residual_spc(mi, pi, mj, pj, model, pair, frozen.verts_i, frozen.verts_j);
    res_i.per_term_energies["SPC"] = spc.energy();
    res_j.per_term_energies["SPC"] = spc.energy();
    return {std::move(res_i), std::move(res_j)};
}

} /* namespace facefit */
