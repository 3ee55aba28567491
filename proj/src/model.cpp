/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/model.cpp
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
#include "facefit/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace facefit {

MeshTopology MeshTopology::build(std::vector<std::array<int, 3>> triangles, int vertex_count)
{
    MeshTopology topo;
    std::map<std::pair<int, int>, std::pair<int, int>> adjacency; // edge -> (face0, face1)
    for (std::size_t f = 0; f < triangles.size(); ++f)
    {
        const auto& t = triangles[f];
        for (int v : t)
        {
            if (v < 0 || v >= vertex_count)
            {
                std::ostringstream msg;
                msg << "triangles[" << f << "]: vertex index " << v << " out of range [0," << vertex_count
                    << ")";
                throw ValidationError(msg.str());
            }
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        {
            std::ostringstream msg;
            msg << "triangles[" << f << "]: degenerate triangle (repeated vertex index)";
            throw ValidationError(msg.str());
        }
        for (int e = 0; e < 3; ++e)
        {
            const int a = t[e];
            const int b = t[(e + 1) % 3];
            const auto key = std::minmax(a, b);
            auto [it, inserted] = adjacency.try_emplace(key, static_cast<int>(f), -1);
            if (!inserted)
            {
                if (it->second.second >= 0)
                {
                    std::ostringstream msg;
                    msg << "edge (" << key.first << "," << key.second << ") borders more than 2 faces";
                    throw ValidationError(msg.str());
                }
                it->second.second = static_cast<int>(f);
            }
        }
    }
    topo.triangles = std::move(triangles);
    topo.edges.reserve(adjacency.size());
    for (const auto& [key, faces] : adjacency)
        topo.edges.push_back(EdgeRecord{key.first, key.second, faces.first, faces.second});
    return topo;
}

Eigen::VectorXd ShapeParams::flatten() const
{
    Eigen::VectorXd flat(id.size() + exp.size());
    flat << id, exp;
    return flat;
}

namespace {

void validate_markup(const LandmarkMarkup& markup, int vertex_count)
{
    std::set<int> seen;
    for (std::size_t i = 0; i < markup.indices.size(); ++i)
    {
        const int v = markup.indices[i];
        if (v < 0 || v >= vertex_count)
        {
            std::ostringstream msg;
            msg << "markups." << markup.name << "[" << i << "]: vertex index " << v << " out of range [0,"
                << vertex_count << ")";
            throw ValidationError(msg.str());
        }
        if (!seen.insert(v).second)
        {
            std::ostringstream msg;
            msg << "markups." << markup.name << "[" << i << "]: duplicate vertex index " << v;
            throw ValidationError(msg.str());
        }
    }
}

} // namespace

MorphableModel::MorphableModel(DenseShape mean_shape, std::vector<DenseShape> id_bases,
                               std::vector<DenseShape> exp_bases, MeshTopology topology,
                               std::map<std::string, LandmarkMarkup> markups)
    : mean_shape_(std::move(mean_shape)), id_bases_(std::move(id_bases)), exp_bases_(std::move(exp_bases)),
      topology_(std::move(topology)), markups_(std::move(markups))
{
    const Eigen::Index q = mean_shape_.cols();
    if (q < 3)
        throw ValidationError("mean: vertex count must be >= 3, got " + std::to_string(q));
    if (!mean_shape_.allFinite())
        throw ValidationError("mean: contains non-finite values");
    auto check_bases = [q](const std::vector<DenseShape>& bases, const char* field) {
        for (std::size_t i = 0; i < bases.size(); ++i)
        {
            if (bases[i].cols() != q)
            {
                std::ostringstream msg;
                msg << field << "[" << i << "]: expected " << q << " columns, got " << bases[i].cols();
                throw DimensionError(msg.str());
            }
            if (!bases[i].allFinite())
            {
                std::ostringstream msg;
                msg << field << "[" << i << "]: contains non-finite values";
                throw ValidationError(msg.str());
            }
        }
    };
    check_bases(id_bases_, "id_bases");
    check_bases(exp_bases_, "exp_bases");
    // Triangle index range was validated when the topology was built against
    // its own vertex_count; re-check against this model's Q.
    for (std::size_t f = 0; f < topology_.triangles.size(); ++f)
    {
        for (int v : topology_.triangles[f])
        {
            if (v < 0 || v >= q)
            {
                std::ostringstream msg;
                msg << "triangles[" << f << "]: vertex index " << v << " out of range [0," << q << ")";
                throw ValidationError(msg.str());
            }
        }
    }
    for (const auto& [name, markup] : markups_)
    {
        if (markup.name != name)
            throw ValidationError("markups." + name + ": name field mismatch ('" + markup.name + "')");
        validate_markup(markup, static_cast<int>(q));
    }
}

const LandmarkMarkup& MorphableModel::markup(const std::string& name) const
{
    const auto it = markups_.find(name);
    if (it == markups_.end())
        throw ValidationError("unknown markup: '" + name + "'");
    return it->second;
}

ShapeParams MorphableModel::zero_params() const
{
    ShapeParams p;
    p.id = Eigen::VectorXd::Zero(num_id());
    p.exp = Eigen::VectorXd::Zero(num_exp());
    return p;
}

ShapeParams MorphableModel::params_from_flat(const Eigen::VectorXd& flat) const
{
    if (flat.size() != num_coeffs())
        throw DimensionError("coefficient vector has length " + std::to_string(flat.size()) + ", expected " +
                             std::to_string(num_coeffs()));
    ShapeParams p;
    p.id = flat.head(num_id());
    p.exp = flat.tail(num_exp());
    return p;
}

namespace {

void check_param_lengths(const MorphableModel& model, const ShapeParams& p)
{
    if (p.id.size() != model.num_id() || p.exp.size() != model.num_exp())
    {
        std::ostringstream msg;
        msg << "coefficient lengths (" << p.id.size() << "," << p.exp.size() << ") do not match model ("
            << model.num_id() << "," << model.num_exp() << ")";
        throw DimensionError(msg.str());
    }
}

} // namespace

DenseShape assemble_shape(const MorphableModel& model, const ShapeParams& p)
{
    check_param_lengths(model, p);
    DenseShape shape = model.mean_shape();
    for (int i = 0; i < model.num_id(); ++i)
        shape.noalias() += p.id[i] * model.id_bases()[i];
    for (int j = 0; j < model.num_exp(); ++j)
        shape.noalias() += p.exp[j] * model.exp_bases()[j];
    return shape;
}

DenseShape assemble_columns(const MorphableModel& model, const ShapeParams& p, std::span<const int> indices)
{
    check_param_lengths(model, p);
    DenseShape out(3, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c)
    {
        const int k = indices[c];
        Eigen::Vector3d v = model.mean_shape().col(k);
        for (int i = 0; i < model.num_id(); ++i)
            v += p.id[i] * model.id_bases()[i].col(k);
        for (int j = 0; j < model.num_exp(); ++j)
            v += p.exp[j] * model.exp_bases()[j].col(k);
        out.col(static_cast<Eigen::Index>(c)) = v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic model generator
// ---------------------------------------------------------------------------

namespace {

struct IcoMesh
{
    std::vector<Eigen::Vector3d> vertices; // unit sphere
    std::vector<std::array<int, 3>> triangles;
};

IcoMesh icosahedron()
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    IcoMesh mesh;
    const double raw[12][3] = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (const auto& v : raw)
        mesh.vertices.push_back(Eigen::Vector3d(v[0], v[1], v[2]).normalized());
    mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
                      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
                      {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    return mesh;
}

IcoMesh subdivide(const IcoMesh& mesh)
{
    IcoMesh out;
    out.vertices = mesh.vertices;
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end())
            return it->second;
        const int idx = static_cast<int>(out.vertices.size());
        out.vertices.push_back(((mesh.vertices[a] + mesh.vertices[b]) * 0.5).normalized());
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto& t : mesh.triangles)
    {
        const int a = mid(t[0], t[1]);
        const int b = mid(t[1], t[2]);
        const int c = mid(t[2], t[0]);
        out.triangles.push_back({t[0], a, c});
        out.triangles.push_back({t[1], b, a});
        out.triangles.push_back({t[2], c, b});
        out.triangles.push_back({a, b, c});
    }
    return out;
}

/// pts68/pts21 markups pick the L front-most (largest z) mean-shape vertices,
/// so at a frontal pose every markup point faces the camera.
std::vector<int> frontmost_indices(const DenseShape& mean, int count)
{
    std::vector<int> order(mean.cols());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (mean(2, a) != mean(2, b))
            return mean(2, a) > mean(2, b);
        return a < b;
    });
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

} // namespace

std::vector<int> synth_model_supported_q()
{
    std::vector<int> qs;
    IcoMesh mesh = icosahedron();
    for (int level = 0; level <= 5; ++level)
    {
        qs.push_back(static_cast<int>(mesh.vertices.size()));
        mesh = subdivide(mesh);
    }
    return qs;
}

MorphableModel synth_model(std::uint64_t seed, int q, int n_id, int n_exp)
{
    if (q < 12)
        throw ParameterError("synthetic model requires Q >= 12, got " + std::to_string(q));
    if (n_id < 0 || n_exp < 0)
        throw ParameterError("basis counts must be nonnegative");

    IcoMesh mesh = icosahedron();
    while (static_cast<int>(mesh.vertices.size()) < q)
        mesh = subdivide(mesh);
    if (static_cast<int>(mesh.vertices.size()) != q)
    {
        std::ostringstream msg;
        msg << "Q=" << q << " is not an icosphere vertex count; supported:";
        for (int v : synth_model_supported_q())
            msg << " " << v;
        throw ParameterError(msg.str());
    }

    // Anisotropic scaling to rough face proportions: narrower than tall,
    // slightly flattened in depth. Winding stays outward (positive scales).
    const Eigen::Vector3d proportions(0.82, 1.06, 0.74);
    DenseShape mean(3, q);
    for (int k = 0; k < q; ++k)
        mean.col(k) = proportions.cwiseProduct(mesh.vertices[k]);

    // Enforce outward winding against the sphere center.
    for (auto& t : mesh.triangles)
    {
        const Eigen::Vector3d a = mesh.vertices[t[0]];
        const Eigen::Vector3d b = mesh.vertices[t[1]];
        const Eigen::Vector3d c = mesh.vertices[t[2]];
        if ((b - a).cross(c - a).dot(a + b + c) < 0)
            std::swap(t[1], t[2]);
    }
    MeshTopology topology = MeshTopology::build(std::move(mesh.triangles), q);

    // Smooth random displacement fields: a few Gaussian bumps on the sphere,
    // then Gram-Schmidt over the flattened 3Q-vectors (two passes for a
    // Gram matrix within 1e-10 of identity).
    const int n_total = n_id + n_exp;
    if (n_total > 3 * q)
        throw ParameterError("cannot orthonormalize more bases than 3*Q");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Eigen::VectorXd> flat_bases;
    flat_bases.reserve(n_total);
    const int n_bumps = 6;
    const double bump_width = 0.6;
    for (int b = 0; b < n_total; ++b)
    {
        Eigen::VectorXd flat = Eigen::VectorXd::Zero(3 * q);
        for (int bump = 0; bump < n_bumps; ++bump)
        {
            Eigen::Vector3d center(gauss(rng), gauss(rng), gauss(rng));
            if (center.norm() < 1e-9)
                center = Eigen::Vector3d::UnitZ();
            center.normalize();
            const Eigen::Vector3d direction(gauss(rng), gauss(rng), gauss(rng));
            for (int k = 0; k < q; ++k)
            {
                const Eigen::Vector3d unit = mesh.vertices[k];
                const double dist2 = (unit - center).squaredNorm();
                const double weight = std::exp(-dist2 / (2.0 * bump_width * bump_width));
                flat[k] += weight * direction.x();
                flat[q + k] += weight * direction.y();
                flat[2 * q + k] += weight * direction.z();
            }
        }
        flat_bases.push_back(std::move(flat));
    }
    // Modified Gram-Schmidt, two passes.
    for (int pass = 0; pass < 2; ++pass)
    {
        for (int i = 0; i < n_total; ++i)
        {
            for (int j = 0; j < i; ++j)
                flat_bases[i] -= flat_bases[j].dot(flat_bases[i]) * flat_bases[j];
            const double norm = flat_bases[i].norm();
            if (norm < 1e-12)
                throw ParameterError("basis orthonormalization degenerated; choose another seed");
            flat_bases[i] /= norm;
        }
    }

    // Flat layout is the [x-block; y-block; z-block] convention.
    auto unflatten = [q](const Eigen::VectorXd& flat) {
        DenseShape basis(3, q);
        basis.row(0) = flat.segment(0, q).transpose();
        basis.row(1) = flat.segment(q, q).transpose();
        basis.row(2) = flat.segment(2 * q, q).transpose();
        return basis;
    };
    std::vector<DenseShape> id_bases, exp_bases;
    for (int i = 0; i < n_id; ++i)
        id_bases.push_back(unflatten(flat_bases[i]));
    for (int j = 0; j < n_exp; ++j)
        exp_bases.push_back(unflatten(flat_bases[n_id + j]));

    std::map<std::string, LandmarkMarkup> markups;
    if (q >= 68)
        markups.emplace("pts68", LandmarkMarkup{"pts68", frontmost_indices(mean, 68)});
    if (q >= 21)
        markups.emplace("pts21", LandmarkMarkup{"pts21", frontmost_indices(mean, 21)});

    return MorphableModel(std::move(mean), std::move(id_bases), std::move(exp_bases), std::move(topology),
                          std::move(markups));
}

} /* namespace facefit */
