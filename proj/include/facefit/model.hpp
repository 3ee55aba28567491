/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/model.hpp
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
#pragma once

#include "facefit/common.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace facefit {

/**
 * @brief Triangle list plus derived edge adjacency.
 *
 * Edges are stored with v0 < v1 and sorted lexicographically; face1 is -1 for
 * an open (single-face) edge. Construction rejects degenerate triangles
 * (repeated vertex index), out-of-range indices and edges bordering more than
 * two faces.
 */
struct MeshTopology
{
    struct EdgeRecord
    {
        int v0 = -1;
        int v1 = -1;
        int face0 = -1;
        int face1 = -1; // -1: open edge

        bool open() const { return face1 < 0; }
    };

    std::vector<std::array<int, 3>> triangles;
    std::vector<EdgeRecord> edges;

    static MeshTopology build(std::vector<std::array<int, 3>> triangles, int vertex_count);
};

/// A named list of model vertex indices defining a landmark scheme
/// (e.g. a 68- or 21-point markup). Indices are unique and < Q.
struct LandmarkMarkup
{
    std::string name;
    std::vector<int> indices;

    int size() const { return static_cast<int>(indices.size()); }
};

/// Identity and expression basis coefficients for one face instance.
struct ShapeParams
{
    Eigen::VectorXd id;
    Eigen::VectorXd exp;

    int size() const { return static_cast<int>(id.size() + exp.size()); }

    /// Concatenated [id; exp] vector, the layout used by Jacobians and solvers.
    Eigen::VectorXd flatten() const;
};

/**
 * @brief A linear generative face shape model: mean shape plus weighted
 * identity and expression displacement bases, with mesh topology and the
 * landmark markup registry.
 *
 * Immutable after construction and safe to share across threads.
 */
class MorphableModel
{
public:
    MorphableModel(DenseShape mean_shape, std::vector<DenseShape> id_bases, std::vector<DenseShape> exp_bases,
                   MeshTopology topology, std::map<std::string, LandmarkMarkup> markups);

    int vertex_count() const { return static_cast<int>(mean_shape_.cols()); }
    int num_id() const { return static_cast<int>(id_bases_.size()); }
    int num_exp() const { return static_cast<int>(exp_bases_.size()); }
    int num_coeffs() const { return num_id() + num_exp(); }

    const DenseShape& mean_shape() const { return mean_shape_; }
    const std::vector<DenseShape>& id_bases() const { return id_bases_; }
    const std::vector<DenseShape>& exp_bases() const { return exp_bases_; }
    const MeshTopology& topology() const { return topology_; }
    const std::map<std::string, LandmarkMarkup>& markups() const { return markups_; }

    bool has_markup(const std::string& name) const { return markups_.count(name) > 0; }

    /// Throws ValidationError if the markup does not exist.
    const LandmarkMarkup& markup(const std::string& name) const;

    ShapeParams zero_params() const;

    /// Splits a flat [id; exp] coefficient vector back into ShapeParams.
    ShapeParams params_from_flat(const Eigen::VectorXd& flat) const;

private:
    DenseShape mean_shape_;
    std::vector<DenseShape> id_bases_;
    std::vector<DenseShape> exp_bases_;
    MeshTopology topology_;
    std::map<std::string, LandmarkMarkup> markups_;
};

/**
 * Instantiates the dense shape: mean + sum_i id[i]*id_basis[i]
 * + sum_j exp[j]*exp_basis[j].
 *
 * Throws DimensionError if coefficient lengths do not match the model.
 */
DenseShape assemble_shape(const MorphableModel& model, const ShapeParams& p);

/// Same linear combination restricted to the given vertex columns.
/// Column k of the result is the assembled position of vertex indices[k].
DenseShape assemble_columns(const MorphableModel& model, const ShapeParams& p, std::span<const int> indices);

/**
 * Deterministic synthetic model for tests and studies: the mean shape is an
 * icosphere tessellation scaled anisotropically to rough face proportions,
 * bases are smooth random displacement fields orthonormalized as flattened
 * 3Q-vectors, and "pts68" / "pts21" markups sample the front-most vertices.
 *
 * Q must be an icosphere vertex count (12, 42, 162, 642, 2562, ...); a
 * "pts68" markup is emitted when Q >= 68 and "pts21" when Q >= 21.
 */
MorphableModel synth_model(std::uint64_t seed, int q, int n_id, int n_exp);

/// Vertex counts the synthetic generator can produce, ascending.
std::vector<int> synth_model_supported_q();

} /* namespace facefit */
