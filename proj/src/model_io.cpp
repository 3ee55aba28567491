/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: src/model_io.cpp
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
#include "facefit/model_io.hpp"

#include "facefit/util.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "base64 float blocks assume a little-endian host");

namespace facefit {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& message)
{
    throw ValidationError(field + ": " + message);
}

std::int64_t require_int(const json& j, const std::string& field)
{
    if (!j.contains(field) || !j.at(field).is_number_integer())
        fail(field, "missing or not an integer");
    return j.at(field).get<std::int64_t>();
}

/// A float block is either a JSON array of numbers or a base64 string of
/// little-endian float64 values; either way it must hold `expected` values.
Eigen::VectorXd read_float_block(const json& j, const std::string& field, Eigen::Index expected)
{
    Eigen::VectorXd out(expected);
    if (j.is_string())
    {
        std::vector<std::uint8_t> bytes;
        try
        {
            bytes = base64_decode(j.get<std::string>());
        } catch (const ValidationError& e)
        {
            fail(field, e.what());
        }
        if (bytes.size() != static_cast<std::size_t>(expected) * sizeof(double))
            fail(field, "base64 block holds " + std::to_string(bytes.size() / sizeof(double)) +
                            " float64 values, expected " + std::to_string(expected));
        std::memcpy(out.data(), bytes.data(), bytes.size());
    } else if (j.is_array())
    {
        if (static_cast<Eigen::Index>(j.size()) != expected)
            fail(field, "holds " + std::to_string(j.size()) + " values, expected " +
                            std::to_string(expected));
        for (Eigen::Index k = 0; k < expected; ++k)
        {
            const auto& v = j[static_cast<std::size_t>(k)];
            if (!v.is_number())
                fail(field + "[" + std::to_string(k) + "]", "not a number");
            out[k] = v.get<double>();
        }
    } else
    {
        fail(field, "must be an array of numbers or a base64 string");
    }
    if (!out.allFinite())
        fail(field, "contains non-finite values");
    return out;
}

/// Flat blocks use the [x-block; y-block; z-block] layout.
DenseShape unflatten(const Eigen::VectorXd& flat, Eigen::Index q)
{
    DenseShape shape(3, q);
    shape.row(0) = flat.segment(0, q).transpose();
    shape.row(1) = flat.segment(q, q).transpose();
    shape.row(2) = flat.segment(2 * q, q).transpose();
    return shape;
}

Eigen::VectorXd flatten_shape(const DenseShape& shape)
{
    const Eigen::Index q = shape.cols();
    Eigen::VectorXd flat(3 * q);
    flat.segment(0, q) = shape.row(0).transpose();
    flat.segment(q, q) = shape.row(1).transpose();
    flat.segment(2 * q, q) = shape.row(2).transpose();
    return flat;
}

nlohmann::ordered_json write_float_block(const DenseShape& shape, bool base64)
{
    const Eigen::VectorXd flat = flatten_shape(shape);
    if (base64)
    {
        return base64_encode(reinterpret_cast<const std::uint8_t*>(flat.data()),
                             static_cast<std::size_t>(flat.size()) * sizeof(double));
    }
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < flat.size(); ++k)
        arr.push_back(flat[k]);
    return arr;
}

} // namespace

MorphableModel load_model(const std::string& path)
{
    json j;
    try
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw Error("cannot open model file: " + path);
        j = json::parse(is);
    } catch (const json::parse_error& e)
    {
        throw ValidationError(std::string("model JSON parse error: ") + e.what());
    }
    if (!j.is_object())
        throw ValidationError("model file: top-level value must be an object");

    const std::int64_t q = require_int(j, "Q");
    const std::int64_t n_id = require_int(j, "n_id");
    const std::int64_t n_exp = require_int(j, "n_exp");
    if (q < 3)
        fail("Q", "must be >= 3");
    if (n_id < 0 || n_exp < 0)
        fail("n_id/n_exp", "must be nonnegative");

    if (!j.contains("mean"))
        fail("mean", "missing");
    const DenseShape mean = unflatten(read_float_block(j.at("mean"), "mean", 3 * q), q);

    auto read_bases = [&](const char* field, std::int64_t count) {
        std::vector<DenseShape> bases;
        if (!j.contains(field) || !j.at(field).is_array())
            fail(field, "missing or not an array");
        const json& arr = j.at(field);
        if (static_cast<std::int64_t>(arr.size()) != count)
            fail(field, "holds " + std::to_string(arr.size()) + " bases, expected " + std::to_string(count));
        bases.reserve(static_cast<std::size_t>(count));
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            const std::string name = std::string(field) + "[" + std::to_string(i) + "]";
            bases.push_back(unflatten(read_float_block(arr[i], name, 3 * q), q));
        }
        return bases;
    };
    std::vector<DenseShape> id_bases = read_bases("id_bases", n_id);
    std::vector<DenseShape> exp_bases = read_bases("exp_bases", n_exp);

    if (!j.contains("triangles") || !j.at("triangles").is_array())
        fail("triangles", "missing or not an array");
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(j.at("triangles").size());
    for (std::size_t f = 0; f < j.at("triangles").size(); ++f)
    {
        const json& tri = j.at("triangles")[f];
        const std::string name = "triangles[" + std::to_string(f) + "]";
        if (!tri.is_array() || tri.size() != 3)
            fail(name, "must be an array of 3 vertex indices");
        std::array<int, 3> t{};
        for (int k = 0; k < 3; ++k)
        {
            if (!tri[static_cast<std::size_t>(k)].is_number_integer())
                fail(name, "vertex indices must be integers");
            t[static_cast<std::size_t>(k)] = tri[static_cast<std::size_t>(k)].get<int>();
        }
        triangles.push_back(t);
    }

    std::map<std::string, LandmarkMarkup> markups;
    if (j.contains("markups"))
    {
        if (!j.at("markups").is_object())
            fail("markups", "must be an object");
        for (const auto& [name, indices] : j.at("markups").items())
        {
            const std::string field = "markups." + name;
            if (!indices.is_array())
                fail(field, "must be an array of vertex indices");
            LandmarkMarkup markup;
            markup.name = name;
            for (std::size_t k = 0; k < indices.size(); ++k)
            {
                if (!indices[k].is_number_integer())
                    fail(field + "[" + std::to_string(k) + "]", "not an integer");
                markup.indices.push_back(indices[k].get<int>());
            }
            markups.emplace(name, std::move(markup));
        }
    }

    // MeshTopology::build and the MorphableModel constructor run the
    // remaining invariant checks (index ranges, markup uniqueness, ...).
    MeshTopology topology = MeshTopology::build(std::move(triangles), static_cast<int>(q));
    return MorphableModel(mean, std::move(id_bases), std::move(exp_bases), std::move(topology),
                          std::move(markups));
}

void save_model(const MorphableModel& model, const std::string& path, bool base64)
{
    nlohmann::ordered_json j;
    j["Q"] = model.vertex_count();
    j["n_id"] = model.num_id();
    j["n_exp"] = model.num_exp();
    j["mean"] = write_float_block(model.mean_shape(), base64);
    nlohmann::ordered_json id_arr = nlohmann::ordered_json::array();
    for (const auto& basis : model.id_bases())
        id_arr.push_back(write_float_block(basis, base64));
    j["id_bases"] = std::move(id_arr);
    nlohmann::ordered_json exp_arr = nlohmann::ordered_json::array();
    for (const auto& basis : model.exp_bases())
        exp_arr.push_back(write_float_block(basis, base64));
    j["exp_bases"] = std::move(exp_arr);
    nlohmann::ordered_json tri_arr = nlohmann::ordered_json::array();
    for (const auto& t : model.topology().triangles)
        tri_arr.push_back({t[0], t[1], t[2]});
    j["triangles"] = std::move(tri_arr);
    nlohmann::ordered_json markups = nlohmann::ordered_json::object();
    for (const auto& [name, markup] : model.markups())
        markups[name] = markup.indices;
    j["markups"] = std::move(markups);

    atomic_write_file(path, j.dump());
}

} /* namespace facefit */
