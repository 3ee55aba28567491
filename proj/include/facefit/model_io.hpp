/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/model_io.hpp
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

#include "facefit/model.hpp"

#include <string>

namespace facefit {

/**
 * Loads a model from its JSON file format:
 *
 *   {"Q":int, "n_id":int, "n_exp":int,
 *    "mean":[3Q floats, x-block then y then z],
 *    "id_bases":[[3Q floats],...], "exp_bases":[[3Q floats],...],
 *    "triangles":[[i,j,k],...], "markups":{"name":[indices,...]}}
 *
 * Any float block ("mean" or a basis entry) may instead be a base64 string
 * of little-endian float64 values. All invariants are checked at load;
 * violations raise ValidationError/DimensionError naming the field path.
 */
MorphableModel load_model(const std::string& path);

/// Writes the same format. With base64=true the float blocks are encoded as
/// base64 little-endian float64, which is both compact and bit-exact.
void save_model(const MorphableModel& model, const std::string& path, bool base64 = false);

} /* namespace facefit */
