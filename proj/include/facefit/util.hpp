/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/util.hpp
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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace facefit {

/// Runs fn(i) for i in [0, n). With degree <= 1 runs serially; otherwise fans
/// out over a bounded worker pool. fn must be safe to call concurrently for
/// distinct indices.
void parallel_for(std::size_t n, int degree, const std::function<void(std::size_t)>& fn);

/// Worker-pool degree: env_var (if set and parses to a positive integer)
/// overrides requested; both are clamped to at least 1.
int effective_parallelism(int requested, const char* env_var = "DEFA_THREADS");

std::string base64_encode(const std::uint8_t* data, std::size_t size);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Writes content to path via a temporary sibling file and an atomic rename.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

} /* namespace facefit */
