/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: include/facefit/gradcheck.hpp
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

#include "facefit/energy.hpp"
#include "facefit/model.hpp"

#include <cstdint>

namespace facefit {

/// Worst relative disagreement between analytic and central finite-difference
/// Jacobians, per residual term, over a batch of random configurations.
struct GradCheckReport
{
    double max_rel_pc = 0.0;
    double max_rel_lfc = 0.0;
    double max_rel_cfc = 0.0;
    double max_rel_spc = 0.0;

    double max_rel() const;
    bool pass(double tol) const { return max_rel() <= tol; }
};

/**
 * Compares analytic Jacobians of all four residual terms against central
 * finite differences (step 1e-6 times the coordinate scale) on `trials`
 * random configurations. Correspondence indices are frozen identically on
 * both sides. Relative error per entry is |a-f| / max(1, |a|, |f|).
 *
 * `corrupt_analytic` perturbs one analytic entry per term, a negative
 * control that must make the check fail.
 */
GradCheckReport check_jacobians(const MorphableModel& model, int trials, std::uint64_t seed,
                                bool corrupt_analytic = false);

} /* namespace facefit */
