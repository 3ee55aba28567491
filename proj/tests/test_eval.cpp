/*
 * facefit - 3D morphable face model fitting from 2D observations.
 *
 * File: tests/test_eval.cpp
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
#include "facefit/eval.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace facefit;

TEST_SUITE_BEGIN("eval");

TEST_CASE("nme_lp is zero for a perfect prediction")
{
    std::mt19937_64 rng(1);
    const Point2Set gt = oracles::random_points(68, 0.0, 200.0, rng);
    CHECK(nme_lp(gt, gt, {}, BBox{0, 0, 200, 200}) == 0.0);
}

TEST_CASE("nme_lp of a single (3,4) offset in a 100x100 box is 0.05")
{
    Point2Set gt(2, 1), pred(2, 1);
    gt << 10, 20;
    pred << 13, 24;
    CHECK(nme_lp(pred, gt, {}, BBox{0, 0, 100, 100}) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("nme_lp matches the two-pass oracle on random instances")
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep)
    {
        const Point2Set gt = oracles::random_points(68, 0.0, 250.0, rng);
        const Point2Set pred = oracles::random_points(68, 0.0, 250.0, rng);
        std::vector<bool> mask(68, true);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t k = 1; k < mask.size(); ++k)
            mask[k] = u(rng) > 0.2;
        const BBox box{10.0, 5.0, 180.0, 220.0};
        const double got = nme_lp(pred, gt, mask, box);
        const double expected = oracles::nme_bruteforce(pred, gt, mask, std::sqrt(box.w * box.h));
        CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, expected));
    }
}

TEST_CASE("nme_nf trivial values and oracle equivalence")
{
    Point2Set gt(2, 4), pred(2, 4);
    gt << 0, 10, 20, 30, 0, 0, 0, 0;
    pred = gt;
    CHECK(nme_nf(pred, gt, {}, 50.0) == 0.0);
    pred.row(1).array() += 1.0; // uniform 1 px offset
    CHECK(nme_nf(pred, gt, {}, 50.0) == doctest::Approx(0.02).epsilon(1e-12));

    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep)
    {
        const Point2Set g = oracles::random_points(21, -50.0, 50.0, rng);
        const Point2Set q = oracles::random_points(21, -50.0, 50.0, rng);
        const double got = nme_nf(q, g, {}, 42.0);
        const double expected = oracles::nme_bruteforce(q, g, {}, 42.0);
        CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, expected));
    }
}

TEST_CASE("metrics reject empty masks and bad normalizers")
{
    Point2Set pts(2, 2);
    pts << 0, 1, 0, 1;
    CHECK_THROWS_AS(nme_lp(pts, pts, {false, false}, BBox{0, 0, 1, 1}), ParameterError);
    CHECK_THROWS_AS(nme_lp(pts, pts, {}, BBox{0, 0, 0, 1}), ParameterError);
    CHECK_THROWS_AS(nme_nf(pts, pts, {}, 0.0), ParameterError);
}

TEST_CASE("both metrics are invariant under a consistent rigid motion")
{
    std::mt19937_64 rng(4);
    const Point2Set gt = oracles::random_points(68, 0.0, 100.0, rng);
    Point2Set pred = gt;
    pred.array() += 0.75;
    const BBox box{-10.0, -10.0, 130.0, 120.0};
    const double base_lp = nme_lp(pred, gt, {}, box);
    const double base_nf = nme_nf(pred, gt, {}, interocular_outer_68(gt));

    const double angle = 0.6;
    Eigen::Matrix2d rot;
    rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    const Eigen::Vector2d shift(31.0, -17.0);
    const Point2Set gt_moved = (rot * gt).colwise() + shift;
    const Point2Set pred_moved = (rot * pred).colwise() + shift;

    // Translation only: recomputing the box keeps (w, h).
    const Point2Set gt_shift = gt.colwise() + shift;
    const Point2Set pred_shift = pred.colwise() + shift;
    const BBox box_shift{box.x + shift.x(), box.y + shift.y(), box.w, box.h};
    CHECK(std::abs(nme_lp(pred_shift, gt_shift, {}, box_shift) - base_lp) < 1e-9);

    // Rigid motion with the normalizers transported along: box dimensions
    // ride with the points, the interocular is recomputed.
    CHECK(std::abs(nme_lp(pred_moved, gt_moved, {}, box) - base_lp) < 1e-9);
    CHECK(std::abs(nme_nf(pred_moved, gt_moved, {}, interocular_outer_68(gt_moved)) - base_nf) < 1e-9);
}

TEST_CASE("nme_lp scales inversely with the box side")
{
    std::mt19937_64 rng(5);
    const Point2Set gt = oracles::random_points(30, 0.0, 100.0, rng);
    const Point2Set pred = oracles::random_points(30, 0.0, 100.0, rng);
    const BBox box{0, 0, 120, 90};
    const BBox doubled{0, 0, 240, 90}; // doubled area
    const double a = nme_lp(pred, gt, {}, box);
    const double b = nme_lp(pred, gt, {}, doubled);
    CHECK(std::abs(b - a / std::sqrt(2.0)) <= 1e-15 * a);
}

TEST_CASE("ced boundary semantics are inclusive")
{
    const auto curve = ced_curve({0.05}, {0.05});
    REQUIRE(curve.size() == 1);
    CHECK(curve[0].second == 1.0);
    const auto half = ced_curve({1, 2, 3, 4}, {2.5});
    CHECK(half[0].second == 0.5);
}

TEST_CASE("ced matches the counting oracle and is monotone")
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> errors(1000);
    for (double& e : errors)
        e = u(rng);
    std::vector<double> thresholds;
    for (int k = 1; k <= 10; ++k)
        thresholds.push_back(0.1 * k);
    const auto curve = ced_curve(errors, thresholds);
    double prev = 0.0;
    for (std::size_t k = 0; k < curve.size(); ++k)
    {
        CHECK(curve[k].second == oracles::ced_fraction_bruteforce(errors, thresholds[k]));
        CHECK(curve[k].second >= prev);
        prev = curve[k].second;
        // Uniform errors: fraction tracks the threshold.
        CHECK(std::abs(curve[k].second - thresholds[k]) <= 0.05);
    }
}

TEST_CASE("ced validates inputs")
{
    CHECK_THROWS_AS(ced_curve({}, {0.1}), ParameterError);
    CHECK_THROWS_AS(ced_curve({0.1}, {0.2, 0.1}), ParameterError);
}

TEST_SUITE_END();
