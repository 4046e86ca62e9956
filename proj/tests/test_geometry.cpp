// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "abspose/geometry.hpp"
#include "abspose/rng.hpp"
#include "support/oracles.hpp"

using namespace abspose;

namespace {

const CameraIntrinsics kCam{1000.0, 1000.0, 320.0, 240.0};

// Weak-perspective generative model: every joint shares the root depth.
std::vector<Point2> weak_project(const std::vector<Point3>& rel, const Point3& t, double f = 1.0) {
    std::vector<Point2> out;
    out.reserve(rel.size());
    for (const Point3& p : rel) {
        out.push_back({f * (p.x + t.x) / t.z, f * (p.y + t.y) / t.z, Frame::Normalized});
    }
    return out;
}

std::vector<Point3> random_relative_pose(Rng& rng, std::size_t n = 14) {
    std::vector<Point3> rel;
    rel.push_back({0.0, 0.0, 0.0});
    for (std::size_t i = 1; i < n; ++i) {
        rel.push_back({rng.uniform(-500.0, 500.0), rng.uniform(-900.0, 900.0),
                       rng.uniform(-300.0, 300.0)});
    }
    return rel;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("projection maps the optical axis to the principal point") {
    const Point2 p = project(kCam, {0.0, 0.0, 2000.0});
    CHECK(p.u == doctest::Approx(320.0));
    CHECK(p.v == doctest::Approx(240.0));
    CHECK(p.frame == Frame::Pixel);
}

TEST_CASE("projection offsets by f at unit slope") {
    const Point2 p = project(kCam, {2000.0, 0.0, 2000.0});
    CHECK(p.u == doctest::Approx(1320.0));
    CHECK(p.v == doctest::Approx(240.0));
}

TEST_CASE("projection agrees with a scalar recomputation") {
    const Point3 p{137.0, -512.0, 4300.0};
    const Point2 q = project(kCam, p);
    // Independent recomputation of the two formulas.
    const double expect_u = 1000.0 * 137.0 / 4300.0 + 320.0;
    const double expect_v = 1000.0 * (-512.0) / 4300.0 + 240.0;
    CHECK(q.u == doctest::Approx(expect_u).epsilon(1e-15));
    CHECK(q.v == doctest::Approx(expect_v).epsilon(1e-15));
}

TEST_CASE("points behind the camera are rejected") {
    CHECK_THROWS_AS(project(kCam, {0.0, 0.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(project(kCam, {10.0, 10.0, -5.0}), std::domain_error);
}

TEST_CASE("normalization fixed points") {
    const Point2 origin = normalize_2d(kCam, {320.0, 240.0, Frame::Pixel});
    CHECK(origin.u == doctest::Approx(0.0));
    CHECK(origin.v == doctest::Approx(0.0));
    CHECK(origin.frame == Frame::Normalized);

    const Point2 unit = normalize_2d(kCam, {1320.0, 240.0, Frame::Pixel});
    CHECK(unit.u == doctest::Approx(1.0));
    CHECK(unit.v == doctest::Approx(0.0));

    const Point2 pp = denormalize_2d(kCam, {0.0, 0.0, Frame::Normalized});
    CHECK(pp.u == doctest::Approx(320.0));
    CHECK(pp.v == doctest::Approx(240.0));
    const Point2 corner = denormalize_2d(kCam, {1.0, 1.0, Frame::Normalized});
    CHECK(corner.u == doctest::Approx(1320.0));
    CHECK(corner.v == doctest::Approx(1240.0));
}

TEST_CASE("normalize/denormalize round trips are exact") {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        const Point2 p{rng.uniform(-2000.0, 2000.0), rng.uniform(-2000.0, 2000.0), Frame::Pixel};
        const Point2 back = denormalize_2d(kCam, normalize_2d(kCam, p));
        CHECK(std::abs(back.u - p.u) < 1e-12);
        CHECK(std::abs(back.v - p.v) < 1e-12);
    }
}

TEST_CASE("frame tags are enforced") {
    CHECK_THROWS_AS(normalize_2d(kCam, {0.0, 0.0, Frame::Normalized}), std::invalid_argument);
    CHECK_THROWS_AS(denormalize_2d(kCam, {0.0, 0.0, Frame::Pixel}), std::invalid_argument);
}

TEST_CASE("normalize of project equals x/z, y/z") {
    Rng rng(42);
    for (int i = 0; i < 100; ++i) {
        const Point3 p{rng.uniform(-3000.0, 3000.0), rng.uniform(-3000.0, 3000.0),
                       rng.uniform(500.0, 9000.0)};
        const Point2 n = normalize_2d(kCam, project(kCam, p));
        CHECK(std::abs(n.u - p.x / p.z) < 1e-12);
        CHECK(std::abs(n.v - p.y / p.z) < 1e-12);
    }
}

TEST_CASE("exact recovery on the tetrahedral example") {
    const std::vector<Point3> rel = {
        {0.0, 0.0, 0.0}, {100.0, 0.0, 0.0}, {0.0, 100.0, 0.0}, {0.0, 0.0, 100.0}};
    const Point3 t{10.0, 20.0, 5000.0};
    const TranslationSolution sol = solve_weak_perspective_translation(weak_project(rel, t), rel);
    CHECK(sol.t.x == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(sol.t.y == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(sol.t.z == doctest::Approx(5000.0).epsilon(1e-12));
    CHECK(sol.alpha == doctest::Approx(5000.0).epsilon(1e-12));
    CHECK(sol.residual < 1e-20);
}

TEST_CASE("alpha equals the recovered depth in the normalized frame") {
    Rng rng(43);
    for (int i = 0; i < 20; ++i) {
        const auto rel = random_relative_pose(rng);
        const Point3 t{rng.uniform(-800.0, 800.0), rng.uniform(-800.0, 800.0),
                       rng.uniform(2000.0, 8000.0)};
        const TranslationSolution sol =
            solve_weak_perspective_translation(weak_project(rel, t), rel);
        CHECK(sol.alpha == doctest::Approx(sol.t.z).epsilon(1e-12));
    }
}

TEST_CASE("exact recovery under the weak generative model") {
    Rng rng(44);
    for (int i = 0; i < 100; ++i) {
        const auto rel = random_relative_pose(rng);
        const Point3 t{rng.uniform(-800.0, 800.0), rng.uniform(-800.0, 800.0),
                       rng.uniform(2000.0, 8000.0)};
        const TranslationSolution sol =
            solve_weak_perspective_translation(weak_project(rel, t), rel);
        CHECK(std::abs(sol.t.x - t.x) <= 1e-9 * std::abs(t.z));
        CHECK(std::abs(sol.t.y - t.y) <= 1e-9 * std::abs(t.z));
        CHECK(std::abs(sol.t.z - t.z) <= 1e-9 * std::abs(t.z));
    }
}

TEST_CASE("noisy solve matches the independent minimizer") {
    Rng rng(45);
    for (int i = 0; i < 10; ++i) {
        const auto rel = random_relative_pose(rng);
        const Point3 t{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0),
                       rng.uniform(2500.0, 7000.0)};
        // Full perspective projection plus detection noise.
        std::vector<Point2> p2d;
        for (const Point3& p : rel) {
            const Point3 abs = p + t;
            p2d.push_back({abs.x / abs.z + 0.002 * rng.normal(),
                           abs.y / abs.z + 0.002 * rng.normal(), Frame::Normalized});
        }
        const TranslationSolution sol = solve_weak_perspective_translation(p2d, rel);
        const auto oracle = test::grid_descent_minimize(p2d, rel);
        CHECK(sol.residual <= oracle[3] * (1.0 + 1e-4) + 1e-15);
    }
}

TEST_CASE("no grid candidate around the solution does better") {
    Rng rng(46);
    for (int i = 0; i < 5; ++i) {
        const auto rel = random_relative_pose(rng);
        const Point3 t{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0),
                       rng.uniform(2500.0, 7000.0)};
        std::vector<Point2> p2d;
        for (const Point3& p : rel) {
            const Point3 abs = p + t;
            p2d.push_back({abs.x / abs.z + 0.001 * rng.normal(),
                           abs.y / abs.z + 0.001 * rng.normal(), Frame::Normalized});
        }
        const TranslationSolution sol = solve_weak_perspective_translation(p2d, rel);
        for (int ix = -10; ix <= 10; ++ix) {
            for (int iy = -10; iy <= 10; ++iy) {
                for (int iz = -10; iz <= 10; ++iz) {
                    const double tx = sol.t.x * (1.0 + 0.01 * ix);
                    const double ty = sol.t.y * (1.0 + 0.01 * iy);
                    const double tz = sol.t.z * (1.0 + 0.01 * iz);
                    CHECK(test::weak_objective(p2d, rel, tx, ty, tz) >= sol.residual - 1e-12);
                }
            }
        }
    }
}

TEST_CASE("scale covariance of the closed form") {
    Rng rng(47);
    for (int i = 0; i < 20; ++i) {
        const auto rel = random_relative_pose(rng);
        const Point3 t{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0),
                       rng.uniform(2500.0, 7000.0)};
        std::vector<Point2> p2d;
        for (const Point3& p : rel) {
            const Point3 abs = p + t;
            p2d.push_back({abs.x / abs.z, abs.y / abs.z, Frame::Normalized});
        }
        const double s = rng.uniform(0.3, 3.0);
        std::vector<Point3> scaled;
        for (const Point3& p : rel) scaled.push_back(s * p);
        const TranslationSolution base = solve_weak_perspective_translation(p2d, rel);
        const TranslationSolution scl = solve_weak_perspective_translation(p2d, scaled);
        CHECK(scl.alpha == doctest::Approx(s * base.alpha).epsilon(1e-9));
        CHECK(scl.t.x == doctest::Approx(s * base.t.x).epsilon(1e-9));
        CHECK(scl.t.y == doctest::Approx(s * base.t.y).epsilon(1e-9));
        CHECK(scl.t.z == doctest::Approx(s * base.t.z).epsilon(1e-9));
    }
}

TEST_CASE("degenerate configurations are reported") {
    // All lateral coordinates identical: zero denominator.
    const std::vector<Point3> flat = {
        {50.0, 60.0, 0.0}, {50.0, 60.0, 100.0}, {50.0, 60.0, 200.0}, {50.0, 60.0, 300.0}};
    std::vector<Point2> p2d = {{0.01, 0.012, Frame::Normalized},
                               {0.013, 0.009, Frame::Normalized},
                               {0.008, 0.011, Frame::Normalized},
                               {0.012, 0.013, Frame::Normalized}};
    CHECK_THROWS_AS(solve_weak_perspective_translation(p2d, flat), DegenerateConfiguration);
}

TEST_CASE("too few joints is an input error") {
    CHECK_THROWS_AS(
        solve_weak_perspective_translation({{0.0, 0.0, Frame::Normalized}}, {{0.0, 0.0, 0.0}}),
        std::invalid_argument);
    CHECK_THROWS_AS(solve_weak_perspective_translation({}, {}), std::invalid_argument);
}

TEST_CASE("reprojection error basics") {
    const std::vector<Point3> rel = {
        {0.0, 0.0, 0.0}, {100.0, 0.0, 0.0}, {0.0, 100.0, 0.0}, {0.0, 0.0, 100.0}};
    const Point3 t{10.0, 20.0, 5000.0};
    const auto p2d = weak_project(rel, t);
    CHECK(reprojection_error(p2d, rel, t) < 1e-22);

    // Depth perturbation: compare to a scalar re-derivation.
    const Point3 off{10.0, 20.0, 6000.0};
    const double got = reprojection_error(p2d, rel, off);
    double expect = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
        const double du = p2d[i].u - (rel[i].x + off.x) / off.z;
        const double dv = p2d[i].v - (rel[i].y + off.y) / off.z;
        expect += du * du + dv * dv;
    }
    expect /= static_cast<double>(rel.size());
    CHECK(got == doctest::Approx(expect).epsilon(1e-14));
    CHECK(got > 0.0);

    // Single joint at the origin projects onto its detection exactly.
    CHECK(reprojection_error({{0.0, 0.0, Frame::Normalized}}, {{0.0, 0.0, 0.0}},
                             {0.0, 0.0, 1000.0}) == doctest::Approx(0.0));

    CHECK_THROWS_AS(reprojection_error(p2d, rel, {0.0, 0.0, -1.0}), std::domain_error);
}

}  // TEST_SUITE
