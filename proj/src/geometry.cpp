// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/geometry.hpp"

#include <cmath>
#include <string>

namespace abspose {

namespace {
constexpr double kDegenerateDenominator = 1e-12;
}

Point2 project(const CameraIntrinsics& cam, const Point3& p) {
    if (!(p.z > 0.0)) {
        throw std::domain_error("project: point behind camera (z = " + std::to_string(p.z) + ")");
    }
    return {cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy, Frame::Pixel};
}

Point2 normalize_2d(const CameraIntrinsics& cam, const Point2& p) {
    if (p.frame != Frame::Pixel) {
        throw std::invalid_argument("normalize_2d: input already normalized");
    }
    return {(p.u - cam.cx) / cam.fx, (p.v - cam.cy) / cam.fy, Frame::Normalized};
}

Point2 denormalize_2d(const CameraIntrinsics& cam, const Point2& p) {
    if (p.frame != Frame::Normalized) {
        throw std::invalid_argument("denormalize_2d: input is not in the normalized frame");
    }
    return {p.u * cam.fx + cam.cx, p.v * cam.fy + cam.cy, Frame::Pixel};
}

TranslationSolution solve_weak_perspective_translation(const std::vector<Point2>& p2d,
                                                       const std::vector<Point3>& p3d_rel,
                                                       double f) {
    const std::size_t n = p2d.size();
    if (n != p3d_rel.size()) {
        throw std::invalid_argument("solve_weak_perspective_translation: list length mismatch");
    }
    if (n < 2) {
        throw std::invalid_argument("solve_weak_perspective_translation: need at least 2 joints");
    }

    double mu = 0.0, mv = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mu += p2d[i].u;
        mv += p2d[i].v;
        mx += p3d_rel[i].x;
        my += p3d_rel[i].y;
    }
    mu /= static_cast<double>(n);
    mv /= static_cast<double>(n);
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = p3d_rel[i].x - mx;
        const double dy = p3d_rel[i].y - my;
        const double du = p2d[i].u - mu;
        const double dv = p2d[i].v - mv;
        num += dx * dx + dy * dy;
        den += du * dx + dv * dy;
    }
    if (std::abs(den) < kDegenerateDenominator) {
        throw DegenerateConfiguration("weak-perspective scale denominator vanishes");
    }

    TranslationSolution sol;
    sol.alpha = num / den;
    sol.t = {sol.alpha * mu - mx, sol.alpha * mv - my, sol.alpha * f};
    if (!(sol.t.z > 0.0)) {
        throw DegenerateConfiguration("recovered root depth is not positive");
    }
    sol.residual = reprojection_error(p2d, p3d_rel, sol.t, f);
    return sol;
}

double reprojection_error(const std::vector<Point2>& p2d, const std::vector<Point3>& p3d_rel,
                          const Point3& t, double f) {
    const std::size_t n = p2d.size();
    if (n != p3d_rel.size()) {
        throw std::invalid_argument("reprojection_error: list length mismatch");
    }
    if (n == 0) {
        throw std::invalid_argument("reprojection_error: empty input");
    }
    if (!(t.z > 0.0)) {
        throw std::domain_error("reprojection_error: non-positive common depth");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ru = f * (p3d_rel[i].x + t.x) / t.z;
        const double rv = f * (p3d_rel[i].y + t.y) / t.z;
        const double du = p2d[i].u - ru;
        const double dv = p2d[i].v - rv;
        acc += du * du + dv * dv;
    }
    return acc / static_cast<double>(n);
}

}  // namespace abspose
