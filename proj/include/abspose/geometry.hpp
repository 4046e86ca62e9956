// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <vector>

namespace abspose {

/// Pinhole intrinsics. Distances are pixels, the camera frame is
/// right-handed with x right, y down and z pointing away from the camera.
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    /// Single scalar focal used where one f is required.
    double f() const { return 0.5 * (fx + fy); }

    bool valid() const { return fx > 0.0 && fy > 0.0; }
};

enum class Frame { Pixel, Normalized };

/// 2D point carrying the frame it lives in. Pixel coordinates are image
/// pixels, normalized coordinates are pixels multiplied by K^-1.
struct Point2 {
    double u = 0.0;
    double v = 0.0;
    Frame frame = Frame::Pixel;
};

/// Camera-centered 3D point in millimeters.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point3 operator*(double s, const Point3& p) { return {s * p.x, s * p.y, s * p.z}; }

/// Result of the weak-perspective translation fit.
struct TranslationSolution {
    Point3 t;               // translation in mm; t.z is the recovered root depth
    double alpha = 0.0;     // weak-perspective scale; equals t.z when f = 1
    double residual = 0.0;  // mean squared reprojection error at t (normalized units^2)
};

/// Thrown when the translation cannot be recovered from the inputs
/// (vanishing scale denominator or a non-positive recovered depth).
struct DegenerateConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Perspective projection into the pixel frame. Requires p.z > 0.
Point2 project(const CameraIntrinsics& cam, const Point3& p);

/// Pixel -> normalized: u' = (u - cx)/fx, v' = (v - cy)/fy.
Point2 normalize_2d(const CameraIntrinsics& cam, const Point2& p);

/// Exact inverse of normalize_2d.
Point2 denormalize_2d(const CameraIntrinsics& cam, const Point2& p);

/// Closed-form weak-perspective translation fit. Both lists must pair up,
/// p2d in the normalized frame and p3d_rel root-relative in mm. The common
/// depth of the weak model is the recovered t.z. Throws
/// DegenerateConfiguration when the scale denominator vanishes or the
/// recovered depth is not positive, std::invalid_argument on bad input.
TranslationSolution solve_weak_perspective_translation(const std::vector<Point2>& p2d,
                                                       const std::vector<Point3>& p3d_rel,
                                                       double f = 1.0);

/// Mean squared weak-perspective reprojection error of p3d_rel + t against
/// the normalized detections. The x,y of every joint are divided by the
/// common root depth t.z, which must be positive.
double reprojection_error(const std::vector<Point2>& p2d, const std::vector<Point3>& p3d_rel,
                          const Point3& t, double f = 1.0);

}  // namespace abspose
