// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abspose/geometry.hpp"

namespace abspose {

/// Thrown when an operation requires the root joint and the pose does not
/// have it (undetected / invisible root). Such poses must be reported as
/// undetected downstream.
struct RootMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The configured joint set. Joint order is fixed by the set and used for
/// every per-joint vector in the toolkit; exactly one joint is the root.
struct JointSet {
    std::vector<std::string> names;
    std::size_t root = 0;

    std::size_t size() const { return names.size(); }
    std::size_t index_of(const std::string& name) const;

    /// 14-joint default: neck, pelvis and left/right hip, knee, ankle,
    /// shoulder, elbow, wrist. Root is the pelvis.
    static const JointSet& default14();
};

struct Joint2D {
    Point2 pt;
    double confidence = 0.0;  // in [0,1], meaningful only when visible
    bool visible = false;
};

/// Per-joint 2D detections. All visible coordinates share one frame.
struct Pose2D {
    std::vector<Joint2D> joints;

    std::size_t size() const { return joints.size(); }
};

/// Camera-space 3D pose in mm. `detected` marks whether the pose carries a
/// usable estimate at all.
struct Pose3D {
    std::vector<Point3> joints;
    bool detected = true;

    std::size_t size() const { return joints.size(); }
};

/// Root coordinates plus the root-relative remainder. The root's relative
/// entry is omitted (it is identically zero); `relative` keeps joint order
/// with the root skipped.
template <typename PointT>
struct RootSplit {
    PointT root{};
    std::vector<PointT> relative;
};

RootSplit<Point3> split_root_relative(const Pose3D& pose, const JointSet& js);
RootSplit<Point2> split_root_relative(const Pose2D& pose, const JointSet& js);

/// Inverse of split_root_relative for 3D poses.
Pose3D assemble_absolute(const RootSplit<Point3>& split, const JointSet& js);

/// Drops poses whose root is invisible and reports how many were dropped
/// (the detection-rate denominator bookkeeping).
std::pair<std::vector<Pose2D>, std::size_t> filter_detected(const std::vector<Pose2D>& poses,
                                                            const JointSet& js);

}  // namespace abspose
