// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "abspose/geometry.hpp"
#include "abspose/skeleton.hpp"

namespace abspose {

/// One person in one scene: simulated detector output, depth readouts and
/// the ground truth. Detections are stored in the pixel frame; invisible
/// joints carry (0, 0) with zero confidence.
struct PoseSample {
    int scene_id = 0;
    int person_id = 0;
    CameraIntrinsics cam;
    int image_width = 0;
    int image_height = 0;
    Pose2D detections;              // pixel frame
    std::vector<double> log_depth;  // per joint, log mm
    Pose3D gt;                      // absolute camera space, mm
};

struct Dataset {
    JointSet joints;
    std::vector<PoseSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

}  // namespace abspose
