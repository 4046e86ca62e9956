// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/skeleton.hpp"

namespace abspose {

std::size_t JointSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw std::invalid_argument("JointSet: unknown joint '" + name + "'");
}

const JointSet& JointSet::default14() {
    static const JointSet js = [] {
        JointSet s;
        s.names = {"neck",       "pelvis",     "l_hip",   "r_hip",   "l_knee",  "r_knee",  "l_ankle",
                   "r_ankle",    "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist"};
        s.root = 1;
        return s;
    }();
    return js;
}

RootSplit<Point3> split_root_relative(const Pose3D& pose, const JointSet& js) {
    if (pose.size() != js.size()) {
        throw std::invalid_argument("split_root_relative: pose size does not match joint set");
    }
    if (!pose.detected) {
        throw RootMissing("split_root_relative: pose is undetected");
    }
    RootSplit<Point3> out;
    out.root = pose.joints[js.root];
    out.relative.reserve(js.size() - 1);
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) continue;
        out.relative.push_back(pose.joints[j] - out.root);
    }
    return out;
}

RootSplit<Point2> split_root_relative(const Pose2D& pose, const JointSet& js) {
    if (pose.size() != js.size()) {
        throw std::invalid_argument("split_root_relative: pose size does not match joint set");
    }
    if (!pose.joints[js.root].visible) {
        throw RootMissing("split_root_relative: root joint is not visible");
    }
    RootSplit<Point2> out;
    const Point2 root = pose.joints[js.root].pt;
    out.root = root;
    out.relative.reserve(js.size() - 1);
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) continue;
        const Point2& p = pose.joints[j].pt;
        out.relative.push_back({p.u - root.u, p.v - root.v, root.frame});
    }
    return out;
}

Pose3D assemble_absolute(const RootSplit<Point3>& split, const JointSet& js) {
    if (split.relative.size() + 1 != js.size()) {
        throw std::invalid_argument("assemble_absolute: relative size does not match joint set");
    }
    Pose3D out;
    out.joints.resize(js.size());
    out.detected = true;
    std::size_t k = 0;
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) {
            out.joints[j] = split.root;
        } else {
            out.joints[j] = split.relative[k++] + split.root;
        }
    }
    return out;
}

std::pair<std::vector<Pose2D>, std::size_t> filter_detected(const std::vector<Pose2D>& poses,
                                                            const JointSet& js) {
    std::vector<Pose2D> kept;
    kept.reserve(poses.size());
    std::size_t discarded = 0;
    for (const Pose2D& p : poses) {
        if (p.size() == js.size() && p.joints[js.root].visible) {
            kept.push_back(p);
        } else {
            ++discarded;
        }
    }
    return {std::move(kept), discarded};
}

}  // namespace abspose
