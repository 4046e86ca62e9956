// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abspose/dataset.hpp"
#include "abspose/pipeline.hpp"

namespace abspose {

/// Fixed-width bins from 0 up to `cap`, plus one overflow bin; `counts`
/// has cap/bin_width + 1 entries with the overflow last.
struct Histogram {
    double bin_width = 50.0;
    double cap = 1000.0;
    std::vector<std::size_t> counts;

    std::size_t total() const;
    /// Fraction of entries whose value is >= the given threshold; the
    /// threshold must be a bin edge.
    double tail_fraction(double threshold) const;
};

Histogram error_histogram(const std::vector<double>& values, double bin_width, double cap = 1000.0);

/// Per-pose mean joint distance in absolute coordinates (mm).
double pose_a_mpjpe(const Pose3D& pred, const Pose3D& gt);
/// Per-pose mean joint distance after centering both poses at the root.
double pose_r_mpjpe(const Pose3D& pred, const Pose3D& gt, const JointSet& js);

/// Means over matched pose pairs. Lists must pair up index by index; the
/// synthetic person_id correspondence does the matching upstream.
double a_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);
double r_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt, const JointSet& js);

double detection_rate(std::size_t detected, std::size_t total_gt);

struct SceneStats {
    int scene_id = 0;
    std::size_t n_poses = 0;
    double a_mpjpe = 0.0;
    double r_mpjpe = 0.0;
};

struct EvalReport {
    double a_mpjpe = 0.0;
    double r_mpjpe = 0.0;
    double detection_rate = 0.0;
    std::size_t n_poses = 0;     // poses entering the metrics
    std::size_t n_total_gt = 0;  // detection-rate denominator
    std::size_t n_unbounded = 0; // baseline poses with divergent translation
    Histogram histogram;
    std::vector<SceneStats> per_scene;
};

struct EvalOptions {
    double hist_bin_width_mm = 50.0;
    double hist_cap_mm = 1000.0;
};

/// One per-sample prediction. Undetected poses (invisible root) carry no
/// estimate; Unbounded marks a degenerate baseline translation.
struct Prediction {
    enum class Status { Undetected, Unbounded, Ok };
    Status status = Status::Undetected;
    Pose3D pose;
};

std::vector<Prediction> predict_direct(PoseNet& net, const Dataset& data);
std::vector<Prediction> predict_baseline(PoseNet& rel_net, const Dataset& data);

struct PerPoseError {
    int scene_id = 0;
    int person_id = 0;
    double a_err = 0.0;
    double r_err = 0.0;
    double root_err = 0.0;
};

struct EvalDetail {
    EvalReport report;
    std::vector<PerPoseError> poses;  // Ok-status poses only
};

EvalDetail evaluate_predictions(const std::vector<Prediction>& preds, const Dataset& data,
                                const EvalOptions& opts);

// ------------------------------------------------------------- ablation

struct AblationRow {
    std::string label;
    double a_mpjpe_mm = 0.0;
    nn::LossKind loss = nn::LossKind::L2;
    bool depth_features = false;
    bool log_hip_z = false;
    bool augmentation = false;
    bool stage2 = false;
    std::string error;  // non-empty when the row failed to train
};

struct AblationOptions {
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    EvalOptions eval;
    Stage2Options stage2;
    int max_parallel = 2;
};

/// Trains and evaluates the component ladder
/// L2 -> L1 -> +depth -> +log hip z -> +augmentation -> +stage-2,
/// reporting the median A-MPJPE over the seed set per row. Rows that fail
/// record the error and the remaining rows still run.
std::vector<AblationRow> run_ablation(const Dataset& train, const Dataset& test,
                                      const PoseNetConfig& base, const AblationOptions& opts);

// ----------------------------------------------- corruption comparison

struct CorruptionSuiteResult {
    double direct_median_root_err = 0.0;
    double baseline_median_root_err = 0.0;
    double direct_tail_frac = 0.0;    // poses with A-MPJPE above the threshold
    double baseline_tail_frac = 0.0;
    std::size_t n_poses = 0;
    std::size_t baseline_unbounded = 0;
};

/// Feeds both methods the same systematically distorted relative poses
/// (mirrors, rescales, collapsed or reflected limbs, rotations): the
/// baseline recovers its root through the translation solve while the
/// direct network keeps its own root estimate. A degenerate baseline solve
/// counts as an unbounded error.
CorruptionSuiteResult run_corruption_suite(PoseNet& direct_net, PoseNet& rel_net,
                                           const Dataset& test, double tail_threshold_mm = 500.0);

double median(std::vector<double> values);

// ------------------------------------------------------------ emission

void write_eval_report_csv(const EvalReport& report, const std::string& path);
void write_eval_report_json(const EvalReport& report, const std::string& path);
void write_histogram_csv(const Histogram& hist, const std::string& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace abspose
