// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abspose/dataset.hpp"
#include "abspose/neural.hpp"
#include "abspose/synthdata.hpp"

namespace abspose {

struct PoseNetConfig {
    int num_blocks = 2;
    int hidden_width = 256;  // desk-scale default; the reference setting is 1024
    double dropout = 0.5;
    bool use_depth_features = true;
    bool log_hip_z = true;
    nn::LossKind loss = nn::LossKind::L1;
    long epochs = 100;
    long batch_size = 256;
    double base_lr = 1e-3;
    double lr_decay = 0.96;
    long lr_decay_period = 4;
    bool augmentation = false;
    CropZoomParams augment_params;
    bool relative_only = false;  // no absolute head; the baseline's relative network

    void validate() const;
};

/// Index map of the network input. Layout, in joint-set order:
/// [relative normalized 2D (2 per non-root joint) | hip normalized 2D (2)
///  | log-depth readout (1 per joint, present iff use_depth)].
struct FeatureLayout {
    std::size_t relative_offset = 0;
    std::size_t hip_offset = 0;
    std::size_t depth_offset = 0;  // == size when depth features are off
    std::size_t size = 0;

    static FeatureLayout create(std::size_t num_joints, bool use_depth);
};

/// Index map of the network output. Layout, in joint-set order:
/// [root-relative 3D (3 per non-root joint) | hip x | hip y | hip depth].
/// Hip depth is ln(z_mm) when log_hip_z, else z_mm.
struct PredictionLayout {
    std::size_t relative_offset = 0;
    std::size_t hip_x = 0;
    std::size_t hip_y = 0;
    std::size_t hip_depth = 0;
    std::size_t size = 0;

    static PredictionLayout create(std::size_t num_joints);
};

using FeatureVector = Eigen::RowVectorXd;

/// Builds the network input from a normalized-frame detection and per-joint
/// log-depth readouts. Invisible non-root joints contribute zeros to the
/// relative block; the root must be visible.
FeatureVector build_features(const Pose2D& det_norm, const std::vector<double>& log_depth,
                             const JointSet& js, bool use_depth);

/// Encodes a ground-truth pose into the prediction layout. Requires root
/// z > 0 (the hip depth entry is ln(z_mm) when log_hip_z).
Eigen::RowVectorXd encode_target(const Pose3D& gt, const JointSet& js, bool log_hip_z);

/// Inverse of encode_target; the decoded hip z is exp(entry) when
/// log_hip_z, so it is positive for any finite prediction.
Pose3D decode_prediction(const Eigen::RowVectorXd& pred, const JointSet& js, bool log_hip_z);

/// Relative-only target (first 3(J-1) entries of encode_target).
Eigen::RowVectorXd encode_relative_target(const Pose3D& gt, const JointSet& js);

/// Trainable per-joint affine on the log-depth input block; initialized to
/// the identity so an untrained recalibration leaves features unchanged.
/// Stands in for adapting the upstream depth estimator during stage 2.
class DepthRecalibration {
  public:
    DepthRecalibration(std::size_t num_joints, std::size_t depth_offset);

    nn::RealMatrix forward(const nn::RealMatrix& x);
    nn::RealMatrix backward(const nn::RealMatrix& dy);

    std::vector<nn::Parameter*> parameters() { return {&scale_, &offset_}; }
    const nn::Parameter& scale() const { return scale_; }
    const nn::Parameter& offset() const { return offset_; }

  private:
    std::size_t depth_offset_;
    nn::Parameter scale_;   // (1, J)
    nn::Parameter offset_;  // (1, J)
    nn::RealMatrix x_;
};

/// The 3D PoseNet: dense projection to the hidden width with a
/// batchnorm/relu/dropout stem, a stack of residual blocks, dense output
/// head. The stem keeps the residual stream scaled sanely regardless of
/// the raw feature magnitudes (log-depths sit near 8 while normalized
/// coordinates sit near 0). With depth features enabled the input first
/// passes through the depth recalibration.
class PoseNet {
  public:
    PoseNet(const PoseNetConfig& cfg, const JointSet& js, std::uint64_t seed);

    nn::RealMatrix forward(const nn::RealMatrix& features, nn::Mode mode);
    void backward(const nn::RealMatrix& dloss);
    void zero_grad();

    /// Stage-1 parameters (recalibration excluded).
    std::vector<nn::Parameter*> parameters();
    /// Stage-2 parameters: network plus recalibration.
    std::vector<nn::Parameter*> parameters_with_recalibration();

    std::vector<std::pair<std::string, nn::RealMatrix*>> state_entries();
    std::vector<std::pair<std::string, const nn::RealMatrix*>> state_entries() const;

    /// Restarts the dropout stream; training stages call this so their
    /// randomness depends only on their own seed.
    void reseed_dropout(std::uint64_t seed);

    /// Bias of the output head; training warm-starts it at the mean target
    /// so the heads refine instead of traveling across the mm scale.
    nn::Parameter& output_bias();

    const PoseNetConfig& config() const { return cfg_; }
    const JointSet& joints() const { return js_; }
    const FeatureLayout& feature_layout() const { return in_layout_; }
    int output_dim() const { return output_dim_; }
    DepthRecalibration& recalibration();

  private:
    PoseNetConfig cfg_;
    JointSet js_;
    FeatureLayout in_layout_;
    int output_dim_;
    std::unique_ptr<Rng> dropout_rng_;
    std::unique_ptr<DepthRecalibration> recalib_;
    nn::Dense input_proj_;
    std::unique_ptr<nn::BatchNorm> stem_bn_;
    nn::ReLU stem_relu_;
    std::unique_ptr<nn::Dropout> stem_dropout_;
    std::vector<nn::ResidualBlock> blocks_;
    std::unique_ptr<nn::Dense> output_;
};

void save_posenet(const PoseNet& net, const std::string& path);
PoseNet load_posenet(const std::string& path, const JointSet& js);

using EpochCallback = std::function<void(long epoch, double lr, double mean_loss, PoseNet& net)>;

struct Stage1Result {
    PoseNet net;
    std::vector<double> loss_curve;  // per-epoch mean training loss
};

/// Stage 1: trains a fresh PoseNet on the detected samples with shuffled
/// mini-batches, Adam and the step-decay schedule. Deterministic given
/// (config, dataset, seed).
Stage1Result train_stage1(const PoseNetConfig& cfg, const Dataset& data, std::uint64_t seed,
                          const EpochCallback& on_epoch = {});

struct Stage2Options {
    long epochs = 5;
    long batch_size = 30;
    double lr = 1e-5;
};

/// Stage 2: joint fine-tuning of the depth recalibration and the PoseNet.
/// Requires depth features.
std::vector<double> train_stage2(PoseNet& net, const Dataset& data, std::uint64_t seed,
                                 const Stage2Options& opts = {});

struct BaselinePrediction {
    Pose3D pose;
    bool degenerate = false;  // translation diverged / unrecoverable depth
};

/// Two-step baseline: root-relative pose from the relative network, then
/// the closed-form weak-perspective translation from the visible
/// detections. A degenerate solve is reported via the flag with the pose
/// left root-relative.
BaselinePrediction baseline_predict(const Pose2D& det_norm, PoseNet& rel_net,
                                    const std::vector<double>& log_depth = {});

}  // namespace abspose
