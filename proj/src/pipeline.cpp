// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace abspose {

void PoseNetConfig::validate() const {
    if (num_blocks < 1 || hidden_width < 1) {
        throw std::invalid_argument("PoseNetConfig: widths and block count must be positive");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw std::invalid_argument("PoseNetConfig: dropout rate must be in [0, 1)");
    }
    if (epochs < 1 || batch_size < 1) {
        throw std::invalid_argument("PoseNetConfig: epochs and batch size must be positive");
    }
    if (!(base_lr > 0.0) || !(lr_decay > 0.0) || lr_decay_period < 1) {
        throw std::invalid_argument("PoseNetConfig: invalid learning-rate schedule");
    }
}

FeatureLayout FeatureLayout::create(std::size_t num_joints, bool use_depth) {
    FeatureLayout l;
    l.relative_offset = 0;
    l.hip_offset = 2 * (num_joints - 1);
    l.depth_offset = l.hip_offset + 2;
    l.size = l.depth_offset + (use_depth ? num_joints : 0);
    return l;
}

PredictionLayout PredictionLayout::create(std::size_t num_joints) {
    PredictionLayout l;
    l.relative_offset = 0;
    l.hip_x = 3 * (num_joints - 1);
    l.hip_y = l.hip_x + 1;
    l.hip_depth = l.hip_x + 2;
    l.size = l.hip_x + 3;
    return l;
}

FeatureVector build_features(const Pose2D& det_norm, const std::vector<double>& log_depth,
                             const JointSet& js, bool use_depth) {
    if (det_norm.size() != js.size()) {
        throw std::invalid_argument("build_features: pose size does not match joint set");
    }
    const Joint2D& root = det_norm.joints[js.root];
    if (!root.visible) {
        throw RootMissing("build_features: root joint is not visible");
    }
    if (root.pt.frame != Frame::Normalized) {
        throw std::invalid_argument("build_features: detections must be in the normalized frame");
    }
    if (use_depth && log_depth.size() != js.size()) {
        throw std::invalid_argument("build_features: need one log-depth readout per joint");
    }

    const FeatureLayout layout = FeatureLayout::create(js.size(), use_depth);
    FeatureVector f = FeatureVector::Zero(static_cast<Eigen::Index>(layout.size));
    std::size_t k = 0;
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) continue;
        const Joint2D& joint = det_norm.joints[j];
        if (joint.visible) {
            f(static_cast<Eigen::Index>(layout.relative_offset + 2 * k)) = joint.pt.u - root.pt.u;
            f(static_cast<Eigen::Index>(layout.relative_offset + 2 * k + 1)) =
                joint.pt.v - root.pt.v;
        }  // invisible joints stay at the imputed zeros
        ++k;
    }
    f(static_cast<Eigen::Index>(layout.hip_offset)) = root.pt.u;
    f(static_cast<Eigen::Index>(layout.hip_offset + 1)) = root.pt.v;
    if (use_depth) {
        for (std::size_t j = 0; j < js.size(); ++j) {
            f(static_cast<Eigen::Index>(layout.depth_offset + j)) = log_depth[j];
        }
    }
    return f;
}

Eigen::RowVectorXd encode_target(const Pose3D& gt, const JointSet& js, bool log_hip_z) {
    if (gt.size() != js.size()) {
        throw std::invalid_argument("encode_target: pose size does not match joint set");
    }
    const Point3& root = gt.joints[js.root];
    if (!(root.z > 0.0)) {
        throw std::domain_error("encode_target: root depth must be positive");
    }
    const PredictionLayout layout = PredictionLayout::create(js.size());
    Eigen::RowVectorXd t(static_cast<Eigen::Index>(layout.size));
    std::size_t k = 0;
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) continue;
        const Point3 rel = gt.joints[j] - root;
        t(static_cast<Eigen::Index>(3 * k)) = rel.x;
        t(static_cast<Eigen::Index>(3 * k + 1)) = rel.y;
        t(static_cast<Eigen::Index>(3 * k + 2)) = rel.z;
        ++k;
    }
    t(static_cast<Eigen::Index>(layout.hip_x)) = root.x;
    t(static_cast<Eigen::Index>(layout.hip_y)) = root.y;
    t(static_cast<Eigen::Index>(layout.hip_depth)) = log_hip_z ? std::log(root.z) : root.z;
    return t;
}

Pose3D decode_prediction(const Eigen::RowVectorXd& pred, const JointSet& js, bool log_hip_z) {
    const PredictionLayout layout = PredictionLayout::create(js.size());
    if (pred.size() != static_cast<Eigen::Index>(layout.size)) {
        throw std::invalid_argument("decode_prediction: vector length does not match joint set");
    }
    const double z_entry = pred(static_cast<Eigen::Index>(layout.hip_depth));
    const Point3 root{pred(static_cast<Eigen::Index>(layout.hip_x)),
                      pred(static_cast<Eigen::Index>(layout.hip_y)),
                      log_hip_z ? std::exp(z_entry) : z_entry};
    Pose3D out;
    out.detected = true;
    out.joints.resize(js.size());
    std::size_t k = 0;
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) {
            out.joints[j] = root;
        } else {
            out.joints[j] = Point3{pred(static_cast<Eigen::Index>(3 * k)),
                                   pred(static_cast<Eigen::Index>(3 * k + 1)),
                                   pred(static_cast<Eigen::Index>(3 * k + 2))} +
                            root;
            ++k;
        }
    }
    return out;
}

Eigen::RowVectorXd encode_relative_target(const Pose3D& gt, const JointSet& js) {
    if (gt.size() != js.size()) {
        throw std::invalid_argument("encode_relative_target: pose size does not match joint set");
    }
    const Point3& root = gt.joints[js.root];
    Eigen::RowVectorXd t(static_cast<Eigen::Index>(3 * (js.size() - 1)));
    std::size_t k = 0;
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) continue;
        const Point3 rel = gt.joints[j] - root;
        t(static_cast<Eigen::Index>(3 * k)) = rel.x;
        t(static_cast<Eigen::Index>(3 * k + 1)) = rel.y;
        t(static_cast<Eigen::Index>(3 * k + 2)) = rel.z;
        ++k;
    }
    return t;
}

// ---------------------------------------------------- DepthRecalibration

DepthRecalibration::DepthRecalibration(std::size_t num_joints, std::size_t depth_offset)
    : depth_offset_(depth_offset),
      scale_("recalib.scale", nn::RealMatrix::Ones(1, static_cast<Eigen::Index>(num_joints))),
      offset_("recalib.offset", nn::RealMatrix::Zero(1, static_cast<Eigen::Index>(num_joints))) {}

nn::RealMatrix DepthRecalibration::forward(const nn::RealMatrix& x) {
    x_ = x;
    nn::RealMatrix y = x;
    const Eigen::Index j_count = scale_.value.cols();
    for (Eigen::Index j = 0; j < j_count; ++j) {
        const Eigen::Index c = static_cast<Eigen::Index>(depth_offset_) + j;
        y.col(c) = scale_.value(0, j) * x.col(c).array() + offset_.value(0, j);
    }
    return y;
}

nn::RealMatrix DepthRecalibration::backward(const nn::RealMatrix& dy) {
    nn::RealMatrix dx = dy;
    const Eigen::Index j_count = scale_.value.cols();
    for (Eigen::Index j = 0; j < j_count; ++j) {
        const Eigen::Index c = static_cast<Eigen::Index>(depth_offset_) + j;
        scale_.grad(0, j) += dy.col(c).dot(x_.col(c));
        offset_.grad(0, j) += dy.col(c).sum();
        dx.col(c) = scale_.value(0, j) * dy.col(c);
    }
    return dx;
}

// -------------------------------------------------------------- PoseNet

namespace {

int posenet_output_dim(const PoseNetConfig& cfg, const JointSet& js) {
    const auto j = static_cast<int>(js.size());
    return cfg.relative_only ? 3 * (j - 1) : 3 * j;
}

}  // namespace

PoseNet::PoseNet(const PoseNetConfig& cfg, const JointSet& js, std::uint64_t seed)
    : cfg_(cfg),
      js_(js),
      in_layout_(FeatureLayout::create(js.size(), cfg.use_depth_features)),
      output_dim_(posenet_output_dim(cfg, js)),
      dropout_rng_(std::make_unique<Rng>(mix_seed(seed, 101))),
      input_proj_([&] {
          cfg.validate();
          if (js.size() < 2) throw std::invalid_argument("PoseNet: joint set too small");
          Rng weight_rng(mix_seed(seed, 100));
          return nn::Dense("input", static_cast<int>(in_layout_.size), cfg.hidden_width,
                           weight_rng);
      }()) {
    Rng weight_rng(mix_seed(seed, 102));
    if (cfg.use_depth_features) {
        recalib_ = std::make_unique<DepthRecalibration>(js.size(), in_layout_.depth_offset);
    }
    stem_bn_ = std::make_unique<nn::BatchNorm>("stem.bn", cfg.hidden_width);
    stem_dropout_ = std::make_unique<nn::Dropout>(cfg.dropout, dropout_rng_.get());
    blocks_.reserve(cfg.num_blocks);
    for (int b = 0; b < cfg.num_blocks; ++b) {
        blocks_.emplace_back("block" + std::to_string(b), cfg.hidden_width, cfg.dropout,
                             weight_rng, dropout_rng_.get());
    }
    Rng out_rng(mix_seed(seed, 103));
    output_ = std::make_unique<nn::Dense>("output", cfg.hidden_width, output_dim_, out_rng);
}

nn::RealMatrix PoseNet::forward(const nn::RealMatrix& features, nn::Mode mode) {
    if (features.cols() != static_cast<Eigen::Index>(in_layout_.size)) {
        throw std::invalid_argument("PoseNet::forward: feature width " +
                                    std::to_string(features.cols()) + " does not match layout " +
                                    std::to_string(in_layout_.size));
    }
    nn::RealMatrix h = recalib_ ? recalib_->forward(features) : features;
    h = input_proj_.forward(h);
    h = stem_relu_.forward(stem_bn_->forward(h, mode));
    for (auto& block : blocks_) h = block.forward(h, mode);
    return output_->forward(h);
}

void PoseNet::backward(const nn::RealMatrix& dloss) {
    nn::RealMatrix d = output_->backward(dloss);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) d = it->backward(d);
    d = stem_bn_->backward(stem_relu_.backward(d));
    d = input_proj_.backward(d);
    if (recalib_) recalib_->backward(d);
}

void PoseNet::zero_grad() {
    for (nn::Parameter* p : parameters_with_recalibration()) p->zero_grad();
}

std::vector<nn::Parameter*> PoseNet::parameters() {
    std::vector<nn::Parameter*> out;
    for (auto* p : input_proj_.parameters()) out.push_back(p);
    for (auto* p : stem_bn_->parameters()) out.push_back(p);
    for (auto& b : blocks_) {
        for (auto* p : b.parameters()) out.push_back(p);
    }
    for (auto* p : output_->parameters()) out.push_back(p);
    return out;
}

std::vector<nn::Parameter*> PoseNet::parameters_with_recalibration() {
    auto out = parameters();
    if (recalib_) {
        for (auto* p : recalib_->parameters()) out.push_back(p);
    }
    return out;
}

std::vector<std::pair<std::string, nn::RealMatrix*>> PoseNet::state_entries() {
    std::vector<std::pair<std::string, nn::RealMatrix*>> out;
    for (nn::Parameter* p : parameters_with_recalibration()) out.emplace_back(p->name, &p->value);
    for (auto& e : stem_bn_->buffers()) out.push_back(e);
    for (auto& b : blocks_) {
        for (auto& e : b.buffers()) out.push_back(e);
    }
    return out;
}

std::vector<std::pair<std::string, const nn::RealMatrix*>> PoseNet::state_entries() const {
    auto* self = const_cast<PoseNet*>(this);
    std::vector<std::pair<std::string, const nn::RealMatrix*>> out;
    for (auto& [name, mat] : self->state_entries()) out.emplace_back(name, mat);
    return out;
}

DepthRecalibration& PoseNet::recalibration() {
    if (!recalib_) {
        throw std::logic_error("PoseNet: no depth recalibration without depth features");
    }
    return *recalib_;
}

void PoseNet::reseed_dropout(std::uint64_t seed) { *dropout_rng_ = Rng(mix_seed(seed, 101)); }

nn::Parameter& PoseNet::output_bias() { return *output_->parameters()[1]; }

namespace {
constexpr const char* kArchEntry = "__arch__";
}

void save_posenet(const PoseNet& net, const std::string& path) {
    const PoseNetConfig& c = net.config();
    nn::RealMatrix arch(1, 9);
    arch << static_cast<double>(net.joints().size()), static_cast<double>(c.num_blocks),
        static_cast<double>(c.hidden_width), c.dropout, c.use_depth_features ? 1.0 : 0.0,
        c.log_hip_z ? 1.0 : 0.0, c.relative_only ? 1.0 : 0.0,
        c.loss == nn::LossKind::L1 ? 1.0 : 2.0, 0.0;
    std::vector<std::pair<std::string, const nn::RealMatrix*>> entries = {{kArchEntry, &arch}};
    for (auto& e : net.state_entries()) entries.push_back(e);
    nn::save_checkpoint(path, entries);
}

PoseNet load_posenet(const std::string& path, const JointSet& js) {
    nn::RealMatrix arch;
    nn::load_checkpoint(path, {{kArchEntry, &arch}});
    if (arch.rows() != 1 || arch.cols() < 8) {
        throw std::runtime_error("load_posenet: malformed architecture entry");
    }
    if (static_cast<std::size_t>(arch(0, 0)) != js.size()) {
        throw std::runtime_error("load_posenet: checkpoint joint count " +
                                 std::to_string(static_cast<int>(arch(0, 0))) +
                                 " does not match the configured joint set");
    }
    PoseNetConfig cfg;
    cfg.num_blocks = static_cast<int>(arch(0, 1));
    cfg.hidden_width = static_cast<int>(arch(0, 2));
    cfg.dropout = arch(0, 3);
    cfg.use_depth_features = arch(0, 4) != 0.0;
    cfg.log_hip_z = arch(0, 5) != 0.0;
    cfg.relative_only = arch(0, 6) != 0.0;
    cfg.loss = arch(0, 7) == 1.0 ? nn::LossKind::L1 : nn::LossKind::L2;
    PoseNet net(cfg, js, 0);
    std::vector<std::pair<std::string, nn::RealMatrix*>> entries = net.state_entries();
    nn::load_checkpoint(path, entries);
    return net;
}

// ------------------------------------------------------------- training

namespace {

// Weight of the log hip-depth loss term relative to the geometric-mean
// depth of the training targets (1 = mm loss linearized at that depth).
constexpr double kDepthTermScale = 0.25;

struct BatchPlan {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end) into the permutation
};

// ceil(n / batch) batches in order; a trailing singleton is duplicated at
// assembly time so batch norm always sees at least two rows.
BatchPlan plan_batches(std::size_t n, std::size_t batch) {
    BatchPlan plan;
    for (std::size_t start = 0; start < n; start += batch) {
        plan.ranges.emplace_back(start, std::min(n, start + batch));
    }
    return plan;
}

void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

struct SampleTensors {
    nn::RealMatrix features;  // (n, F)
    nn::RealMatrix targets;   // (n, out); the log hip-depth column arrives pre-scaled
    double depth_weight = 1.0;          // mm weight of the log hip-depth loss term
    std::vector<std::size_t> detected;  // indices into data.samples
};

Eigen::RowVectorXd sample_features(const PoseSample& s, const JointSet& js,
                                   const PoseNetConfig& cfg) {
    Pose2D norm = s.detections;
    for (Joint2D& j : norm.joints) {
        if (j.visible) j.pt = normalize_2d(s.cam, j.pt);
    }
    return build_features(norm, s.log_depth, js, cfg.use_depth_features);
}

Eigen::RowVectorXd sample_target(const PoseSample& s, const JointSet& js,
                                 const PoseNetConfig& cfg) {
    return cfg.relative_only ? encode_relative_target(s.gt, js)
                             : encode_target(s.gt, js, cfg.log_hip_z);
}

SampleTensors assemble_tensors(const Dataset& data, const PoseNetConfig& cfg) {
    SampleTensors t;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        if (data.samples[i].detections.joints[data.joints.root].visible) t.detected.push_back(i);
    }
    if (t.detected.empty()) {
        throw std::invalid_argument("training: no detected poses in the dataset");
    }
    const FeatureLayout layout = FeatureLayout::create(data.joints.size(), cfg.use_depth_features);
    const std::size_t out_dim = cfg.relative_only ? 3 * (data.joints.size() - 1)
                                                  : 3 * data.joints.size();
    t.features.resize(static_cast<Eigen::Index>(t.detected.size()),
                      static_cast<Eigen::Index>(layout.size));
    t.targets.resize(static_cast<Eigen::Index>(t.detected.size()),
                     static_cast<Eigen::Index>(out_dim));
    const bool log_head = cfg.log_hip_z && !cfg.relative_only;
    const auto hip_depth =
        static_cast<Eigen::Index>(PredictionLayout::create(data.joints.size()).hip_depth);
    double log_depth_sum = 0.0;
    for (std::size_t k = 0; k < t.detected.size(); ++k) {
        const PoseSample& s = data.samples[t.detected[k]];
        t.features.row(static_cast<Eigen::Index>(k)) = sample_features(s, data.joints, cfg);
        t.targets.row(static_cast<Eigen::Index>(k)) = sample_target(s, data.joints, cfg);
        log_depth_sum += std::log(s.gt.joints[data.joints.root].z);
    }
    if (log_head) {
        // The hip-depth term of the loss is w * |dlog z|, the millimeter L1
        // linearized at the corpus's geometric-mean depth. The constant
        // weight keeps the term in mm units without per-sample gradient
        // scale swings through the shared trunk.
        t.depth_weight =
            kDepthTermScale * std::exp(log_depth_sum / static_cast<double>(t.detected.size()));
        t.targets.col(hip_depth) *= t.depth_weight;
    }
    return t;
}

// One optimization step: forward, loss in mm across every coordinate (the
// log hip-depth entry is weighted on both sides), backward, Adam.
double training_step(PoseNet& net, const PoseNetConfig& cfg, const nn::RealMatrix& xb,
                     const nn::RealMatrix& tb, double depth_weight,
                     const std::vector<nn::Parameter*>& params, double lr) {
    nn::RealMatrix pred = net.forward(xb, nn::Mode::Train);
    const bool log_head = cfg.log_hip_z && !cfg.relative_only;
    const auto hip_depth =
        static_cast<Eigen::Index>(PredictionLayout::create(net.joints().size()).hip_depth);
    if (log_head) {
        pred.col(hip_depth) *= depth_weight;
    }
    nn::LossResult loss = nn::compute_loss(cfg.loss, pred, tb);
    if (log_head) {
        loss.grad.col(hip_depth) *= depth_weight;
    }
    net.zero_grad();
    net.backward(loss.grad);
    nn::adam_step(params, lr);
    return loss.value;
}

// Gathers permuted rows; duplicates a singleton so train-mode batch norm
// stays defined. The duplicated row leaves the loss value and the summed
// gradient identical to the single-row batch.
void gather_batch(const SampleTensors& all, const std::vector<std::size_t>& perm,
                  std::size_t begin, std::size_t end, nn::RealMatrix& xb, nn::RealMatrix& tb) {
    const std::size_t n = end - begin;
    const std::size_t rows = std::max<std::size_t>(n, 2);
    xb.resize(static_cast<Eigen::Index>(rows), all.features.cols());
    tb.resize(static_cast<Eigen::Index>(rows), all.targets.cols());
    for (std::size_t k = 0; k < rows; ++k) {
        const std::size_t src = perm[begin + (k % n)];
        xb.row(static_cast<Eigen::Index>(k)) = all.features.row(static_cast<Eigen::Index>(src));
        tb.row(static_cast<Eigen::Index>(k)) = all.targets.row(static_cast<Eigen::Index>(src));
    }
}

}  // namespace

Stage1Result train_stage1(const PoseNetConfig& cfg, const Dataset& data, std::uint64_t seed,
                          const EpochCallback& on_epoch) {
    cfg.validate();
    if (data.empty()) {
        throw std::invalid_argument("train_stage1: empty dataset");
    }
    PoseNet net(cfg, data.joints, mix_seed(seed, 1));
    net.reseed_dropout(mix_seed(seed, 2));
    Rng shuffle_rng(mix_seed(seed, 3));
    Rng augment_rng(mix_seed(seed, 4));

    SampleTensors tensors = assemble_tensors(data, cfg);

    // Output-bias warm start: mean target in the head's own
    // parameterization (log for the hip depth when configured).
    {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(net.output_dim());
        double n = 0.0;
        for (std::size_t idx : tensors.detected) {
            const PoseSample& s = data.samples[idx];
            mean += cfg.relative_only ? encode_relative_target(s.gt, data.joints)
                                      : encode_target(s.gt, data.joints, cfg.log_hip_z);
            n += 1.0;
        }
        net.output_bias().value = mean / n;
    }
    const std::size_t n = tensors.detected.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const BatchPlan plan = plan_batches(n, static_cast<std::size_t>(cfg.batch_size));
    std::vector<nn::Parameter*> params = net.parameters();

    std::vector<double> curve;
    curve.reserve(cfg.epochs);
    nn::RealMatrix xb, tb;
    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = nn::lr_schedule(epoch, cfg.base_lr, cfg.lr_decay, cfg.lr_decay_period);
        fisher_yates(perm, shuffle_rng);
        if (cfg.augmentation) {
            // Re-derive the features of every detected sample under a fresh
            // crop/zoom; normalized features are invariant, so this leaves
            // the targets untouched.
            for (std::size_t k = 0; k < n; ++k) {
                PoseSample s = data.samples[tensors.detected[k]];
                augment_sample(s, cfg.augment_params, augment_rng);
                tensors.features.row(static_cast<Eigen::Index>(k)) =
                    sample_features(s, data.joints, cfg);
            }
        }
        double loss_sum = 0.0;
        std::size_t pose_count = 0;
        for (const auto& [begin, end] : plan.ranges) {
            gather_batch(tensors, perm, begin, end, xb, tb);
            loss_sum += training_step(net, cfg, xb, tb, tensors.depth_weight, params, lr) *
                        static_cast<double>(end - begin);
            pose_count += end - begin;
        }
        const double mean_loss = loss_sum / static_cast<double>(pose_count);
        curve.push_back(mean_loss);
        if (on_epoch) on_epoch(epoch, lr, mean_loss, net);
    }
    return {std::move(net), std::move(curve)};
}

std::vector<double> train_stage2(PoseNet& net, const Dataset& data, std::uint64_t seed,
                                 const Stage2Options& opts) {
    const PoseNetConfig& cfg = net.config();
    if (!cfg.use_depth_features) {
        throw std::invalid_argument(
            "train_stage2: depth recalibration requires depth features in the configuration");
    }
    if (data.empty()) {
        throw std::invalid_argument("train_stage2: empty dataset");
    }
    if (opts.epochs < 1 || opts.batch_size < 1 || !(opts.lr > 0.0)) {
        throw std::invalid_argument("train_stage2: invalid options");
    }

    net.reseed_dropout(mix_seed(seed, 5));
    Rng shuffle_rng(mix_seed(seed, 6));
    SampleTensors tensors = assemble_tensors(data, cfg);
    const std::size_t n = tensors.detected.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const BatchPlan plan = plan_batches(n, static_cast<std::size_t>(opts.batch_size));

    std::vector<nn::Parameter*> params = net.parameters_with_recalibration();
    for (nn::Parameter* p : params) {  // fresh optimizer state for the new phase
        p->m.setZero();
        p->v.setZero();
        p->step = 0;
    }

    std::vector<double> curve;
    curve.reserve(opts.epochs);
    nn::RealMatrix xb, tb;
    for (long epoch = 0; epoch < opts.epochs; ++epoch) {
        fisher_yates(perm, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t pose_count = 0;
        for (const auto& [begin, end] : plan.ranges) {
            gather_batch(tensors, perm, begin, end, xb, tb);
            loss_sum += training_step(net, cfg, xb, tb, tensors.depth_weight, params, opts.lr) *
                        static_cast<double>(end - begin);
            pose_count += end - begin;
        }
        curve.push_back(loss_sum / static_cast<double>(pose_count));
    }
    return curve;
}

BaselinePrediction baseline_predict(const Pose2D& det_norm, PoseNet& rel_net,
                                    const std::vector<double>& log_depth) {
    const JointSet& js = rel_net.joints();
    if (!rel_net.config().relative_only) {
        throw std::invalid_argument("baseline_predict: network must be a relative-only model");
    }
    if (det_norm.size() != js.size()) {
        throw std::invalid_argument("baseline_predict: pose size does not match joint set");
    }
    if (!det_norm.joints[js.root].visible) {
        throw RootMissing("baseline_predict: root joint is not visible");
    }

    const FeatureVector f =
        build_features(det_norm, log_depth, js, rel_net.config().use_depth_features);
    nn::RealMatrix row(1, f.size());
    row.row(0) = f;
    const nn::RealMatrix pred = rel_net.forward(row, nn::Mode::Eval);

    RootSplit<Point3> split;
    split.relative.reserve(js.size() - 1);
    for (std::size_t k = 0; k + 1 < js.size(); ++k) {
        split.relative.push_back({pred(0, static_cast<Eigen::Index>(3 * k)),
                                  pred(0, static_cast<Eigen::Index>(3 * k + 1)),
                                  pred(0, static_cast<Eigen::Index>(3 * k + 2))});
    }

    // Pair the root (relative (0,0,0)) and every visible joint for the
    // translation solve.
    std::vector<Point2> p2d;
    std::vector<Point3> p3d;
    p2d.push_back(det_norm.joints[js.root].pt);
    p3d.push_back({0.0, 0.0, 0.0});
    std::size_t k = 0;
    for (std::size_t j = 0; j < js.size(); ++j) {
        if (j == js.root) continue;
        if (det_norm.joints[j].visible) {
            p2d.push_back(det_norm.joints[j].pt);
            p3d.push_back(split.relative[k]);
        }
        ++k;
    }

    BaselinePrediction out;
    if (p2d.size() < 2) {
        // Root-only detections leave the depth unobservable.
        split.root = {0.0, 0.0, 0.0};
        out.pose = assemble_absolute(split, js);
        out.pose.detected = false;
        out.degenerate = true;
        return out;
    }
    try {
        const TranslationSolution sol = solve_weak_perspective_translation(p2d, p3d, 1.0);
        split.root = sol.t;
        out.pose = assemble_absolute(split, js);
    } catch (const DegenerateConfiguration&) {
        split.root = {0.0, 0.0, 0.0};
        out.pose = assemble_absolute(split, js);
        out.pose.detected = false;
        out.degenerate = true;
    }
    return out;
}

}  // namespace abspose
