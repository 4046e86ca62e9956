// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "abspose/rng.hpp"

namespace abspose::nn {

/// Dense 2-D array of doubles, shape (batch, features).
using RealMatrix = Eigen::MatrixXd;

enum class Mode { Train, Eval };

/// A trainable tensor with its gradient and Adam state.
struct Parameter {
    std::string name;
    RealMatrix value;
    RealMatrix grad;
    RealMatrix m;  // first moment
    RealMatrix v;  // second moment
    long step = 0;

    Parameter() = default;
    Parameter(std::string n, RealMatrix init) : name(std::move(n)), value(std::move(init)) {
        grad = RealMatrix::Zero(value.rows(), value.cols());
        m = grad;
        v = grad;
    }

    void zero_grad() { grad.setZero(); }
};

/// y = x W + b. Weights start uniform in +-1/sqrt(fan_in), bias at zero.
class Dense {
  public:
    Dense(std::string name, int in, int out, Rng& rng);

    RealMatrix forward(const RealMatrix& x);
    /// Returns dx; accumulates dW, db.
    RealMatrix backward(const RealMatrix& dy);

    std::vector<Parameter*> parameters() { return {&W_, &b_}; }
    const Parameter& weight() const { return W_; }
    const Parameter& bias() const { return b_; }

  private:
    Parameter W_;  // (in, out)
    Parameter b_;  // (1, out)
    RealMatrix x_;
};

/// Batch normalization over the batch dimension with affine (gamma, beta).
/// Train mode standardizes by batch statistics and updates running stats
/// with an exponential average; Eval mode standardizes by the running
/// stats. Train mode requires batch size >= 2.
class BatchNorm {
  public:
    BatchNorm(std::string name, int features, double momentum = 0.1, double epsilon = 1e-5);

    RealMatrix forward(const RealMatrix& x, Mode mode);
    RealMatrix backward(const RealMatrix& dy);

    std::vector<Parameter*> parameters() { return {&gamma_, &beta_}; }
    /// Named running statistics, for checkpointing.
    std::vector<std::pair<std::string, RealMatrix*>> buffers();
    RealMatrix& running_mean() { return running_mean_; }
    RealMatrix& running_var() { return running_var_; }
    double epsilon() const { return epsilon_; }

  private:
    std::string name_;
    Parameter gamma_;  // (1, F)
    Parameter beta_;   // (1, F)
    RealMatrix running_mean_;
    RealMatrix running_var_;
    double momentum_;
    double epsilon_;
    // caches
    Mode mode_ = Mode::Train;
    RealMatrix xhat_;
    RealMatrix centered_;
    Eigen::RowVectorXd inv_std_;
};

class ReLU {
  public:
    RealMatrix forward(const RealMatrix& x);
    RealMatrix backward(const RealMatrix& dy) const;

  private:
    RealMatrix mask_;
};

/// Inverted dropout: Train zeroes entries with probability `rate` and
/// scales survivors by 1/(1-rate); Eval is the identity.
class Dropout {
  public:
    Dropout(double rate, Rng* rng);

    RealMatrix forward(const RealMatrix& x, Mode mode);
    RealMatrix backward(const RealMatrix& dy) const;

    double rate() const { return rate_; }

  private:
    double rate_;
    Rng* rng_;
    Mode mode_ = Mode::Eval;
    RealMatrix mask_;  // already carries the 1/(1-rate) scale
};

/// One residual module: two [dense -> batchnorm -> relu -> dropout] chains
/// with an additive skip connection. Input width must equal the block
/// width.
class ResidualBlock {
  public:
    ResidualBlock(const std::string& name, int width, double dropout_rate, Rng& weight_rng,
                  Rng* dropout_rng);

    RealMatrix forward(const RealMatrix& x, Mode mode);
    RealMatrix backward(const RealMatrix& dy);

    std::vector<Parameter*> parameters();
    std::vector<std::pair<std::string, RealMatrix*>> buffers();
    int width() const { return width_; }

  private:
    int width_;
    Dense d1_, d2_;
    BatchNorm bn1_, bn2_;
    ReLU r1_, r2_;
    Dropout dp1_, dp2_;
};

struct LossResult {
    double value = 0.0;
    RealMatrix grad;  // dL/dpred, same shape as pred
};

/// L1 batch loss: sum of absolute coordinate errors per pose, averaged
/// over the batch's poses. Subgradient at exact ties is 0.
LossResult l1_loss(const RealMatrix& pred, const RealMatrix& gt);

/// Squared-error analogue with the same per-pose averaging.
LossResult l2_loss(const RealMatrix& pred, const RealMatrix& gt);

enum class LossKind { L1, L2 };

LossResult compute_loss(LossKind kind, const RealMatrix& pred, const RealMatrix& gt);

/// One bias-corrected Adam update on every parameter; steps the per
/// parameter counters.
void adam_step(const std::vector<Parameter*>& params, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double epsilon = 1e-8);

/// Step decay: base_lr * decay^floor(epoch / period).
double lr_schedule(long epoch, double base_lr = 1e-3, double decay = 0.96, long period = 4);

struct GradientCheckEntry {
    std::string param;
    double max_rel_error = 0.0;
};

struct GradientCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::vector<GradientCheckEntry> per_param;
    bool passed = false;
};

/// Compares the gradients already stored in `params` against central
/// finite differences of `loss_fn` (which must re-evaluate the loss from
/// the current parameter values on a deterministic path).
GradientCheckReport gradient_check(const std::vector<Parameter*>& params,
                                   const std::function<double()>& loss_fn, double tolerance,
                                   double h = 1e-5);

/// Checkpoint file: "ABSPOSECKPT\n", u32 version, u32 entry count, then per
/// entry u32 name length, name bytes, u32 rows, u32 cols and row-major
/// doubles. All integers and doubles little-endian.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const RealMatrix*>>& entries);
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, RealMatrix*>>& entries);

}  // namespace abspose::nn
