// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/neural.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace abspose::nn {

namespace {

void check_same_shape(const RealMatrix& a, const RealMatrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(std::string name, int in, int out, Rng& rng) {
    RealMatrix w(in, out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int c = 0; c < out; ++c) {
        for (int r = 0; r < in; ++r) {
            w(r, c) = rng.uniform(-bound, bound);
        }
    }
    W_ = Parameter(name + ".W", std::move(w));
    b_ = Parameter(name + ".b", RealMatrix::Zero(1, out));
}

RealMatrix Dense::forward(const RealMatrix& x) {
    if (x.cols() != W_.value.rows()) {
        throw std::invalid_argument("Dense::forward: input width " + std::to_string(x.cols()) +
                                    " does not match weight rows " + std::to_string(W_.value.rows()));
    }
    x_ = x;
    RealMatrix y = x * W_.value;
    y.rowwise() += b_.value.row(0);
    return y;
}

RealMatrix Dense::backward(const RealMatrix& dy) {
    if (dy.rows() != x_.rows() || dy.cols() != W_.value.cols()) {
        throw std::invalid_argument("Dense::backward: gradient shape mismatch");
    }
    W_.grad += x_.transpose() * dy;
    b_.grad += dy.colwise().sum();
    return dy * W_.value.transpose();
}

// ------------------------------------------------------------ BatchNorm

BatchNorm::BatchNorm(std::string name, int features, double momentum, double epsilon)
    : name_(name),
      gamma_(name + ".gamma", RealMatrix::Ones(1, features)),
      beta_(name + ".beta", RealMatrix::Zero(1, features)),
      running_mean_(RealMatrix::Zero(1, features)),
      running_var_(RealMatrix::Ones(1, features)),
      momentum_(momentum),
      epsilon_(epsilon) {}

std::vector<std::pair<std::string, RealMatrix*>> BatchNorm::buffers() {
    return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
}

RealMatrix BatchNorm::forward(const RealMatrix& x, Mode mode) {
    if (x.cols() != gamma_.value.cols()) {
        throw std::invalid_argument("BatchNorm::forward: feature width mismatch");
    }
    mode_ = mode;
    const auto n = static_cast<double>(x.rows());
    if (mode == Mode::Train) {
        if (x.rows() < 2) {
            throw std::invalid_argument("BatchNorm::forward: Train mode needs batch size >= 2");
        }
        const Eigen::RowVectorXd mean = x.colwise().mean();
        centered_ = x.rowwise() - mean;
        const Eigen::RowVectorXd var = centered_.array().square().colwise().sum() / n;
        inv_std_ = (var.array() + epsilon_).rsqrt().matrix();
        xhat_ = (centered_.array().rowwise() * inv_std_.array()).matrix();
        running_mean_ = (1.0 - momentum_) * running_mean_ + momentum_ * mean;
        running_var_ = (1.0 - momentum_) * running_var_.row(0) + momentum_ * var;
    } else {
        inv_std_ = (running_var_.row(0).array() + epsilon_).rsqrt().matrix();
        centered_ = x.rowwise() - running_mean_.row(0);
        xhat_ = (centered_.array().rowwise() * inv_std_.array()).matrix();
    }
    RealMatrix y = (xhat_.array().rowwise() * gamma_.value.row(0).array()).matrix();
    y.rowwise() += beta_.value.row(0);
    return y;
}

RealMatrix BatchNorm::backward(const RealMatrix& dy) {
    check_same_shape(dy, xhat_, "BatchNorm::backward");
    gamma_.grad += (dy.array() * xhat_.array()).colwise().sum().matrix();
    beta_.grad += dy.colwise().sum();

    RealMatrix dxhat = (dy.array().rowwise() * gamma_.value.row(0).array()).matrix();
    if (mode_ == Mode::Eval) {
        return (dxhat.array().rowwise() * inv_std_.array()).matrix();
    }
    const auto n = static_cast<double>(dy.rows());
    const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dxhat_xhat =
        (dxhat.array() * xhat_.array()).colwise().sum().matrix();
    RealMatrix dx = n * dxhat;
    dx.rowwise() -= sum_dxhat;
    dx -= (xhat_.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    dx.array().rowwise() *= (inv_std_.array() / n);
    return dx;
}

// ----------------------------------------------------------------- ReLU

RealMatrix ReLU::forward(const RealMatrix& x) {
    mask_ = (x.array() > 0.0).cast<double>();
    return x.cwiseMax(0.0);
}

RealMatrix ReLU::backward(const RealMatrix& dy) const {
    check_same_shape(dy, mask_, "ReLU::backward");
    return dy.cwiseProduct(mask_);
}

// -------------------------------------------------------------- Dropout

Dropout::Dropout(double rate, Rng* rng) : rate_(rate), rng_(rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw std::invalid_argument("Dropout: rate must be in [0, 1)");
    }
}

RealMatrix Dropout::forward(const RealMatrix& x, Mode mode) {
    mode_ = mode;
    if (mode == Mode::Eval || rate_ == 0.0) {
        mask_ = RealMatrix::Ones(x.rows(), x.cols());
        return x;
    }
    const double scale = 1.0 / (1.0 - rate_);
    mask_.resize(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            mask_(r, c) = rng_->uniform() < rate_ ? 0.0 : scale;
        }
    }
    return x.cwiseProduct(mask_);
}

RealMatrix Dropout::backward(const RealMatrix& dy) const {
    check_same_shape(dy, mask_, "Dropout::backward");
    return dy.cwiseProduct(mask_);
}

// -------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(const std::string& name, int width, double dropout_rate,
                             Rng& weight_rng, Rng* dropout_rng)
    : width_(width),
      d1_(name + ".d1", width, width, weight_rng),
      d2_(name + ".d2", width, width, weight_rng),
      bn1_(name + ".bn1", width),
      bn2_(name + ".bn2", width),
      dp1_(dropout_rate, dropout_rng),
      dp2_(dropout_rate, dropout_rng) {}

RealMatrix ResidualBlock::forward(const RealMatrix& x, Mode mode) {
    if (x.cols() != width_) {
        throw std::invalid_argument("ResidualBlock::forward: input width does not match block width");
    }
    RealMatrix h = dp1_.forward(r1_.forward(bn1_.forward(d1_.forward(x), mode)), mode);
    h = dp2_.forward(r2_.forward(bn2_.forward(d2_.forward(h), mode)), mode);
    return x + h;
}

RealMatrix ResidualBlock::backward(const RealMatrix& dy) {
    RealMatrix dh = d2_.backward(bn2_.backward(r2_.backward(dp2_.backward(dy))));
    dh = d1_.backward(bn1_.backward(r1_.backward(dp1_.backward(dh))));
    return dy + dh;
}

std::vector<Parameter*> ResidualBlock::parameters() {
    std::vector<Parameter*> out;
    for (auto* p : d1_.parameters()) out.push_back(p);
    for (auto* p : bn1_.parameters()) out.push_back(p);
    for (auto* p : d2_.parameters()) out.push_back(p);
    for (auto* p : bn2_.parameters()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, RealMatrix*>> ResidualBlock::buffers() {
    auto out = bn1_.buffers();
    for (auto& b : bn2_.buffers()) out.push_back(std::move(b));
    return out;
}

// --------------------------------------------------------------- losses

LossResult l1_loss(const RealMatrix& pred, const RealMatrix& gt) {
    check_same_shape(pred, gt, "l1_loss");
    if (pred.rows() == 0) {
        throw std::invalid_argument("l1_loss: empty batch (no detected poses)");
    }
    const double n = static_cast<double>(pred.rows());
    const RealMatrix diff = pred - gt;
    LossResult out;
    out.value = diff.array().abs().sum() / n;
    out.grad = diff.unaryExpr([n](double d) {
        if (d > 0.0) return 1.0 / n;
        if (d < 0.0) return -1.0 / n;
        return 0.0;
    });
    return out;
}

LossResult l2_loss(const RealMatrix& pred, const RealMatrix& gt) {
    check_same_shape(pred, gt, "l2_loss");
    if (pred.rows() == 0) {
        throw std::invalid_argument("l2_loss: empty batch (no detected poses)");
    }
    const double n = static_cast<double>(pred.rows());
    const RealMatrix diff = pred - gt;
    LossResult out;
    out.value = diff.array().square().sum() / n;
    out.grad = (2.0 / n) * diff;
    return out;
}

LossResult compute_loss(LossKind kind, const RealMatrix& pred, const RealMatrix& gt) {
    return kind == LossKind::L1 ? l1_loss(pred, gt) : l2_loss(pred, gt);
}

// ------------------------------------------------------------ optimizer

void adam_step(const std::vector<Parameter*>& params, double lr, double beta1, double beta2,
               double epsilon) {
    for (Parameter* p : params) {
        p->step += 1;
        const double t = static_cast<double>(p->step);
        p->m = beta1 * p->m + (1.0 - beta1) * p->grad;
        p->v = beta2 * p->v + (1.0 - beta2) * p->grad.cwiseProduct(p->grad);
        const double mc = 1.0 - std::pow(beta1, t);
        const double vc = 1.0 - std::pow(beta2, t);
        p->value.array() -=
            lr * (p->m.array() / mc) / ((p->v.array() / vc).sqrt() + epsilon);
    }
}

double lr_schedule(long epoch, double base_lr, double decay, long period) {
    if (epoch < 0) {
        throw std::invalid_argument("lr_schedule: epoch must be >= 0");
    }
    return base_lr * std::pow(decay, static_cast<double>(epoch / period));
}

// ------------------------------------------------------- gradient check

GradientCheckReport gradient_check(const std::vector<Parameter*>& params,
                                   const std::function<double()>& loss_fn, double tolerance,
                                   double h) {
    GradientCheckReport report;
    for (Parameter* p : params) {
        double worst = 0.0;
        for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
            for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
                const double saved = p->value(r, c);
                p->value(r, c) = saved + h;
                const double lp = loss_fn();
                p->value(r, c) = saved - h;
                const double lm = loss_fn();
                p->value(r, c) = saved;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = p->grad(r, c);
                const double rel = std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
                worst = std::max(worst, rel);
            }
        }
        report.per_param.push_back({p->name, worst});
        if (worst > report.max_rel_error) {
            report.max_rel_error = worst;
            report.worst_param = p->name;
        }
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

// ------------------------------------------------------------ I/O

namespace {

constexpr char kMagic[] = "ABSPOSECKPT\n";
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const RealMatrix*>>& entries) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("save_checkpoint: cannot open '" + path + "' for writing");
    }
    os.write(kMagic, sizeof(kMagic) - 1);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, mat] : entries) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(mat->rows()));
        write_u32(os, static_cast<std::uint32_t>(mat->cols()));
        for (Eigen::Index r = 0; r < mat->rows(); ++r) {
            for (Eigen::Index c = 0; c < mat->cols(); ++c) {
                write_f64(os, (*mat)(r, c));
            }
        }
    }
    if (!os) {
        throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
    }
}

void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, RealMatrix*>>& entries) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
    }
    char magic[sizeof(kMagic) - 1];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic, '" + path + "' is not a checkpoint");
    }
    const std::uint32_t version = read_u32(is);
    if (version != kVersion) {
        throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = read_u32(is);
    std::vector<std::pair<std::string, RealMatrix>> loaded;
    loaded.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const std::uint32_t rows = read_u32(is);
        const std::uint32_t cols = read_u32(is);
        if (!is) {
            throw std::runtime_error("load_checkpoint: truncated file '" + path + "'");
        }
        RealMatrix mat(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t c = 0; c < cols; ++c) {
                mat(r, c) = read_f64(is);
            }
        }
        loaded.emplace_back(std::move(name), std::move(mat));
    }
    if (!is) {
        throw std::runtime_error("load_checkpoint: truncated file '" + path + "'");
    }
    for (const auto& [name, target] : entries) {
        bool found = false;
        for (auto& [lname, lmat] : loaded) {
            if (lname == name) {
                *target = lmat;
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::runtime_error("load_checkpoint: entry '" + name + "' missing from '" + path +
                                     "'");
        }
    }
}

}  // namespace abspose::nn
