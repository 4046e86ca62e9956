// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace abspose {

namespace {

double joint_distance(const Point3& a, const Point3& b) {
    const Point3 d = a - b;
    return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

}  // namespace

std::size_t Histogram::total() const {
    std::size_t n = 0;
    for (std::size_t c : counts) n += c;
    return n;
}

double Histogram::tail_fraction(double threshold) const {
    if (threshold > cap) {
        throw std::invalid_argument("Histogram::tail_fraction: threshold beyond the overflow cap");
    }
    const std::size_t n = total();
    if (n == 0) return 0.0;
    std::size_t tail = counts.back();  // overflow bin holds values >= cap
    for (std::size_t b = 0; b + 1 < counts.size(); ++b) {
        if (static_cast<double>(b) * bin_width >= threshold) tail += counts[b];
    }
    return static_cast<double>(tail) / static_cast<double>(n);
}

Histogram error_histogram(const std::vector<double>& values, double bin_width, double cap) {
    if (!(bin_width > 0.0) || !(cap > 0.0)) {
        throw std::invalid_argument("error_histogram: bin width and cap must be positive");
    }
    Histogram h;
    h.bin_width = bin_width;
    h.cap = cap;
    const auto n_bins = static_cast<std::size_t>(std::ceil(cap / bin_width));
    h.counts.assign(n_bins + 1, 0);  // +1 overflow
    for (double v : values) {
        if (v < 0.0) {
            throw std::invalid_argument("error_histogram: negative error value");
        }
        const auto b = static_cast<std::size_t>(v / bin_width);
        if (v >= cap || b >= n_bins) {
            h.counts.back() += 1;
        } else {
            h.counts[b] += 1;
        }
    }
    return h;
}

double pose_a_mpjpe(const Pose3D& pred, const Pose3D& gt) {
    if (pred.size() != gt.size() || pred.size() == 0) {
        throw std::invalid_argument("pose_a_mpjpe: pose size mismatch");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < pred.size(); ++j) {
        acc += joint_distance(pred.joints[j], gt.joints[j]);
    }
    return acc / static_cast<double>(pred.size());
}

double pose_r_mpjpe(const Pose3D& pred, const Pose3D& gt, const JointSet& js) {
    if (pred.size() != js.size() || gt.size() != js.size()) {
        throw std::invalid_argument("pose_r_mpjpe: pose size does not match joint set");
    }
    const Point3 pr = pred.joints[js.root];
    const Point3 gr = gt.joints[js.root];
    double acc = 0.0;
    for (std::size_t j = 0; j < js.size(); ++j) {
        acc += joint_distance(pred.joints[j] - pr, gt.joints[j] - gr);
    }
    return acc / static_cast<double>(js.size());
}

double a_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
    if (pred.size() != gt.size()) {
        throw std::invalid_argument("a_mpjpe: list length mismatch");
    }
    if (pred.empty()) {
        throw std::invalid_argument("a_mpjpe: no matched poses");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += pose_a_mpjpe(pred[i], gt[i]);
    return acc / static_cast<double>(pred.size());
}

double r_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt, const JointSet& js) {
    if (pred.size() != gt.size()) {
        throw std::invalid_argument("r_mpjpe: list length mismatch");
    }
    if (pred.empty()) {
        throw std::invalid_argument("r_mpjpe: no matched poses");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += pose_r_mpjpe(pred[i], gt[i], js);
    return acc / static_cast<double>(pred.size());
}

double detection_rate(std::size_t detected, std::size_t total_gt) {
    if (total_gt == 0) {
        throw std::invalid_argument("detection_rate: no ground-truth poses");
    }
    return static_cast<double>(detected) / static_cast<double>(total_gt);
}

// ----------------------------------------------------------- prediction

std::vector<Prediction> predict_direct(PoseNet& net, const Dataset& data) {
    const JointSet& js = data.joints;
    std::vector<Prediction> out(data.samples.size());
    // Batch all detected samples through one eval-mode forward.
    std::vector<std::size_t> detected;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        if (data.samples[i].detections.joints[js.root].visible) detected.push_back(i);
    }
    if (detected.empty()) return out;
    nn::RealMatrix x(static_cast<Eigen::Index>(detected.size()),
                     static_cast<Eigen::Index>(net.feature_layout().size));
    for (std::size_t k = 0; k < detected.size(); ++k) {
        const PoseSample& s = data.samples[detected[k]];
        Pose2D norm = s.detections;
        for (Joint2D& j : norm.joints) {
            if (j.visible) j.pt = normalize_2d(s.cam, j.pt);
        }
        x.row(static_cast<Eigen::Index>(k)) =
            build_features(norm, s.log_depth, js, net.config().use_depth_features);
    }
    const nn::RealMatrix pred = net.forward(x, nn::Mode::Eval);
    for (std::size_t k = 0; k < detected.size(); ++k) {
        Prediction& p = out[detected[k]];
        p.status = Prediction::Status::Ok;
        p.pose = decode_prediction(pred.row(static_cast<Eigen::Index>(k)), js,
                                   net.config().log_hip_z);
    }
    return out;
}

std::vector<Prediction> predict_baseline(PoseNet& rel_net, const Dataset& data) {
    const JointSet& js = data.joints;
    std::vector<Prediction> out(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const PoseSample& s = data.samples[i];
        if (!s.detections.joints[js.root].visible) continue;
        Pose2D norm = s.detections;
        for (Joint2D& j : norm.joints) {
            if (j.visible) j.pt = normalize_2d(s.cam, j.pt);
        }
        const BaselinePrediction bp = baseline_predict(norm, rel_net, s.log_depth);
        Prediction& p = out[i];
        p.pose = bp.pose;
        p.status = bp.degenerate ? Prediction::Status::Unbounded : Prediction::Status::Ok;
    }
    return out;
}

EvalDetail evaluate_predictions(const std::vector<Prediction>& preds, const Dataset& data,
                                const EvalOptions& opts) {
    if (preds.size() != data.samples.size()) {
        throw std::invalid_argument("evaluate_predictions: prediction count mismatch");
    }
    if (data.empty()) {
        throw std::invalid_argument("evaluate_predictions: empty dataset");
    }
    const JointSet& js = data.joints;
    EvalDetail detail;
    EvalReport& rep = detail.report;
    rep.n_total_gt = data.samples.size();

    std::size_t detected = 0;
    std::vector<double> a_errors;
    std::map<int, SceneStats> scenes;
    double a_sum = 0.0, r_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Prediction& p = preds[i];
        if (p.status == Prediction::Status::Undetected) continue;
        ++detected;
        if (p.status == Prediction::Status::Unbounded) {
            rep.n_unbounded += 1;
            continue;
        }
        const PoseSample& s = data.samples[i];
        PerPoseError e;
        e.scene_id = s.scene_id;
        e.person_id = s.person_id;
        e.a_err = pose_a_mpjpe(p.pose, s.gt);
        e.r_err = pose_r_mpjpe(p.pose, s.gt, js);
        e.root_err = joint_distance(p.pose.joints[js.root], s.gt.joints[js.root]);
        detail.poses.push_back(e);
        a_errors.push_back(e.a_err);
        a_sum += e.a_err;
        r_sum += e.r_err;
        SceneStats& ss = scenes[s.scene_id];
        ss.scene_id = s.scene_id;
        ss.n_poses += 1;
        ss.a_mpjpe += e.a_err;
        ss.r_mpjpe += e.r_err;
    }
    rep.n_poses = detail.poses.size();
    rep.detection_rate = detection_rate(detected, rep.n_total_gt);
    if (rep.n_poses > 0) {
        rep.a_mpjpe = a_sum / static_cast<double>(rep.n_poses);
        rep.r_mpjpe = r_sum / static_cast<double>(rep.n_poses);
    } else {
        rep.a_mpjpe = std::numeric_limits<double>::quiet_NaN();
        rep.r_mpjpe = std::numeric_limits<double>::quiet_NaN();
    }
    rep.histogram = error_histogram(a_errors, opts.hist_bin_width_mm, opts.hist_cap_mm);
    for (auto& [id, ss] : scenes) {
        ss.a_mpjpe /= static_cast<double>(ss.n_poses);
        ss.r_mpjpe /= static_cast<double>(ss.n_poses);
        rep.per_scene.push_back(ss);
    }
    return detail;
}

// ------------------------------------------------------------- ablation

double median(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median: empty input");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct LadderStep {
    const char* label;
    nn::LossKind loss;
    bool depth, logz, aug, stage2;
};

constexpr LadderStep kLadder[] = {
    {"l2_loss", nn::LossKind::L2, false, false, false, false},
    {"l1_loss", nn::LossKind::L1, false, false, false, false},
    {"depth_features", nn::LossKind::L1, true, false, false, false},
    {"log_hip_z", nn::LossKind::L1, true, true, false, false},
    {"augmentation", nn::LossKind::L1, true, true, true, false},
    {"stage2", nn::LossKind::L1, true, true, true, true},
};

PoseNetConfig ladder_config(const PoseNetConfig& base, const LadderStep& step) {
    PoseNetConfig cfg = base;
    cfg.loss = step.loss;
    cfg.use_depth_features = step.depth;
    cfg.log_hip_z = step.logz;
    cfg.augmentation = step.aug;
    cfg.relative_only = false;
    return cfg;
}

// Minimal fixed-size task pool; tasks are indexed and claimed atomically.
void run_parallel(std::size_t n_tasks, int max_parallel, const std::function<void(std::size_t)>& fn) {
    const int workers = std::max(1, std::min<int>(max_parallel, static_cast<int>(n_tasks)));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_tasks) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

std::vector<AblationRow> run_ablation(const Dataset& train, const Dataset& test,
                                      const PoseNetConfig& base, const AblationOptions& opts) {
    if (train.empty() || test.empty()) {
        throw std::invalid_argument("run_ablation: datasets must be non-empty");
    }
    if (opts.seeds.empty()) {
        throw std::invalid_argument("run_ablation: need at least one seed");
    }
    constexpr std::size_t n_rows = std::size(kLadder);
    const std::size_t n_seeds = opts.seeds.size();

    struct Cell {
        double a_mpjpe = 0.0;
        std::string error;
        std::optional<PoseNet> net;  // kept for the stage-2 row
    };
    std::vector<Cell> cells(n_rows * n_seeds);

    // Rows 0..4 are independent stage-1 trainings; the stage-2 row reuses
    // the previous row's networks, so it runs afterwards.
    run_parallel((n_rows - 1) * n_seeds, opts.max_parallel, [&](std::size_t task) {
        const std::size_t row = task / n_seeds;
        const std::size_t si = task % n_seeds;
        Cell& cell = cells[row * n_seeds + si];
        try {
            const PoseNetConfig cfg = ladder_config(base, kLadder[row]);
            Stage1Result r = train_stage1(cfg, train, opts.seeds[si]);
            auto preds = predict_direct(r.net, test);
            cell.a_mpjpe = evaluate_predictions(preds, test, opts.eval).report.a_mpjpe;
            if (row == n_rows - 2) cell.net.emplace(std::move(r.net));
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });

    run_parallel(n_seeds, opts.max_parallel, [&](std::size_t si) {
        Cell& prev = cells[(n_rows - 2) * n_seeds + si];
        Cell& cell = cells[(n_rows - 1) * n_seeds + si];
        try {
            if (!prev.net) {
                throw std::runtime_error("stage-2 row skipped: previous row failed (" +
                                         prev.error + ")");
            }
            PoseNet net = std::move(*prev.net);
            prev.net.reset();
            train_stage2(net, train, opts.seeds[si], opts.stage2);
            auto preds = predict_direct(net, test);
            cell.a_mpjpe = evaluate_predictions(preds, test, opts.eval).report.a_mpjpe;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });

    std::vector<AblationRow> rows;
    rows.reserve(n_rows);
    for (std::size_t row = 0; row < n_rows; ++row) {
        AblationRow r;
        r.label = kLadder[row].label;
        r.loss = kLadder[row].loss;
        r.depth_features = kLadder[row].depth;
        r.log_hip_z = kLadder[row].logz;
        r.augmentation = kLadder[row].aug;
        r.stage2 = kLadder[row].stage2;
        std::vector<double> values;
        for (std::size_t si = 0; si < n_seeds; ++si) {
            const Cell& cell = cells[row * n_seeds + si];
            if (!cell.error.empty()) {
                r.error = cell.error;
            } else {
                values.push_back(cell.a_mpjpe);
            }
        }
        if (!values.empty() && r.error.empty()) {
            r.a_mpjpe_mm = median(values);
        } else if (values.empty()) {
            r.a_mpjpe_mm = std::numeric_limits<double>::quiet_NaN();
        } else {
            r.a_mpjpe_mm = median(values);  // partial result alongside the recorded error
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// ----------------------------------------------- corruption comparison

namespace {

// Systematic relative-pose distortions, cycled over the test poses.
void distort_relative(std::vector<Point3>& rel, const JointSet& js, int kind) {
    switch (kind % 5) {
        case 0:  // full mirror
            for (Point3& p : rel) p.x = -p.x;
            break;
        case 1:  // shrunken skeleton
            for (Point3& p : rel) p = 0.7 * p;
            break;
        case 2:  // enlarged skeleton
            for (Point3& p : rel) p = 1.4 * p;
            break;
        case 3: {  // left arm point-reflected through the shoulder
            // relative[] skips the root; map joint index -> entry index.
            auto rel_index = [&](const char* name) {
                const std::size_t j = js.index_of(name);
                return j < js.root ? j : j - 1;
            };
            const Point3 anchor = rel[rel_index("l_shoulder")];
            for (const char* name : {"l_elbow", "l_wrist"}) {
                Point3& p = rel[rel_index(name)];
                p = 2.0 * anchor - p;
            }
            break;
        }
        case 4: {  // rotation about the vertical axis
            const double a = 25.0 * 3.14159265358979323846 / 180.0;
            const double c = std::cos(a), s = std::sin(a);
            for (Point3& p : rel) {
                const double x = p.x * c + p.z * s;
                const double z = -p.x * s + p.z * c;
                p.x = x;
                p.z = z;
            }
            break;
        }
    }
}

}  // namespace

CorruptionSuiteResult run_corruption_suite(PoseNet& direct_net, PoseNet& rel_net,
                                           const Dataset& test, double tail_threshold_mm) {
    const JointSet& js = test.joints;
    const auto direct_preds = predict_direct(direct_net, test);
    CorruptionSuiteResult res;
    std::vector<double> direct_root_errs, baseline_root_errs;
    std::size_t direct_tail = 0, baseline_tail = 0;

    int kind = 0;
    for (std::size_t i = 0; i < test.samples.size(); ++i) {
        const PoseSample& s = test.samples[i];
        if (direct_preds[i].status != Prediction::Status::Ok) continue;

        // Shared distorted relative pose: the relative network's output.
        Pose2D norm = s.detections;
        for (Joint2D& j : norm.joints) {
            if (j.visible) j.pt = normalize_2d(s.cam, j.pt);
        }
        nn::RealMatrix row(1, static_cast<Eigen::Index>(rel_net.feature_layout().size));
        row.row(0) = build_features(norm, s.log_depth, js, rel_net.config().use_depth_features);
        const nn::RealMatrix rel_out = rel_net.forward(row, nn::Mode::Eval);
        std::vector<Point3> rel(js.size() - 1);
        for (std::size_t k = 0; k + 1 < js.size(); ++k) {
            rel[k] = {rel_out(0, static_cast<Eigen::Index>(3 * k)),
                      rel_out(0, static_cast<Eigen::Index>(3 * k + 1)),
                      rel_out(0, static_cast<Eigen::Index>(3 * k + 2))};
        }
        distort_relative(rel, js, kind++);

        const Point3 gt_root = s.gt.joints[js.root];

        // Direct route: its own root, the shared distorted relative pose.
        const Point3 direct_root = direct_preds[i].pose.joints[js.root];
        RootSplit<Point3> split;
        split.relative = rel;
        split.root = direct_root;
        const Pose3D direct_pose = assemble_absolute(split, js);
        const double direct_root_err = joint_distance(direct_root, gt_root);
        direct_root_errs.push_back(direct_root_err);
        if (pose_a_mpjpe(direct_pose, s.gt) > tail_threshold_mm) ++direct_tail;

        // Baseline route: translation re-solved from the distorted pose.
        std::vector<Point2> p2d;
        std::vector<Point3> p3d;
        p2d.push_back(norm.joints[js.root].pt);
        p3d.push_back({0.0, 0.0, 0.0});
        std::size_t k = 0;
        for (std::size_t j = 0; j < js.size(); ++j) {
            if (j == js.root) continue;
            if (norm.joints[j].visible) {
                p2d.push_back(norm.joints[j].pt);
                p3d.push_back(rel[k]);
            }
            ++k;
        }
        bool unbounded = p2d.size() < 2;
        if (!unbounded) {
            try {
                const TranslationSolution sol = solve_weak_perspective_translation(p2d, p3d, 1.0);
                split.root = sol.t;
                const Pose3D baseline_pose = assemble_absolute(split, js);
                baseline_root_errs.push_back(joint_distance(sol.t, gt_root));
                if (pose_a_mpjpe(baseline_pose, s.gt) > tail_threshold_mm) ++baseline_tail;
            } catch (const DegenerateConfiguration&) {
                unbounded = true;
            }
        }
        if (unbounded) {
            res.baseline_unbounded += 1;
            baseline_root_errs.push_back(std::numeric_limits<double>::infinity());
            ++baseline_tail;
        }
        res.n_poses += 1;
    }
    if (res.n_poses == 0) {
        throw std::invalid_argument("run_corruption_suite: no evaluable poses");
    }
    res.direct_median_root_err = median(direct_root_errs);
    res.baseline_median_root_err = median(baseline_root_errs);
    res.direct_tail_frac = static_cast<double>(direct_tail) / static_cast<double>(res.n_poses);
    res.baseline_tail_frac = static_cast<double>(baseline_tail) / static_cast<double>(res.n_poses);
    return res;
}

// ------------------------------------------------------------ emission

namespace {

nlohmann::json histogram_json(const Histogram& h) {
    nlohmann::json bins = nlohmann::json::array();
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const bool overflow = b + 1 == h.counts.size();
        nlohmann::json bin;
        bin["low"] = static_cast<double>(b) * h.bin_width;
        if (overflow) {
            bin["high"] = nullptr;
        } else {
            bin["high"] = static_cast<double>(b + 1) * h.bin_width;
        }
        bin["count"] = h.counts[b];
        bins.push_back(bin);
    }
    return bins;
}

std::ofstream open_out(const std::string& path, const char* what) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error(std::string(what) + ": cannot open '" + path + "'");
    }
    return os;
}

}  // namespace

void write_eval_report_csv(const EvalReport& report, const std::string& path) {
    auto os = open_out(path, "write_eval_report_csv");
    os << "a_mpjpe_mm,r_mpjpe_mm,detection_rate,n_poses,n_total_gt,n_unbounded\n";
    os << report.a_mpjpe << ',' << report.r_mpjpe << ',' << report.detection_rate << ','
       << report.n_poses << ',' << report.n_total_gt << ',' << report.n_unbounded << '\n';
}

void write_eval_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json j;
    j["a_mpjpe_mm"] = report.a_mpjpe;
    j["r_mpjpe_mm"] = report.r_mpjpe;
    j["detection_rate"] = report.detection_rate;
    j["n_poses"] = report.n_poses;
    j["n_total_gt"] = report.n_total_gt;
    j["n_unbounded"] = report.n_unbounded;
    j["histogram"] = histogram_json(report.histogram);
    nlohmann::json scenes = nlohmann::json::array();
    for (const SceneStats& s : report.per_scene) {
        scenes.push_back({{"scene_id", s.scene_id},
                          {"n_poses", s.n_poses},
                          {"a_mpjpe_mm", s.a_mpjpe},
                          {"r_mpjpe_mm", s.r_mpjpe}});
    }
    j["per_scene"] = scenes;
    auto os = open_out(path, "write_eval_report_json");
    os << j.dump(2) << '\n';
}

void write_histogram_csv(const Histogram& hist, const std::string& path) {
    auto os = open_out(path, "write_histogram_csv");
    os << "bin_low,bin_high,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        const bool overflow = b + 1 == hist.counts.size();
        os << static_cast<double>(b) * hist.bin_width << ',';
        if (overflow) {
            os << "inf";
        } else {
            os << static_cast<double>(b + 1) * hist.bin_width;
        }
        os << ',' << hist.counts[b] << '\n';
    }
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    auto os = open_out(path, "write_ablation_csv");
    os << "label,a_mpjpe_mm,loss,depth_features,log_hip_z,augmentation,stage2,error\n";
    for (const AblationRow& r : rows) {
        os << r.label << ',' << r.a_mpjpe_mm << ',' << (r.loss == nn::LossKind::L1 ? "l1" : "l2")
           << ',' << (r.depth_features ? 1 : 0) << ',' << (r.log_hip_z ? 1 : 0) << ','
           << (r.augmentation ? 1 : 0) << ',' << (r.stage2 ? 1 : 0) << ',' << r.error << '\n';
    }
}

}  // namespace abspose
