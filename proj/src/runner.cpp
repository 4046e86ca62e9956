// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/runner.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace abspose::runner {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void prepare_out_dir(const std::string& out_dir, const RunConfig& cfg) {
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "checkpoints");
    fs::create_directories(fs::path(out_dir) / "reports");
    fs::create_directories(fs::path(out_dir) / "logs");
    std::ofstream echo(fs::path(out_dir) / "config.echo", std::ios::binary);
    if (!echo) {
        throw std::runtime_error("cannot write config echo under '" + out_dir + "'");
    }
    echo << cfg.echo();
}

void write_manifest(const std::string& out_dir, const RunConfig& cfg, const std::string& command,
                    std::uint64_t seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = cfg.hash();
    j["created_utc"] = utc_now();
    j["seed"] = seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    std::ofstream os(fs::path(out_dir) / "manifest.json", std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write manifest under '" + out_dir + "'");
    }
    os << j.dump(2) << '\n';
}

Dataset load_dataset(const std::string& path) {
    return read_dataset_csv(resolve_dataset_stem(path), JointSet::default14());
}

/// Deterministic validation split on sample indices.
void split_train_val(const Dataset& all, double val_fraction, std::uint64_t seed, Dataset& train,
                     Dataset& val) {
    train.joints = all.joints;
    val.joints = all.joints;
    std::vector<std::size_t> idx(all.samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(mix_seed(seed, 99));
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    }
    const auto n_val = static_cast<std::size_t>(val_fraction * static_cast<double>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        (k < n_val ? val : train).samples.push_back(all.samples[idx[k]]);
    }
}

}  // namespace

std::string resolve_dataset_stem(const std::string& path) {
    if (fs::is_directory(path)) {
        return (fs::path(path) / "dataset").string();
    }
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        return path.substr(0, path.size() - 4);
    }
    return path;
}

RunConfig load_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) {
        cfg.load_file(config_path);
    }
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("override '" + kv + "' is not of the form key=value");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void gen_data(const RunConfig& cfg, const std::string& out_dir, int scenes, std::uint64_t seed) {
    if (scenes < 1) {
        throw std::invalid_argument("gen-data: --scenes must be at least 1");
    }
    prepare_out_dir(out_dir, cfg);
    const std::string stem = (fs::path(out_dir) / "dataset").string();
    generate_dataset(cfg.scene_config(), scenes, seed, stem);
    write_manifest(out_dir, cfg, "gen-data", seed, {},
                   {"dataset.csv", "dataset_cameras.csv", "config.echo"});
}

void train(const RunConfig& cfg, const std::string& data, const std::string& out_dir,
           std::uint64_t seed) {
    const PoseNetConfig net_cfg = cfg.posenet_config();
    const bool stage2 = cfg.stage2_enabled();
    if (stage2 && !net_cfg.use_depth_features) {
        throw std::invalid_argument(
            "config conflict: stage2.enabled requires posenet.use_depth_features");
    }
    prepare_out_dir(out_dir, cfg);
    const Dataset all = load_dataset(data);
    Dataset train_set, val_set;
    split_train_val(all, cfg.get_double("train.val_fraction"), seed, train_set, val_set);
    if (train_set.empty()) {
        throw std::runtime_error("train: no training samples after the validation split");
    }

    std::ofstream log(fs::path(out_dir) / "logs" / "train_log.csv", std::ios::binary);
    if (!log) {
        throw std::runtime_error("train: cannot open the training log");
    }
    log << "epoch,lr,mean_train_loss,val_a_mpjpe,val_r_mpjpe\n";
    const EvalOptions eval_opts = cfg.eval_options();
    const auto log_epoch = [&](long epoch, double lr, double mean_loss, PoseNet& net) {
        double va = std::numeric_limits<double>::quiet_NaN();
        double vr = va;
        if (!val_set.empty()) {
            const auto preds = net.config().relative_only ? predict_baseline(net, val_set)
                                                          : predict_direct(net, val_set);
            const EvalReport rep = evaluate_predictions(preds, val_set, eval_opts).report;
            va = rep.a_mpjpe;
            vr = rep.r_mpjpe;
        }
        log << epoch << ',' << lr << ',' << mean_loss << ',' << va << ',' << vr << '\n';
    };

    Stage1Result result = train_stage1(net_cfg, train_set, seed, log_epoch);
    const std::string stage1_path = (fs::path(out_dir) / "checkpoints" / "stage1.ckpt").string();
    save_posenet(result.net, stage1_path);
    std::vector<std::string> outputs = {"checkpoints/stage1.ckpt", "logs/train_log.csv",
                                        "config.echo"};
    if (stage2) {
        train_stage2(result.net, train_set, seed, cfg.stage2_options());
    }
    save_posenet(result.net, (fs::path(out_dir) / "checkpoints" / "final.ckpt").string());
    outputs.push_back("checkpoints/final.ckpt");
    write_manifest(out_dir, cfg, "train", seed, {data}, outputs);
}

EvalReport eval_checkpoint(const RunConfig& cfg, const std::string& checkpoint,
                           const std::string& data, const std::string& out_dir) {
    prepare_out_dir(out_dir, cfg);
    const Dataset test = load_dataset(data);
    PoseNet net = load_posenet(checkpoint, test.joints);
    const auto preds = net.config().relative_only ? predict_baseline(net, test)
                                                  : predict_direct(net, test);
    const EvalDetail detail = evaluate_predictions(preds, test, cfg.eval_options());
    const fs::path reports = fs::path(out_dir) / "reports";
    write_eval_report_csv(detail.report, (reports / "eval_report.csv").string());
    write_eval_report_json(detail.report, (reports / "eval_report.json").string());
    write_histogram_csv(detail.report.histogram, (reports / "histogram.csv").string());
    write_manifest(out_dir, cfg, "eval", 0, {checkpoint, data},
                   {"reports/eval_report.csv", "reports/eval_report.json",
                    "reports/histogram.csv", "config.echo"});
    return detail.report;
}

std::vector<AblationRow> ablate(const RunConfig& cfg, const std::string& train_data,
                                const std::string& test_data, const std::string& out_dir) {
    prepare_out_dir(out_dir, cfg);
    Dataset train_set = load_dataset(train_data);
    const Dataset test_set = load_dataset(test_data);
    const double contaminate = cfg.get_double("ablate.contaminate_frac");
    const auto seed_base = static_cast<std::uint64_t>(cfg.get_long("ablate.seed_base"));
    if (contaminate > 0.0) {
        contaminate_targets(train_set, contaminate, cfg.get_double("ablate.contaminate_mm"),
                            seed_base);
    }
    AblationOptions opts;
    opts.seeds.clear();
    const long n_seeds = cfg.get_long("ablate.seeds");
    for (long i = 0; i < n_seeds; ++i) opts.seeds.push_back(seed_base + static_cast<std::uint64_t>(i));
    opts.eval = cfg.eval_options();
    opts.stage2 = cfg.stage2_options();
    const auto rows = run_ablation(train_set, test_set, cfg.posenet_config(), opts);
    write_ablation_csv(rows, (fs::path(out_dir) / "reports" / "ablation.csv").string());
    write_manifest(out_dir, cfg, "ablate", seed_base, {train_data, test_data},
                   {"reports/ablation.csv", "config.echo"});
    return rows;
}

CompareReport compare_baseline(const RunConfig& cfg, const std::string& train_data,
                               const std::string& test_data, const std::string& out_dir) {
    prepare_out_dir(out_dir, cfg);
    const Dataset train_set = load_dataset(train_data);
    const Dataset test_set = load_dataset(test_data);
    const auto seed = static_cast<std::uint64_t>(cfg.get_long("compare.seed"));

    PoseNetConfig direct_cfg = cfg.posenet_config();
    direct_cfg.relative_only = false;
    PoseNetConfig rel_cfg = direct_cfg;
    rel_cfg.relative_only = true;
    rel_cfg.use_depth_features = false;  // the two-step baseline lifts from 2D alone

    Stage1Result direct = train_stage1(direct_cfg, train_set, seed);
    Stage1Result rel = train_stage1(rel_cfg, train_set, seed);

    const EvalOptions eval_opts = cfg.eval_options();
    const EvalDetail d_direct =
        evaluate_predictions(predict_direct(direct.net, test_set), test_set, eval_opts);
    const EvalDetail d_base =
        evaluate_predictions(predict_baseline(rel.net, test_set), test_set, eval_opts);

    const fs::path reports = fs::path(out_dir) / "reports";
    {
        std::ofstream os(reports / "compare.csv", std::ios::binary);
        if (!os) {
            throw std::runtime_error("compare-baseline: cannot write the report");
        }
        os << "method,a_mpjpe_mm,r_mpjpe_mm,detection_rate\n";
        os << "baseline," << d_base.report.a_mpjpe << ',' << d_base.report.r_mpjpe << ','
           << d_base.report.detection_rate << '\n';
        os << "direct," << d_direct.report.a_mpjpe << ',' << d_direct.report.r_mpjpe << ','
           << d_direct.report.detection_rate << '\n';
    }
    write_histogram_csv(d_base.report.histogram, (reports / "histogram_baseline.csv").string());
    write_histogram_csv(d_direct.report.histogram, (reports / "histogram_direct.csv").string());
    write_eval_report_json(d_base.report, (reports / "baseline_report.json").string());
    write_eval_report_json(d_direct.report, (reports / "direct_report.json").string());
    write_manifest(out_dir, cfg, "compare-baseline", seed, {train_data, test_data},
                   {"reports/compare.csv", "reports/histogram_baseline.csv",
                    "reports/histogram_direct.csv", "reports/baseline_report.json",
                    "reports/direct_report.json", "config.echo"});
    return {d_base.report, d_direct.report};
}

}  // namespace abspose::runner
