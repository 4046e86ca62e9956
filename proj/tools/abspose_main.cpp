// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "abspose/runner.hpp"

namespace {

/// --out falls back to $ABSPOSE_OUT_ROOT/<command> when omitted.
std::string resolve_out(const std::string& out, const std::string& command) {
    if (!out.empty()) return out;
    const char* root = std::getenv("ABSPOSE_OUT_ROOT");
    if (root == nullptr || root[0] == '\0') {
        throw std::invalid_argument("--out is required (or set ABSPOSE_OUT_ROOT)");
    }
    return std::string(root) + "/" + command;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Absolute multi-person 3D pose estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_path, checkpoint_path, train_path, test_path;
    std::vector<std::string> overrides;
    long scenes = 1000;
    std::uint64_t seed = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value configuration file");
        cmd->add_option("--set", overrides, "extra key=value overrides (repeatable)");
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic multi-person dataset");
    add_common(gen);
    gen->add_option("--scenes", scenes, "number of scenes");
    gen->add_option("--seed", seed, "master seed");

    CLI::App* train = app.add_subcommand("train", "Train the 3D PoseNet on a dataset");
    add_common(train);
    train->add_option("--data", data_path, "dataset directory or stem")->required();
    train->add_option("--seed", seed, "master seed");

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint against a dataset");
    add_common(eval);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("--data", data_path, "dataset directory or stem")->required();

    CLI::App* ablate = app.add_subcommand("ablate", "Run the component-ladder ablation");
    add_common(ablate);
    ablate->add_option("--train", train_path, "training dataset")->required();
    ablate->add_option("--test", test_path, "test dataset")->required();

    CLI::App* compare =
        app.add_subcommand("compare-baseline", "Two-step baseline vs direct absolute prediction");
    add_common(compare);
    compare->add_option("--train", train_path, "training dataset")->required();
    compare->add_option("--test", test_path, "test dataset")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const abspose::RunConfig cfg = abspose::runner::load_config(config_path, overrides);
        if (gen->parsed()) {
            abspose::runner::gen_data(cfg, resolve_out(out_dir, "gen-data"),
                                      static_cast<int>(scenes), seed);
        } else if (train->parsed()) {
            abspose::runner::train(cfg, data_path, resolve_out(out_dir, "train"), seed);
        } else if (eval->parsed()) {
            const auto report = abspose::runner::eval_checkpoint(
                cfg, checkpoint_path, data_path, resolve_out(out_dir, "eval"));
            std::printf("a_mpjpe_mm=%.3f r_mpjpe_mm=%.3f detection_rate=%.4f n_poses=%zu\n",
                        report.a_mpjpe, report.r_mpjpe, report.detection_rate, report.n_poses);
        } else if (ablate->parsed()) {
            const auto rows = abspose::runner::ablate(cfg, train_path, test_path,
                                                      resolve_out(out_dir, "ablate"));
            for (const auto& row : rows) {
                std::printf("%-16s a_mpjpe_mm=%.3f%s%s\n", row.label.c_str(), row.a_mpjpe_mm,
                            row.error.empty() ? "" : " error=", row.error.c_str());
            }
        } else if (compare->parsed()) {
            const auto rep = abspose::runner::compare_baseline(
                cfg, train_path, test_path, resolve_out(out_dir, "compare-baseline"));
            std::printf("baseline a_mpjpe_mm=%.3f r_mpjpe_mm=%.3f detection_rate=%.4f\n",
                        rep.baseline.a_mpjpe, rep.baseline.r_mpjpe, rep.baseline.detection_rate);
            std::printf("direct   a_mpjpe_mm=%.3f r_mpjpe_mm=%.3f detection_rate=%.4f\n",
                        rep.direct.a_mpjpe, rep.direct.r_mpjpe, rep.direct.detection_rate);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
