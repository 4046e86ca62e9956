// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "abspose/runner.hpp"

using namespace abspose;
namespace fs = std::filesystem;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path temp_dir(const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

// Independent FNV-1a 64 recomputation.
std::uint64_t fnv_oracle(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h = (h ^ c) * 1099511628211ULL;
    }
    return h;
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("defaults cover every documented key") {
    RunConfig cfg;
    CHECK(cfg.get_long("posenet.hidden_width") == 256);
    CHECK(cfg.get_long("posenet.epochs") == 100);
    CHECK(cfg.get_long("posenet.batch_size") == 256);
    CHECK(cfg.get_double("posenet.base_lr") == 0.001);
    CHECK(cfg.get_double("noise.hip_miss_prob") == 0.03);
    CHECK(cfg.get_long("stage2.epochs") == 5);
    CHECK(cfg.get_long("stage2.batch_size") == 30);
    CHECK(cfg.get_double("stage2.lr") == 1e-5);
    CHECK(cfg.get_double("eval.hist_bin_width_mm") == 50.0);
    CHECK(cfg.posenet_config().dropout == 0.5);
    CHECK(cfg.scene_config().people == 4);
}

TEST_CASE("unknown keys are rejected with the file line") {
    RunConfig cfg;
    CHECK_THROWS_AS(cfg.set("no.such.key", "1"), std::invalid_argument);

    const fs::path p = fs::temp_directory_path() / "bad_config.cfg";
    {
        std::ofstream os(p);
        os << "# comment\n";
        os << "posenet.epochs = 5\n";
        os << "bogus.key = 1\n";
    }
    CHECK_THROWS_WITH_AS(cfg.load_file(p.string()), doctest::Contains(":3:"), std::runtime_error);

    {
        std::ofstream os(p);
        os << "posenet.epochs 5\n";
    }
    CHECK_THROWS_WITH_AS(cfg.load_file(p.string()), doctest::Contains(":1:"), std::runtime_error);
    fs::remove(p);
}

TEST_CASE("file values load and overrides win") {
    const fs::path p = fs::temp_directory_path() / "good_config.cfg";
    {
        std::ofstream os(p);
        os << "posenet.epochs = 7   # inline comment\n";
        os << "posenet.loss = l2\n";
    }
    const RunConfig cfg = runner::load_config(p.string(), {"posenet.loss=l1"});
    CHECK(cfg.get_long("posenet.epochs") == 7);
    CHECK(cfg.get("posenet.loss") == "l1");
    CHECK_THROWS_AS(runner::load_config(p.string(), {"notakey"}), std::invalid_argument);
    fs::remove(p);
}

TEST_CASE("typed getters validate their values") {
    RunConfig cfg;
    cfg.set("posenet.epochs", "abc");
    CHECK_THROWS_AS(cfg.get_long("posenet.epochs"), std::runtime_error);
    cfg.set("posenet.augmentation", "maybe");
    CHECK_THROWS_AS(cfg.get_bool("posenet.augmentation"), std::runtime_error);
    cfg.set("posenet.loss", "huber");
    CHECK_THROWS_AS(cfg.posenet_config(), std::runtime_error);
}

TEST_CASE("config hash is the fnv-1a of the echo") {
    RunConfig cfg;
    cfg.set("posenet.epochs", "12");
    char expect[19];
    std::snprintf(expect, sizeof(expect), "%016llx",
                  static_cast<unsigned long long>(fnv_oracle(cfg.echo())));
    CHECK(cfg.hash() == expect);
}

TEST_CASE("gen-data is reproducible and records a recomputable hash") {
    const fs::path out1 = temp_dir("abspose_gen1");
    const fs::path out2 = temp_dir("abspose_gen2");
    RunConfig cfg;
    runner::gen_data(cfg, out1.string(), 5, 42);
    runner::gen_data(cfg, out2.string(), 5, 42);
    CHECK(file_bytes((out1 / "dataset.csv").string()) ==
          file_bytes((out2 / "dataset.csv").string()));
    CHECK(file_bytes((out1 / "dataset_cameras.csv").string()) ==
          file_bytes((out2 / "dataset_cameras.csv").string()));

    std::ifstream ms(out1 / "manifest.json");
    const nlohmann::json manifest = nlohmann::json::parse(ms);
    CHECK(manifest["command"] == "gen-data");
    CHECK(manifest["seed"] == 42);
    char expect[19];
    std::snprintf(expect, sizeof(expect), "%016llx",
                  static_cast<unsigned long long>(fnv_oracle(file_bytes((out1 / "config.echo").string()))));
    CHECK(manifest["config_hash"] == expect);

    CHECK_THROWS_AS(runner::gen_data(cfg, out1.string(), 0, 1), std::invalid_argument);
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("train/eval round trip with deterministic artifacts") {
    const fs::path data = temp_dir("abspose_data");
    const fs::path run1 = temp_dir("abspose_run1");
    const fs::path run2 = temp_dir("abspose_run2");
    RunConfig cfg;
    runner::gen_data(cfg, data.string(), 30, 7);

    cfg.set("posenet.hidden_width", "16");
    cfg.set("posenet.epochs", "3");
    cfg.set("posenet.batch_size", "64");
    runner::train(cfg, data.string(), run1.string(), 5);
    runner::train(cfg, data.string(), run2.string(), 5);
    CHECK(file_bytes((run1 / "checkpoints" / "final.ckpt").string()) ==
          file_bytes((run2 / "checkpoints" / "final.ckpt").string()));
    CHECK(file_bytes((run1 / "logs" / "train_log.csv").string()) ==
          file_bytes((run2 / "logs" / "train_log.csv").string()));

    {
        std::ifstream is(run1 / "logs" / "train_log.csv");
        std::string line;
        std::getline(is, line);
        CHECK(line == "epoch,lr,mean_train_loss,val_a_mpjpe,val_r_mpjpe");
        std::size_t rows = 0;
        while (std::getline(is, line)) ++rows;
        CHECK(rows == 3);
    }

    const fs::path eval_out = temp_dir("abspose_eval");
    const EvalReport rep = runner::eval_checkpoint(
        cfg, (run1 / "checkpoints" / "final.ckpt").string(), data.string(), eval_out.string());
    CHECK(std::isfinite(rep.a_mpjpe));
    CHECK(rep.n_total_gt == 120);
    // Accounting: metrics poses = dataset poses minus the undetected ones.
    std::size_t detected = 0;
    const Dataset loaded = read_dataset_csv((data / "dataset").string(), JointSet::default14());
    for (const auto& s : loaded.samples) {
        if (s.detections.joints[loaded.joints.root].visible) ++detected;
    }
    CHECK(rep.n_poses == detected);
    CHECK(fs::exists(eval_out / "reports" / "eval_report.json"));
    CHECK(fs::exists(eval_out / "reports" / "histogram.csv"));

    for (const fs::path& p : {data, run1, run2, eval_out}) fs::remove_all(p);
}

TEST_CASE("stage-2 without depth features is a config conflict") {
    const fs::path data = temp_dir("abspose_data_s2");
    RunConfig cfg;
    runner::gen_data(cfg, data.string(), 5, 7);
    cfg.set("stage2.enabled", "true");
    cfg.set("posenet.use_depth_features", "false");
    const fs::path run = temp_dir("abspose_run_s2");
    CHECK_THROWS_WITH_AS(runner::train(cfg, data.string(), run.string(), 1),
                         doctest::Contains("config conflict"), std::invalid_argument);
    fs::remove_all(data);
    fs::remove_all(run);
}

TEST_CASE("corrupt checkpoints are rejected on load") {
    const fs::path data = temp_dir("abspose_data_ck");
    RunConfig cfg;
    runner::gen_data(cfg, data.string(), 5, 7);
    const fs::path bad = fs::temp_directory_path() / "bad.ckpt";
    {
        std::ofstream os(bad, std::ios::binary);
        os << "garbage bytes, not a checkpoint";
    }
    const fs::path out = temp_dir("abspose_eval_bad");
    CHECK_THROWS_AS(runner::eval_checkpoint(cfg, bad.string(), data.string(), out.string()),
                    std::runtime_error);
    fs::remove(bad);
    fs::remove_all(data);
    fs::remove_all(out);
}

#ifdef ABSPOSE_CLI_PATH
TEST_CASE("cli exits zero on success and one with a diagnostic on errors") {
    const fs::path out = temp_dir("abspose_cli_out");
    const std::string cli = ABSPOSE_CLI_PATH;
    const std::string ok_cmd = cli + " gen-data --out " + out.string() +
                               " --scenes 2 --seed 3 > /dev/null 2>&1";
    CHECK(std::system(ok_cmd.c_str()) == 0);

    const fs::path errfile = fs::temp_directory_path() / "cli_err.txt";
    const std::string bad_cmd = cli + " eval --checkpoint /nonexistent.ckpt --data " +
                                out.string() + " --out " + out.string() + "_e 2> " +
                                errfile.string() + " > /dev/null";
    CHECK(std::system(bad_cmd.c_str()) != 0);
    std::ifstream es(errfile);
    std::string line;
    std::getline(es, line);
    CHECK(line.rfind("error: ", 0) == 0);
    std::size_t lines = 1;
    while (std::getline(es, line)) ++lines;
    CHECK(lines == 1);  // one-line diagnostic

    const std::string usage_cmd = cli + " gen-data --out " + out.string() +
                                  "_u --scenes 0 > /dev/null 2>&1";
    CHECK(std::system(usage_cmd.c_str()) != 0);

    fs::remove(errfile);
    fs::remove_all(out);
    fs::remove_all(fs::path(out.string() + "_e"));
    fs::remove_all(fs::path(out.string() + "_u"));
}
#endif

}  // TEST_SUITE
