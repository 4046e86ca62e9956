// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abspose/eval.hpp"
#include "abspose/runconfig.hpp"

namespace abspose::runner {

/// Defaults, then the optional config file, then `key=value` overrides.
RunConfig load_config(const std::string& config_path, const std::vector<std::string>& overrides);

/// Every command materializes <out>/config.echo, <out>/manifest.json and
/// the subdirectories checkpoints/, reports/, logs/. All output bytes are
/// reproducible from (flags, config, seed); wall-clock time appears only
/// in the manifest.
void gen_data(const RunConfig& cfg, const std::string& out_dir, int scenes, std::uint64_t seed);

void train(const RunConfig& cfg, const std::string& data, const std::string& out_dir,
           std::uint64_t seed);

EvalReport eval_checkpoint(const RunConfig& cfg, const std::string& checkpoint,
                           const std::string& data, const std::string& out_dir);

std::vector<AblationRow> ablate(const RunConfig& cfg, const std::string& train_data,
                                const std::string& test_data, const std::string& out_dir);

struct CompareReport {
    EvalReport baseline;
    EvalReport direct;
};

CompareReport compare_baseline(const RunConfig& cfg, const std::string& train_data,
                               const std::string& test_data, const std::string& out_dir);

/// Accepts either a dataset stem, a CSV path or the directory produced by
/// gen-data (which uses the stem <dir>/dataset).
std::string resolve_dataset_stem(const std::string& path);

}  // namespace abspose::runner
