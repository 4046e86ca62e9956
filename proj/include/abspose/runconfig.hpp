// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "abspose/eval.hpp"
#include "abspose/pipeline.hpp"
#include "abspose/synthdata.hpp"

namespace abspose {

/// Flat `key = value` configuration with `#` comments and dotted key
/// names. Every key has a default; unknown keys are rejected (with the
/// file line for file input). Values set later win, so the merge order is
/// defaults < file < command-line overrides.
class RunConfig {
  public:
    RunConfig();  // defaults

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Canonical serialization: sorted `key = value` lines.
    std::string echo() const;
    /// FNV-1a 64 over the echo bytes, as a fixed-width hex string.
    std::string hash() const;

    SceneConfig scene_config() const;
    PoseNetConfig posenet_config() const;
    Stage2Options stage2_options() const;
    bool stage2_enabled() const;
    EvalOptions eval_options() const;

    static std::uint64_t fnv1a(const std::string& bytes);

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace abspose
