// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/runconfig.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace abspose {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"scene.people", "4"},
        {"scene.depth_min_mm", "2000"},
        {"scene.depth_max_mm", "8000"},
        {"scene.log_uniform_depth", "false"},
        {"scene.fx", "1100"},
        {"scene.fy", "1100"},
        {"scene.cx", "512"},
        {"scene.cy", "384"},
        {"scene.image_width", "1024"},
        {"scene.image_height", "768"},
        {"scene.frustum_margin_frac", "0.08"},
        {"scene.min_separation_mm", "300"},
        {"scene.bone_jitter_frac", "0.10"},
        {"scene.angle_jitter", "0.08"},
        {"scene.asymmetric_bone_jitter", "false"},
        {"noise.sigma_2d_px", "2.0"},
        {"noise.joint_miss_prob", "0.05"},
        {"noise.hip_miss_prob", "0.03"},
        {"noise.confidence_falloff_px", "5.0"},
        {"noise.sigma_log_depth", "0.1"},
        {"noise.depth_substitution_prob", "0.0"},
        {"noise.background_depth_mm", "10000"},
        {"noise.depth_scale", "1.0"},
        {"noise.depth_offset", "0.0"},
        {"noise.depth_scale_spread", "0.0"},
        {"noise.depth_offset_spread", "0.0"},
        {"posenet.num_blocks", "2"},
        {"posenet.hidden_width", "256"},
        {"posenet.dropout", "0.5"},
        {"posenet.use_depth_features", "true"},
        {"posenet.log_hip_z", "true"},
        {"posenet.loss", "l1"},
        {"posenet.epochs", "100"},
        {"posenet.batch_size", "256"},
        {"posenet.base_lr", "0.001"},
        {"posenet.lr_decay", "0.96"},
        {"posenet.lr_decay_period", "4"},
        {"posenet.augmentation", "false"},
        {"posenet.relative_only", "false"},
        {"augment.max_crop_frac", "0.15"},
        {"augment.zoom_min", "0.85"},
        {"augment.zoom_max", "1.25"},
        {"stage2.enabled", "false"},
        {"stage2.epochs", "5"},
        {"stage2.batch_size", "30"},
        {"stage2.lr", "1e-05"},
        {"train.val_fraction", "0.1"},
        {"eval.hist_bin_width_mm", "50"},
        {"eval.hist_cap_mm", "1000"},
        {"ablate.seeds", "3"},
        {"ablate.seed_base", "1000"},
        {"ablate.contaminate_frac", "0.0"},
        {"ablate.contaminate_mm", "2000"},
        {"compare.seed", "1"},
    };
    return defaults;
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw std::invalid_argument("unknown configuration key '" + key + "'");
    }
    it->second = value;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key");
        }
        try {
            set(key, value);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw std::invalid_argument("unknown configuration key '" + key + "'");
    }
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::runtime_error("configuration key '" + key + "' has non-numeric value '" + v +
                                 "'");
    }
}

long RunConfig::get_long(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        const long l = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return l;
    } catch (const std::exception&) {
        throw std::runtime_error("configuration key '" + key + "' has non-integer value '" + v +
                                 "'");
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::runtime_error("configuration key '" + key + "' has non-boolean value '" + v + "'");
}

std::string RunConfig::echo() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) {
        os << k << " = " << v << "\n";
    }
    return os.str();
}

std::uint64_t RunConfig::fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string RunConfig::hash() const {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(echo())));
    return buf;
}

SceneConfig RunConfig::scene_config() const {
    SceneConfig cfg;
    cfg.people = static_cast<int>(get_long("scene.people"));
    cfg.depth_min_mm = get_double("scene.depth_min_mm");
    cfg.depth_max_mm = get_double("scene.depth_max_mm");
    cfg.log_uniform_depth = get_bool("scene.log_uniform_depth");
    cfg.cam = {get_double("scene.fx"), get_double("scene.fy"), get_double("scene.cx"),
               get_double("scene.cy")};
    cfg.image_width = static_cast<int>(get_long("scene.image_width"));
    cfg.image_height = static_cast<int>(get_long("scene.image_height"));
    cfg.frustum_margin_frac = get_double("scene.frustum_margin_frac");
    cfg.min_separation_mm = get_double("scene.min_separation_mm");
    cfg.bone_jitter_frac = get_double("scene.bone_jitter_frac");
    cfg.angle_jitter = get_double("scene.angle_jitter");
    cfg.asymmetric_bone_jitter = get_bool("scene.asymmetric_bone_jitter");
    cfg.noise.sigma_2d_px = get_double("noise.sigma_2d_px");
    cfg.noise.joint_miss_prob = get_double("noise.joint_miss_prob");
    cfg.noise.hip_miss_prob = get_double("noise.hip_miss_prob");
    cfg.noise.confidence_falloff_px = get_double("noise.confidence_falloff_px");
    cfg.noise.sigma_log_depth = get_double("noise.sigma_log_depth");
    cfg.noise.depth_substitution_prob = get_double("noise.depth_substitution_prob");
    cfg.noise.background_depth_mm = get_double("noise.background_depth_mm");
    cfg.noise.depth_scale = get_double("noise.depth_scale");
    cfg.noise.depth_offset = get_double("noise.depth_offset");
    cfg.noise.depth_scale_spread = get_double("noise.depth_scale_spread");
    cfg.noise.depth_offset_spread = get_double("noise.depth_offset_spread");
    return cfg;
}

PoseNetConfig RunConfig::posenet_config() const {
    PoseNetConfig cfg;
    cfg.num_blocks = static_cast<int>(get_long("posenet.num_blocks"));
    cfg.hidden_width = static_cast<int>(get_long("posenet.hidden_width"));
    cfg.dropout = get_double("posenet.dropout");
    cfg.use_depth_features = get_bool("posenet.use_depth_features");
    cfg.log_hip_z = get_bool("posenet.log_hip_z");
    const std::string& loss = get("posenet.loss");
    if (loss == "l1") {
        cfg.loss = nn::LossKind::L1;
    } else if (loss == "l2") {
        cfg.loss = nn::LossKind::L2;
    } else {
        throw std::runtime_error("posenet.loss must be 'l1' or 'l2', got '" + loss + "'");
    }
    cfg.epochs = get_long("posenet.epochs");
    cfg.batch_size = get_long("posenet.batch_size");
    cfg.base_lr = get_double("posenet.base_lr");
    cfg.lr_decay = get_double("posenet.lr_decay");
    cfg.lr_decay_period = get_long("posenet.lr_decay_period");
    cfg.augmentation = get_bool("posenet.augmentation");
    cfg.relative_only = get_bool("posenet.relative_only");
    cfg.augment_params.max_crop_frac = get_double("augment.max_crop_frac");
    cfg.augment_params.zoom_min = get_double("augment.zoom_min");
    cfg.augment_params.zoom_max = get_double("augment.zoom_max");
    return cfg;
}

Stage2Options RunConfig::stage2_options() const {
    Stage2Options opts;
    opts.epochs = get_long("stage2.epochs");
    opts.batch_size = get_long("stage2.batch_size");
    opts.lr = get_double("stage2.lr");
    return opts;
}

bool RunConfig::stage2_enabled() const { return get_bool("stage2.enabled"); }

EvalOptions RunConfig::eval_options() const {
    EvalOptions opts;
    opts.hist_bin_width_mm = get_double("eval.hist_bin_width_mm");
    opts.hist_cap_mm = get_double("eval.hist_cap_mm");
    return opts;
}

}  // namespace abspose
