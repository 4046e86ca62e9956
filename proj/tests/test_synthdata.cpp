// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "abspose/synthdata.hpp"

using namespace abspose;

namespace {

const JointSet& kJoints = JointSet::default14();

double bone_length(const Pose3D& pose, const BoneSpec& bone) {
    const Point3 d = pose.joints[kJoints.index_of(bone.child)] -
                     pose.joints[kJoints.index_of(bone.parent)];
    return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string temp_stem(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("sampled skeletons keep the root at the origin") {
    SceneConfig cfg;
    Rng rng(50);
    for (int i = 0; i < 100; ++i) {
        const Pose3D p = sample_skeleton(cfg, rng);
        CHECK(p.joints[kJoints.root].x == 0.0);
        CHECK(p.joints[kJoints.root].y == 0.0);
        CHECK(p.joints[kJoints.root].z == 0.0);
    }
}

TEST_CASE("symmetric jitter keeps left/right femurs equal") {
    SceneConfig cfg;  // asymmetric_bone_jitter defaults to false
    Rng rng(51);
    const auto& bones = bone_specs();
    const BoneSpec* l_femur = nullptr;
    const BoneSpec* r_femur = nullptr;
    for (const auto& b : bones) {
        if (std::string(b.child) == "l_knee") l_femur = &b;
        if (std::string(b.child) == "r_knee") r_femur = &b;
    }
    REQUIRE(l_femur != nullptr);
    REQUIRE(r_femur != nullptr);
    for (int i = 0; i < 50; ++i) {
        const Pose3D p = sample_skeleton(cfg, rng);
        CHECK(bone_length(p, *l_femur) == doctest::Approx(bone_length(p, *r_femur)).epsilon(1e-9));
    }

    cfg.asymmetric_bone_jitter = true;
    bool differs = false;
    for (int i = 0; i < 20 && !differs; ++i) {
        const Pose3D p = sample_skeleton(cfg, rng);
        differs = std::abs(bone_length(p, *l_femur) - bone_length(p, *r_femur)) > 1e-6;
    }
    CHECK(differs);
}

TEST_CASE("all sampled bone lengths stay inside their ranges") {
    SceneConfig cfg;
    Rng rng(52);
    for (int i = 0; i < 1000; ++i) {
        const Pose3D p = sample_skeleton(cfg, rng);
        for (const BoneSpec& bone : bone_specs()) {
            const double len = bone_length(p, bone);
            CHECK(len >= bone.min_mm);
            CHECK(len <= bone.max_mm);
        }
    }
}

TEST_CASE("template library carries the documented poses") {
    const auto& names = pose_template_names();
    CHECK(names.size() == 4);
    CHECK(std::set<std::string>(names.begin(), names.end()) ==
          std::set<std::string>{"stand", "sit", "walk", "reach"});
}

TEST_CASE("placed people satisfy the frustum and separation constraints") {
    SceneConfig cfg;
    const auto scenes = generate_scenes(cfg, 200, 60);
    for (const auto& scene : scenes) {
        REQUIRE(scene.truth.size() == 4);
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            const Point3 root = scene.truth[p].joints[kJoints.root];
            CHECK(root.z >= cfg.depth_min_mm);
            CHECK(root.z <= cfg.depth_max_mm);
            const Point2 proj = project(scene.cam, root);
            CHECK(proj.u >= 0.0);
            CHECK(proj.u <= cfg.image_width);
            CHECK(proj.v >= 0.0);
            CHECK(proj.v <= cfg.image_height);
            for (std::size_t q = p + 1; q < scene.truth.size(); ++q) {
                const Point3 d = root - scene.truth[q].joints[kJoints.root];
                CHECK(std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z) >= cfg.min_separation_mm);
            }
        }
    }
}

TEST_CASE("impossible placement reports a configuration error") {
    SceneConfig cfg;
    cfg.min_separation_mm = 1e9;
    Rng rng(61);
    std::vector<Pose3D> skels = {sample_skeleton(cfg, rng), sample_skeleton(cfg, rng)};
    CHECK_THROWS_AS(place_people(skels, cfg, rng), std::runtime_error);
    CHECK_THROWS_AS(place_people({}, cfg, rng), std::invalid_argument);
}

TEST_CASE("noise-free detections are exact projections with full confidence") {
    SceneConfig cfg;
    cfg.noise.sigma_2d_px = 0.0;
    cfg.noise.joint_miss_prob = 0.0;
    cfg.noise.hip_miss_prob = 0.0;
    const auto scenes = generate_scenes(cfg, 5, 62);
    for (const auto& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                const Joint2D& det = scene.detections[p].joints[j];
                REQUIRE(det.visible);
                const Point2 exact = project(scene.cam, scene.truth[p].joints[j]);
                CHECK(det.pt.u == doctest::Approx(exact.u).epsilon(1e-12));
                CHECK(det.pt.v == doctest::Approx(exact.v).epsilon(1e-12));
                CHECK(det.confidence == doctest::Approx(1.0));
            }
        }
    }
}

TEST_CASE("a certain hip miss hides every pose") {
    SceneConfig cfg;
    cfg.noise.hip_miss_prob = 1.0;
    const auto scenes = generate_scenes(cfg, 5, 63);
    for (const auto& scene : scenes) {
        const auto [kept, discarded] = filter_detected(scene.detections, kJoints);
        CHECK(kept.empty());
        CHECK(discarded == scene.detections.size());
    }
}

TEST_CASE("detection noise magnitude matches its parameter") {
    SceneConfig cfg;
    cfg.noise.sigma_2d_px = 2.0;
    cfg.noise.joint_miss_prob = 0.0;
    cfg.noise.hip_miss_prob = 0.0;
    const auto scenes = generate_scenes(cfg, 1786, 64);  // ~1e5 joints
    double sq_sum = 0.0;
    std::size_t n = 0;
    for (const auto& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                const Point2 exact = project(scene.cam, scene.truth[p].joints[j]);
                const Joint2D& det = scene.detections[p].joints[j];
                const double du = det.pt.u - exact.u, dv = det.pt.v - exact.v;
                sq_sum += du * du + dv * dv;
                ++n;
            }
        }
    }
    const double mean_sq = sq_sum / static_cast<double>(n);  // expect 2 sigma^2 = 8
    const double sigma_mean = 8.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean_sq - 8.0) < 3.0 * sigma_mean);

    // Confidence decreases with the noise magnitude.
    const auto& scene = scenes.front();
    for (std::size_t p = 0; p < scene.truth.size(); ++p) {
        for (std::size_t j = 0; j < kJoints.size(); ++j) {
            const Point2 exact = project(scene.cam, scene.truth[p].joints[j]);
            const Joint2D& det = scene.detections[p].joints[j];
            const double mag = std::hypot(det.pt.u - exact.u, det.pt.v - exact.v);
            CHECK(det.confidence ==
                  doctest::Approx(std::exp(-mag / cfg.noise.confidence_falloff_px)));
        }
    }
}

TEST_CASE("noise-free depth readouts equal the true log depth") {
    SceneConfig cfg;
    cfg.noise.sigma_log_depth = 0.0;
    cfg.noise.depth_substitution_prob = 0.0;
    const auto scenes = generate_scenes(cfg, 5, 65);
    for (const auto& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                CHECK(scene.log_depth[p][j] ==
                      doctest::Approx(std::log(scene.truth[p].joints[j].z)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("certain substitution in a single-person scene reads the background") {
    SceneConfig cfg;
    cfg.people = 1;
    cfg.noise.sigma_log_depth = 0.0;
    cfg.noise.depth_substitution_prob = 1.0;
    cfg.noise.background_depth_mm = 10000.0;
    const auto scenes = generate_scenes(cfg, 5, 66);
    for (const auto& scene : scenes) {
        for (double v : scene.log_depth[0]) {
            CHECK(v == doctest::Approx(std::log(10000.0)));
        }
    }
}

TEST_CASE("substituted readouts come from an occluder in front or the background") {
    SceneConfig cfg;
    cfg.noise.sigma_log_depth = 0.0;
    cfg.noise.depth_substitution_prob = 1.0;
    const auto scenes = generate_scenes(cfg, 10, 67);
    std::size_t occluded = 0;
    for (const auto& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                const double depth = std::exp(scene.log_depth[p][j]);
                const bool background =
                    std::abs(depth - cfg.noise.background_depth_mm) < 1e-6;
                const bool in_front = depth <= scene.truth[p].joints[j].z + 1e-6;
                CHECK((background || in_front));
                if (in_front && !background) ++occluded;
            }
        }
    }
    CHECK(occluded > 0);  // with 4 people per scene somebody is always in front
}

TEST_CASE("depth readout log-noise is calibrated") {
    SceneConfig cfg;
    cfg.noise.sigma_log_depth = 0.1;
    cfg.noise.depth_substitution_prob = 0.0;
    const auto scenes = generate_scenes(cfg, 1786, 68);
    double sq = 0.0;
    std::size_t n = 0;
    for (const auto& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                const double r = scene.log_depth[p][j] - std::log(scene.truth[p].joints[j].z);
                sq += r * r;
                ++n;
            }
        }
    }
    const double var = sq / static_cast<double>(n);
    const double sigma_var = 0.01 * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(var - 0.01) < 3.0 * sigma_var);
}

TEST_CASE("affine depth miscalibration is applied to the readout") {
    SceneConfig cfg;
    cfg.noise.sigma_log_depth = 0.0;
    cfg.noise.depth_scale = 0.85;
    cfg.noise.depth_offset = 0.4;
    const auto scenes = generate_scenes(cfg, 3, 69);
    for (const auto& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                CHECK(scene.log_depth[p][j] ==
                      doctest::Approx(0.85 * std::log(scene.truth[p].joints[j].z) + 0.4));
            }
        }
    }
}

TEST_CASE("identity crop/zoom leaves the scene untouched") {
    SceneConfig cfg;
    auto scenes = generate_scenes(cfg, 1, 70);
    SyntheticScene& scene = scenes[0];
    const SyntheticScene before = scene;
    CropZoomParams params;
    params.max_crop_frac = 0.0;
    params.zoom_min = 1.0;
    params.zoom_max = 1.0;
    Rng rng(71);
    augment_crop_zoom(scene, params, rng);
    CHECK(scene.cam.fx == before.cam.fx);
    CHECK(scene.cam.cx == before.cam.cx);
    CHECK(scene.image_width == before.image_width);
    for (std::size_t p = 0; p < scene.detections.size(); ++p) {
        for (std::size_t j = 0; j < kJoints.size(); ++j) {
            CHECK(scene.detections[p].joints[j].pt.u == before.detections[p].joints[j].pt.u);
        }
    }
}

TEST_CASE("crop/zoom preserves normalized coordinates and 3d truth") {
    SceneConfig cfg;
    auto scenes = generate_scenes(cfg, 20, 72);
    Rng rng(73);
    const CropZoomParams params;
    for (SyntheticScene& scene : scenes) {
        const SyntheticScene before = scene;
        augment_crop_zoom(scene, params, rng);
        for (std::size_t p = 0; p < scene.detections.size(); ++p) {
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                const Joint2D& a = before.detections[p].joints[j];
                const Joint2D& b = scene.detections[p].joints[j];
                CHECK(a.visible == b.visible);
                if (!a.visible) continue;
                const Point2 na = normalize_2d(before.cam, a.pt);
                const Point2 nb = normalize_2d(scene.cam, b.pt);
                CHECK(std::abs(na.u - nb.u) < 1e-10);
                CHECK(std::abs(na.v - nb.v) < 1e-10);
            }
            for (std::size_t j = 0; j < kJoints.size(); ++j) {
                CHECK(scene.truth[p].joints[j].x == before.truth[p].joints[j].x);
                CHECK(scene.truth[p].joints[j].z == before.truth[p].joints[j].z);
            }
        }
    }
}

TEST_CASE("degenerate crop windows are rejected") {
    SceneConfig cfg;
    auto scenes = generate_scenes(cfg, 1, 74);
    CropZoomParams params;
    params.zoom_min = 1e-4;
    params.zoom_max = 1e-4;
    Rng rng(75);
    CHECK_THROWS_AS(augment_crop_zoom(scenes[0], params, rng), std::invalid_argument);
}

TEST_CASE("dataset generation is byte-deterministic") {
    SceneConfig cfg;
    const std::string a = temp_stem("ds_a"), b = temp_stem("ds_b");
    generate_dataset(cfg, 20, 1234, a);
    generate_dataset(cfg, 20, 1234, b);
    CHECK(file_bytes(a + ".csv") == file_bytes(b + ".csv"));
    CHECK(file_bytes(a + "_cameras.csv") == file_bytes(b + "_cameras.csv"));

    generate_dataset(cfg, 20, 1235, b);
    CHECK(file_bytes(a + ".csv") != file_bytes(b + ".csv"));
    for (const std::string& stem : {a, b}) {
        std::remove((stem + ".csv").c_str());
        std::remove((stem + "_cameras.csv").c_str());
    }
}

TEST_CASE("record counts follow people-per-scene and the miss rate") {
    SceneConfig cfg;
    const auto scenes = generate_scenes(cfg, 1000, 76);
    const Dataset data = scenes_to_dataset(scenes, kJoints);
    CHECK(data.samples.size() == 4000);
    std::size_t detected = 0;
    for (const auto& s : data.samples) {
        if (s.detections.joints[kJoints.root].visible) ++detected;
    }
    const double frac = 1.0 - static_cast<double>(detected) / 4000.0;
    const double sigma = std::sqrt(0.03 * 0.97 / 4000.0);
    CHECK(std::abs(frac - cfg.noise.hip_miss_prob) < 3.0 * sigma);
}

TEST_CASE("disjoint master seeds give disjoint scene seeds") {
    SceneConfig cfg;
    const auto train = generate_scenes(cfg, 50, 100);
    const auto test = generate_scenes(cfg, 50, 200);
    std::set<std::uint64_t> train_seeds, test_seeds;
    for (const auto& s : train) train_seeds.insert(s.seed);
    for (const auto& s : test) test_seeds.insert(s.seed);
    for (std::uint64_t s : test_seeds) CHECK(train_seeds.count(s) == 0);
}

TEST_CASE("dataset csv round trip is lossless at the stored precision") {
    SceneConfig cfg;
    const auto scenes = generate_scenes(cfg, 10, 77);
    const std::string stem = temp_stem("ds_roundtrip");
    write_dataset_csv(scenes, kJoints, stem);
    const Dataset loaded = read_dataset_csv(stem, kJoints);
    CHECK(loaded.samples.size() == 40);

    // Re-serializing the loaded dataset reproduces the file byte for byte.
    std::vector<SyntheticScene> rebuilt(10);
    for (int i = 0; i < 10; ++i) {
        rebuilt[i].scene_id = i;
        rebuilt[i].cam = scenes[i].cam;
        rebuilt[i].image_width = scenes[i].image_width;
        rebuilt[i].image_height = scenes[i].image_height;
    }
    for (const PoseSample& s : loaded.samples) {
        auto& scene = rebuilt[s.scene_id];
        scene.truth.push_back(s.gt);
        scene.detections.push_back(s.detections);
        scene.log_depth.push_back(s.log_depth);
    }
    const std::string stem2 = temp_stem("ds_roundtrip2");
    write_dataset_csv(rebuilt, kJoints, stem2);
    CHECK(file_bytes(stem + ".csv") == file_bytes(stem2 + ".csv"));
    for (const std::string& s : {stem, stem2}) {
        std::remove((s + ".csv").c_str());
        std::remove((s + "_cameras.csv").c_str());
    }
}

TEST_CASE("target contamination touches the configured fraction") {
    SceneConfig cfg;
    Dataset data = scenes_to_dataset(generate_scenes(cfg, 500, 78), kJoints);
    const Dataset before = data;
    contaminate_targets(data, 0.1, 2000.0, 5);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        if (data.samples[i].gt.joints[0].x != before.samples[i].gt.joints[0].x) ++changed;
    }
    const double frac = static_cast<double>(changed) / static_cast<double>(data.samples.size());
    const double sigma = std::sqrt(0.1 * 0.9 / static_cast<double>(data.samples.size()));
    CHECK(std::abs(frac - 0.1) < 3.0 * sigma);

    Dataset untouched = before;
    contaminate_targets(untouched, 0.0, 2000.0, 5);
    CHECK(untouched.samples[0].gt.joints[0].x == before.samples[0].gt.joints[0].x);
}

TEST_CASE("configuration validation rejects nonsense") {
    SceneConfig cfg;
    cfg.people = 5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SceneConfig{};
    cfg.depth_min_mm = 9000.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    NoiseModel noise;
    noise.hip_miss_prob = 1.5;
    CHECK_THROWS_AS(noise.validate(), std::invalid_argument);
    noise = NoiseModel{};
    noise.sigma_2d_px = -1.0;
    CHECK_THROWS_AS(noise.validate(), std::invalid_argument);
}

}  // TEST_SUITE
