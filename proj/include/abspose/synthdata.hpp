// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abspose/dataset.hpp"
#include "abspose/rng.hpp"

namespace abspose {

/// Simulated detector / depth-readout noise. Probabilities are per joint
/// and independent; the hip miss rate governs whole-pose detection.
struct NoiseModel {
    double sigma_2d_px = 2.0;             // isotropic Gaussian detection noise
    double joint_miss_prob = 0.05;        // non-root joints
    double hip_miss_prob = 0.03;          // root joint; drives the detection rate
    double confidence_falloff_px = 5.0;   // confidence = exp(-|noise| / falloff)
    double sigma_log_depth = 0.1;         // Gaussian noise on ln(z)
    double depth_substitution_prob = 0.0; // readout lands on another surface
    double background_depth_mm = 10000.0; // substituted surface when nobody occludes
    double depth_scale = 1.0;             // affine miscalibration of the readout
    double depth_offset = 0.0;
    // Per-scene affine spread: monocular depth estimates carry an unknown
    // per-image scale/shift, so readouts are ordinal within a scene but
    // only weakly absolute across scenes.
    double depth_scale_spread = 0.0;      // uniform half-width around depth_scale
    double depth_offset_spread = 0.0;     // uniform half-width around depth_offset

    void validate() const;
};

struct CropZoomParams {
    double max_crop_frac = 0.15;  // per border, fraction of the image side
    double zoom_min = 0.85;
    double zoom_max = 1.25;
};

struct SceneConfig {
    int people = 4;  // 1..4
    double depth_min_mm = 2000.0;
    double depth_max_mm = 8000.0;
    bool log_uniform_depth = false;  // sample root depth log-uniformly (long-tailed in z)
    CameraIntrinsics cam{1100.0, 1100.0, 512.0, 384.0};
    int image_width = 1024;
    int image_height = 768;
    double frustum_margin_frac = 0.08;  // root projections keep this border
    double min_separation_mm = 300.0;
    double bone_jitter_frac = 0.10;     // +-10% bone length
    double angle_jitter = 0.08;         // direction perturbation scale
    bool asymmetric_bone_jitter = false;  // default: left/right lengths match
    NoiseModel noise;

    void validate() const;
};

/// One generated scene: ground truth plus the simulated front-end outputs.
struct SyntheticScene {
    int scene_id = 0;
    std::uint64_t seed = 0;
    CameraIntrinsics cam;
    int image_width = 0;
    int image_height = 0;
    std::vector<Pose3D> truth;                    // absolute camera space, mm
    std::vector<Pose2D> detections;               // pixel frame
    std::vector<std::vector<double>> log_depth;   // per person, per joint
};

/// Bone of the kinematic tree with its admissible length range.
struct BoneSpec {
    const char* parent;
    const char* child;
    double base_mm;
    double min_mm;
    double max_mm;
    bool mirrored;  // has a left/right partner sharing the jitter draw
};

const std::vector<BoneSpec>& bone_specs();
const std::vector<std::string>& pose_template_names();  // stand, sit, walk, reach

/// Root-relative skeleton from a random template with per-bone length and
/// joint-angle jitter plus a random whole-body yaw. The root entry is
/// always (0,0,0).
Pose3D sample_skeleton(const SceneConfig& cfg, Rng& rng);

/// Places root-relative skeletons at frustum positions inside the depth
/// range, enforcing the minimum root separation by rejection.
SyntheticScene place_people(const std::vector<Pose3D>& skeletons, const SceneConfig& cfg, Rng& rng);

/// Simulates the 2D detector: projection plus Gaussian pixel noise, missed
/// joints, and a confidence decaying with the noise magnitude.
std::vector<Pose2D> render_detections(const SyntheticScene& scene, const NoiseModel& noise,
                                      Rng& rng);

/// Simulates the depth readout: affine-miscalibrated ln(z) with log-noise;
/// with the substitution probability the readout lands on the nearest
/// occluding person's torso depth or the background plane.
std::vector<std::vector<double>> simulate_depth_readout(const SyntheticScene& scene,
                                                        const NoiseModel& noise, Rng& rng);

/// Random crop plus zoom with consistent intrinsics adjustment: pixels and
/// K transform together, so normalized coordinates (and hence the 3D
/// targets) are unchanged.
void augment_crop_zoom(SyntheticScene& scene, const CropZoomParams& params, Rng& rng);

/// Same transform applied to a single dataset sample.
void augment_sample(PoseSample& sample, const CropZoomParams& params, Rng& rng);

/// Deterministic scene generation; scene i uses sub-seed mix(seed, i).
std::vector<SyntheticScene> generate_scenes(const SceneConfig& cfg, int n_scenes,
                                            std::uint64_t seed);

Dataset scenes_to_dataset(const std::vector<SyntheticScene>& scenes, const JointSet& js);

/// Dataset files: `<stem>.csv` with one joint per row
/// (scene_id, person_id, joint_name, u_px, v_px, confidence, visible,
/// logdepth_readout, X_mm, Y_mm, Z_mm) and `<stem>_cameras.csv`
/// (scene_id, fx, fy, cx, cy, width, height). Values use fixed 6-digit
/// decimal formatting so identical data yields identical bytes.
void write_dataset_csv(const std::vector<SyntheticScene>& scenes, const JointSet& js,
                       const std::string& stem);
Dataset read_dataset_csv(const std::string& stem, const JointSet& js);

/// generate_scenes + write_dataset_csv.
void generate_dataset(const SceneConfig& cfg, int n_scenes, std::uint64_t seed,
                      const std::string& stem);

/// Replaces the ground-truth targets of a fraction of samples with heavily
/// offset ones; harness utility for loss-robustness experiments.
void contaminate_targets(Dataset& data, double fraction, double magnitude_mm, std::uint64_t seed);

}  // namespace abspose
