// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include "abspose/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace abspose {

namespace {

struct Vec3 {
    double x, y, z;
};

Vec3 normalized(const Vec3& v) {
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    return {v.x / n, v.y / n, v.z / n};
}

// Bone order doubles as the rng draw order; left bones precede their right
// partner so symmetric length jitter can reuse the draw.
const std::vector<BoneSpec>& specs() {
    static const std::vector<BoneSpec> b = {
        {"pelvis", "neck", 500.0, 400.0, 600.0, false},
        {"pelvis", "l_hip", 100.0, 80.0, 130.0, true},
        {"pelvis", "r_hip", 100.0, 80.0, 130.0, true},
        {"l_hip", "l_knee", 425.0, 350.0, 500.0, true},
        {"r_hip", "r_knee", 425.0, 350.0, 500.0, true},
        {"l_knee", "l_ankle", 425.0, 350.0, 500.0, true},
        {"r_knee", "r_ankle", 425.0, 350.0, 500.0, true},
        {"neck", "l_shoulder", 180.0, 140.0, 220.0, true},
        {"neck", "r_shoulder", 180.0, 140.0, 220.0, true},
        {"l_shoulder", "l_elbow", 300.0, 240.0, 360.0, true},
        {"r_shoulder", "r_elbow", 300.0, 240.0, 360.0, true},
        {"l_elbow", "l_wrist", 270.0, 210.0, 330.0, true},
        {"r_elbow", "r_wrist", 270.0, 210.0, 330.0, true},
    };
    return b;
}

// Unit bone directions per template, in spec order. Camera frame: x right,
// y down, z away from the camera; a person facing the camera has -z as
// their forward.
using TemplateDirs = std::array<Vec3, 13>;

const std::vector<std::pair<std::string, TemplateDirs>>& pose_templates() {
    static const std::vector<std::pair<std::string, TemplateDirs>> t = {
        {"stand",
         TemplateDirs{{{0.0, -1.0, 0.0},   // torso
                       {1.0, 0.0, 0.0},    // l hip
                       {-1.0, 0.0, 0.0},   // r hip
                       {0.05, 1.0, 0.0},   // l femur
                       {-0.05, 1.0, 0.0},  // r femur
                       {0.0, 1.0, 0.05},   // l shin
                       {0.0, 1.0, 0.05},   // r shin
                       {1.0, 0.1, 0.0},    // l clavicle
                       {-1.0, 0.1, 0.0},   // r clavicle
                       {0.15, 1.0, 0.1},   // l upper arm
                       {-0.15, 1.0, 0.1},  // r upper arm
                       {0.05, 1.0, 0.15},  // l forearm
                       {-0.05, 1.0, 0.15}}}},
        {"sit",
         TemplateDirs{{{0.0, -1.0, 0.12},
                       {1.0, 0.0, 0.0},
                       {-1.0, 0.0, 0.0},
                       {0.1, 0.15, -1.0},
                       {-0.1, 0.15, -1.0},
                       {0.0, 1.0, -0.05},
                       {0.0, 1.0, -0.05},
                       {1.0, 0.1, 0.0},
                       {-1.0, 0.1, 0.0},
                       {0.2, 1.0, -0.2},
                       {-0.2, 1.0, -0.2},
                       {0.1, 0.5, -0.85},
                       {-0.1, 0.5, -0.85}}}},
        {"walk",
         TemplateDirs{{{0.0, -1.0, 0.05},
                       {1.0, 0.0, 0.0},
                       {-1.0, 0.0, 0.0},
                       {0.0, 0.93, -0.37},
                       {-0.05, 0.93, 0.37},
                       {0.0, 1.0, 0.12},
                       {0.0, 0.95, -0.3},
                       {1.0, 0.1, 0.0},
                       {-1.0, 0.1, 0.0},
                       {0.1, 0.95, 0.3},
                       {-0.1, 0.95, -0.3},
                       {0.05, 0.8, 0.45},
                       {-0.05, 0.8, -0.5}}}},
        {"reach",
         TemplateDirs{{{0.0, -1.0, 0.0},
                       {1.0, 0.0, 0.0},
                       {-1.0, 0.0, 0.0},
                       {0.05, 1.0, 0.0},
                       {-0.05, 1.0, 0.0},
                       {0.0, 1.0, 0.05},
                       {0.0, 1.0, 0.05},
                       {1.0, 0.15, 0.0},
                       {-1.0, 0.15, 0.0},
                       {0.5, -0.85, -0.1},
                       {-0.5, -0.85, -0.1},
                       {0.15, -1.0, -0.05},
                       {-0.15, -1.0, -0.05}}}},
    };
    return t;
}

std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void NoiseModel::validate() const {
    auto prob = [](double p, const char* name) {
        if (p < 0.0 || p > 1.0) {
            throw std::invalid_argument(std::string("NoiseModel: ") + name + " must be in [0,1]");
        }
    };
    prob(joint_miss_prob, "joint_miss_prob");
    prob(hip_miss_prob, "hip_miss_prob");
    prob(depth_substitution_prob, "depth_substitution_prob");
    if (sigma_2d_px < 0.0 || sigma_log_depth < 0.0) {
        throw std::invalid_argument("NoiseModel: sigmas must be >= 0");
    }
    if (background_depth_mm <= 0.0) {
        throw std::invalid_argument("NoiseModel: background depth must be positive");
    }
    if (confidence_falloff_px <= 0.0) {
        throw std::invalid_argument("NoiseModel: confidence falloff must be positive");
    }
}

void SceneConfig::validate() const {
    if (people < 1 || people > 4) {
        throw std::invalid_argument("SceneConfig: people must be in 1..4");
    }
    if (!(depth_min_mm > 0.0) || !(depth_min_mm < depth_max_mm)) {
        throw std::invalid_argument("SceneConfig: depth range must be positive with min < max");
    }
    if (!cam.valid()) {
        throw std::invalid_argument("SceneConfig: invalid camera intrinsics");
    }
    if (image_width < 2 || image_height < 2) {
        throw std::invalid_argument("SceneConfig: image too small");
    }
    if (bone_jitter_frac < 0.0 || bone_jitter_frac > 0.4) {
        throw std::invalid_argument("SceneConfig: bone jitter out of range");
    }
    noise.validate();
}

const std::vector<BoneSpec>& bone_specs() { return specs(); }

const std::vector<std::string>& pose_template_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, dirs] : pose_templates()) n.push_back(name);
        return n;
    }();
    return names;
}

Pose3D sample_skeleton(const SceneConfig& cfg, Rng& rng) {
    const JointSet& js = JointSet::default14();
    const auto& bones = specs();
    const auto& templates = pose_templates();
    const auto& dirs = templates[rng.uniform_index(templates.size())].second;

    // Length draws; a right bone reuses its left partner's draw unless
    // asymmetric jitter is on.
    std::vector<double> lengths(bones.size());
    double pending_pair_jitter = 0.0;
    for (std::size_t b = 0; b < bones.size(); ++b) {
        const bool is_right_partner = bones[b].mirrored && bones[b].child[0] == 'r';
        double jitter;
        if (is_right_partner && !cfg.asymmetric_bone_jitter) {
            jitter = pending_pair_jitter;
        } else {
            jitter = rng.uniform(-cfg.bone_jitter_frac, cfg.bone_jitter_frac);
            if (bones[b].mirrored && bones[b].child[0] == 'l') pending_pair_jitter = jitter;
        }
        lengths[b] = bones[b].base_mm * (1.0 + jitter);
    }

    Pose3D pose;
    pose.joints.assign(js.size(), Point3{});
    pose.detected = true;
    for (std::size_t b = 0; b < bones.size(); ++b) {
        Vec3 d = dirs[b];
        d.x += cfg.angle_jitter * rng.normal();
        d.y += cfg.angle_jitter * rng.normal();
        d.z += cfg.angle_jitter * rng.normal();
        d = normalized(d);
        const Point3 parent = pose.joints[js.index_of(bones[b].parent)];
        pose.joints[js.index_of(bones[b].child)] =
            parent + Point3{lengths[b] * d.x, lengths[b] * d.y, lengths[b] * d.z};
    }

    // Whole-body yaw about the vertical axis through the root.
    const double yaw = rng.uniform(-3.14159265358979323846, 3.14159265358979323846);
    const double c = std::cos(yaw), s = std::sin(yaw);
    for (Point3& p : pose.joints) {
        const double x = p.x * c + p.z * s;
        const double z = -p.x * s + p.z * c;
        p.x = x;
        p.z = z;
    }
    pose.joints[js.root] = {0.0, 0.0, 0.0};
    return pose;
}

SyntheticScene place_people(const std::vector<Pose3D>& skeletons, const SceneConfig& cfg,
                            Rng& rng) {
    cfg.validate();
    if (skeletons.empty() || skeletons.size() > 4) {
        throw std::invalid_argument("place_people: need 1..4 skeletons");
    }
    SyntheticScene scene;
    scene.cam = cfg.cam;
    scene.image_width = cfg.image_width;
    scene.image_height = cfg.image_height;

    const double mu = cfg.frustum_margin_frac * cfg.image_width;
    const double mv = cfg.frustum_margin_frac * cfg.image_height;
    std::vector<Point3> roots;
    for (const Pose3D& skel : skeletons) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const double z =
                cfg.log_uniform_depth
                    ? std::exp(rng.uniform(std::log(cfg.depth_min_mm), std::log(cfg.depth_max_mm)))
                    : rng.uniform(cfg.depth_min_mm, cfg.depth_max_mm);
            const double u = rng.uniform(mu, cfg.image_width - mu);
            const double v = rng.uniform(mv, cfg.image_height - mv);
            const Point3 root{(u - cfg.cam.cx) / cfg.cam.fx * z, (v - cfg.cam.cy) / cfg.cam.fy * z,
                              z};
            bool ok = true;
            for (const Point3& other : roots) {
                const Point3 d = root - other;
                if (std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z) < cfg.min_separation_mm) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                roots.push_back(root);
                Pose3D abs;
                abs.detected = true;
                abs.joints.reserve(skel.size());
                for (const Point3& p : skel.joints) abs.joints.push_back(p + root);
                scene.truth.push_back(std::move(abs));
                placed = true;
            }
        }
        if (!placed) {
            throw std::runtime_error(
                "place_people: could not satisfy the separation constraint (frustum too tight)");
        }
    }
    return scene;
}

std::vector<Pose2D> render_detections(const SyntheticScene& scene, const NoiseModel& noise,
                                      Rng& rng) {
    noise.validate();
    if (scene.truth.empty()) {
        throw std::invalid_argument("render_detections: scene has no true poses");
    }
    const JointSet& js = JointSet::default14();
    std::vector<Pose2D> out;
    out.reserve(scene.truth.size());
    for (const Pose3D& person : scene.truth) {
        Pose2D det;
        det.joints.resize(person.size());
        for (std::size_t j = 0; j < person.size(); ++j) {
            const Point2 exact = project(scene.cam, person.joints[j]);
            const double nu = noise.sigma_2d_px * rng.normal();
            const double nv = noise.sigma_2d_px * rng.normal();
            const double miss_p = (j == js.root) ? noise.hip_miss_prob : noise.joint_miss_prob;
            const bool missed = rng.uniform() < miss_p;
            Joint2D& jd = det.joints[j];
            if (missed) {
                jd = {Point2{0.0, 0.0, Frame::Pixel}, 0.0, false};
            } else {
                jd.pt = {exact.u + nu, exact.v + nv, Frame::Pixel};
                jd.confidence = std::exp(-std::sqrt(nu * nu + nv * nv) / noise.confidence_falloff_px);
                jd.visible = true;
            }
        }
        out.push_back(std::move(det));
    }
    return out;
}

std::vector<std::vector<double>> simulate_depth_readout(const SyntheticScene& scene,
                                                        const NoiseModel& noise, Rng& rng) {
    noise.validate();
    if (scene.truth.empty()) {
        throw std::invalid_argument("simulate_depth_readout: scene has no true poses");
    }
    const JointSet& js = JointSet::default14();
    // One affine realization per scene: the estimator's unknown scale/shift.
    const double scale =
        noise.depth_scale + rng.uniform(-noise.depth_scale_spread, noise.depth_scale_spread);
    const double offset =
        noise.depth_offset + rng.uniform(-noise.depth_offset_spread, noise.depth_offset_spread);
    std::vector<std::vector<double>> out;
    out.reserve(scene.truth.size());
    for (std::size_t p = 0; p < scene.truth.size(); ++p) {
        const Pose3D& person = scene.truth[p];
        std::vector<double> readouts(person.size());
        for (std::size_t j = 0; j < person.size(); ++j) {
            const double g = rng.normal();
            const bool substitute = rng.uniform() < noise.depth_substitution_prob;
            double depth = person.joints[j].z;
            if (substitute) {
                // The readout lands on the nearest person in front, else on
                // the background plane.
                double surface = noise.background_depth_mm;
                for (std::size_t q = 0; q < scene.truth.size(); ++q) {
                    if (q == p) continue;
                    const double other_z = scene.truth[q].joints[js.root].z;
                    if (other_z < depth && other_z < surface) surface = other_z;
                }
                depth = surface;
            }
            readouts[j] = scale * std::log(depth) + offset + noise.sigma_log_depth * g;
        }
        out.push_back(std::move(readouts));
    }
    return out;
}

namespace {

struct CropZoomDraw {
    double zoom, left, right, top, bottom;
};

CropZoomDraw draw_crop_zoom(const CropZoomParams& params, double width, double height, Rng& rng) {
    CropZoomDraw d;
    d.zoom = rng.uniform(params.zoom_min, params.zoom_max);
    d.left = rng.uniform(0.0, params.max_crop_frac * width);
    d.right = rng.uniform(0.0, params.max_crop_frac * width);
    d.top = rng.uniform(0.0, params.max_crop_frac * height);
    d.bottom = rng.uniform(0.0, params.max_crop_frac * height);
    return d;
}

void apply_crop_zoom(CameraIntrinsics& cam, int& width, int& height,
                     std::vector<Pose2D*>& detections, const CropZoomDraw& d) {
    const double new_w = (width - d.left - d.right) * d.zoom;
    const double new_h = (height - d.top - d.bottom) * d.zoom;
    if (new_w < 2.0 || new_h < 2.0) {
        throw std::invalid_argument("crop/zoom: degenerate window");
    }
    cam.cx = (cam.cx - d.left) * d.zoom;
    cam.cy = (cam.cy - d.top) * d.zoom;
    cam.fx *= d.zoom;
    cam.fy *= d.zoom;
    width = static_cast<int>(std::lround(new_w));
    height = static_cast<int>(std::lround(new_h));
    for (Pose2D* pose : detections) {
        for (Joint2D& j : pose->joints) {
            if (!j.visible) continue;
            j.pt.u = (j.pt.u - d.left) * d.zoom;
            j.pt.v = (j.pt.v - d.top) * d.zoom;
        }
    }
}

}  // namespace

void augment_crop_zoom(SyntheticScene& scene, const CropZoomParams& params, Rng& rng) {
    const CropZoomDraw d = draw_crop_zoom(params, scene.image_width, scene.image_height, rng);
    std::vector<Pose2D*> dets;
    for (Pose2D& p : scene.detections) dets.push_back(&p);
    apply_crop_zoom(scene.cam, scene.image_width, scene.image_height, dets, d);
}

void augment_sample(PoseSample& sample, const CropZoomParams& params, Rng& rng) {
    const CropZoomDraw d = draw_crop_zoom(params, sample.image_width, sample.image_height, rng);
    std::vector<Pose2D*> dets = {&sample.detections};
    apply_crop_zoom(sample.cam, sample.image_width, sample.image_height, dets, d);
}

std::vector<SyntheticScene> generate_scenes(const SceneConfig& cfg, int n_scenes,
                                            std::uint64_t seed) {
    cfg.validate();
    if (n_scenes < 1) {
        throw std::invalid_argument("generate_scenes: need at least one scene");
    }
    std::vector<SyntheticScene> scenes;
    scenes.reserve(n_scenes);
    for (int i = 0; i < n_scenes; ++i) {
        const std::uint64_t scene_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        Rng rng(scene_seed);
        std::vector<Pose3D> skeletons;
        for (int p = 0; p < cfg.people; ++p) skeletons.push_back(sample_skeleton(cfg, rng));
        SyntheticScene scene = place_people(skeletons, cfg, rng);
        scene.scene_id = i;
        scene.seed = scene_seed;
        scene.detections = render_detections(scene, cfg.noise, rng);
        scene.log_depth = simulate_depth_readout(scene, cfg.noise, rng);
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

Dataset scenes_to_dataset(const std::vector<SyntheticScene>& scenes, const JointSet& js) {
    Dataset data;
    data.joints = js;
    for (const SyntheticScene& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            PoseSample s;
            s.scene_id = scene.scene_id;
            s.person_id = static_cast<int>(p);
            s.cam = scene.cam;
            s.image_width = scene.image_width;
            s.image_height = scene.image_height;
            s.detections = scene.detections[p];
            s.log_depth = scene.log_depth[p];
            s.gt = scene.truth[p];
            data.samples.push_back(std::move(s));
        }
    }
    return data;
}

void write_dataset_csv(const std::vector<SyntheticScene>& scenes, const JointSet& js,
                       const std::string& stem) {
    std::ofstream poses(stem + ".csv", std::ios::binary);
    if (!poses) {
        throw std::runtime_error("write_dataset_csv: cannot open '" + stem + ".csv'");
    }
    poses << "scene_id,person_id,joint_name,u_px,v_px,confidence,visible,logdepth_readout,"
             "X_mm,Y_mm,Z_mm\n";
    for (const SyntheticScene& scene : scenes) {
        for (std::size_t p = 0; p < scene.truth.size(); ++p) {
            for (std::size_t j = 0; j < js.size(); ++j) {
                const Joint2D& det = scene.detections[p].joints[j];
                const Point3& gt = scene.truth[p].joints[j];
                poses << scene.scene_id << ',' << p << ',' << js.names[j] << ','
                      << format_fixed(det.pt.u) << ',' << format_fixed(det.pt.v) << ','
                      << format_fixed(det.confidence) << ',' << (det.visible ? 1 : 0) << ','
                      << format_fixed(scene.log_depth[p][j]) << ',' << format_fixed(gt.x) << ','
                      << format_fixed(gt.y) << ',' << format_fixed(gt.z) << '\n';
            }
        }
    }
    if (!poses.flush()) {
        throw std::runtime_error("write_dataset_csv: write failed");
    }

    std::ofstream cams(stem + "_cameras.csv", std::ios::binary);
    if (!cams) {
        throw std::runtime_error("write_dataset_csv: cannot open '" + stem + "_cameras.csv'");
    }
    cams << "scene_id,fx,fy,cx,cy,width,height\n";
    for (const SyntheticScene& scene : scenes) {
        cams << scene.scene_id << ',' << format_fixed(scene.cam.fx) << ','
             << format_fixed(scene.cam.fy) << ',' << format_fixed(scene.cam.cx) << ','
             << format_fixed(scene.cam.cy) << ',' << scene.image_width << ','
             << scene.image_height << '\n';
    }
    if (!cams.flush()) {
        throw std::runtime_error("write_dataset_csv: write failed");
    }
}

Dataset read_dataset_csv(const std::string& stem, const JointSet& js) {
    std::ifstream cams(stem + "_cameras.csv");
    if (!cams) {
        throw std::runtime_error("read_dataset_csv: cannot open '" + stem + "_cameras.csv'");
    }
    struct CamRecord {
        CameraIntrinsics cam;
        int width, height;
    };
    std::map<int, CamRecord> cameras;
    std::string line;
    std::getline(cams, line);  // header
    while (std::getline(cams, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) {
            throw std::runtime_error("read_dataset_csv: malformed camera row '" + line + "'");
        }
        CamRecord rec;
        rec.cam = {std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])};
        rec.width = std::stoi(f[5]);
        rec.height = std::stoi(f[6]);
        cameras[std::stoi(f[0])] = rec;
    }

    std::ifstream poses(stem + ".csv");
    if (!poses) {
        throw std::runtime_error("read_dataset_csv: cannot open '" + stem + ".csv'");
    }
    Dataset data;
    data.joints = js;
    std::map<std::pair<int, int>, std::size_t> index;
    std::getline(poses, line);  // header
    while (std::getline(poses, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11) {
            throw std::runtime_error("read_dataset_csv: malformed pose row '" + line + "'");
        }
        const int scene_id = std::stoi(f[0]);
        const int person_id = std::stoi(f[1]);
        const std::size_t j = js.index_of(f[2]);
        const auto key = std::make_pair(scene_id, person_id);
        auto it = index.find(key);
        if (it == index.end()) {
            const auto cam_it = cameras.find(scene_id);
            if (cam_it == cameras.end()) {
                throw std::runtime_error("read_dataset_csv: scene " + std::to_string(scene_id) +
                                         " missing from camera sidecar");
            }
            PoseSample s;
            s.scene_id = scene_id;
            s.person_id = person_id;
            s.cam = cam_it->second.cam;
            s.image_width = cam_it->second.width;
            s.image_height = cam_it->second.height;
            s.detections.joints.resize(js.size());
            s.log_depth.resize(js.size(), 0.0);
            s.gt.joints.resize(js.size());
            s.gt.detected = true;
            it = index.emplace(key, data.samples.size()).first;
            data.samples.push_back(std::move(s));
        }
        PoseSample& s = data.samples[it->second];
        s.detections.joints[j] = {Point2{std::stod(f[3]), std::stod(f[4]), Frame::Pixel},
                                  std::stod(f[5]), f[6] == "1"};
        s.log_depth[j] = std::stod(f[7]);
        s.gt.joints[j] = {std::stod(f[8]), std::stod(f[9]), std::stod(f[10])};
    }
    return data;
}

void generate_dataset(const SceneConfig& cfg, int n_scenes, std::uint64_t seed,
                      const std::string& stem) {
    const auto scenes = generate_scenes(cfg, n_scenes, seed);
    write_dataset_csv(scenes, JointSet::default14(), stem);
}

void contaminate_targets(Dataset& data, double fraction, double magnitude_mm, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw std::invalid_argument("contaminate_targets: fraction must be in [0,1]");
    }
    // One-sided offsets: outliers shift the conditional mean while leaving
    // the median where it was, which is exactly what separates a
    // mean-seeking loss from a median-seeking one.
    Rng rng(mix_seed(seed, 0xc0ffee));
    for (PoseSample& s : data.samples) {
        if (rng.uniform() >= fraction) continue;
        for (Point3& p : s.gt.joints) {
            p.x += magnitude_mm * std::abs(rng.normal());
            p.y += magnitude_mm * std::abs(rng.normal());
            p.z += magnitude_mm * std::abs(rng.normal());
        }
    }
}

}  // namespace abspose
