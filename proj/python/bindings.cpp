// Copyright (c) 2026 The abspose authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "abspose/eval.hpp"
#include "abspose/runner.hpp"

namespace py = pybind11;

namespace {

using XYZ = std::tuple<double, double, double>;
using UV = std::tuple<double, double>;

abspose::Point3 to_point3(const XYZ& t) {
    return {std::get<0>(t), std::get<1>(t), std::get<2>(t)};
}

abspose::Point2 to_point2(const UV& t, abspose::Frame frame) {
    return {std::get<0>(t), std::get<1>(t), frame};
}

std::vector<abspose::Point3> to_points3(const std::vector<XYZ>& v) {
    std::vector<abspose::Point3> out;
    out.reserve(v.size());
    for (const XYZ& t : v) out.push_back(to_point3(t));
    return out;
}

std::vector<abspose::Point2> to_points2(const std::vector<UV>& v, abspose::Frame frame) {
    std::vector<abspose::Point2> out;
    out.reserve(v.size());
    for (const UV& t : v) out.push_back(to_point2(t, frame));
    return out;
}

abspose::Pose3D to_pose3d(const std::vector<XYZ>& joints) {
    abspose::Pose3D p;
    p.joints = to_points3(joints);
    return p;
}

std::vector<abspose::Pose3D> to_poses3d(const std::vector<std::vector<XYZ>>& poses) {
    std::vector<abspose::Pose3D> out;
    out.reserve(poses.size());
    for (const auto& p : poses) out.push_back(to_pose3d(p));
    return out;
}

abspose::JointSet anonymous_joint_set(std::size_t n, std::size_t root) {
    abspose::JointSet js;
    for (std::size_t i = 0; i < n; ++i) js.names.push_back("j" + std::to_string(i));
    js.root = root;
    return js;
}

abspose::RunConfig config_from(const std::map<std::string, std::string>& overrides) {
    abspose::RunConfig cfg;
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return cfg;
}

py::dict report_dict(const abspose::EvalReport& r) {
    py::dict d;
    d["a_mpjpe_mm"] = r.a_mpjpe;
    d["r_mpjpe_mm"] = r.r_mpjpe;
    d["detection_rate"] = r.detection_rate;
    d["n_poses"] = r.n_poses;
    d["n_total_gt"] = r.n_total_gt;
    d["n_unbounded"] = r.n_unbounded;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Absolute multi-person 3D pose estimation toolkit";

    py::class_<abspose::CameraIntrinsics>(m, "CameraIntrinsics")
        .def(py::init([](double fx, double fy, double cx, double cy) {
                 return abspose::CameraIntrinsics{fx, fy, cx, cy};
             }),
             py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"))
        .def_readwrite("fx", &abspose::CameraIntrinsics::fx)
        .def_readwrite("fy", &abspose::CameraIntrinsics::fy)
        .def_readwrite("cx", &abspose::CameraIntrinsics::cx)
        .def_readwrite("cy", &abspose::CameraIntrinsics::cy)
        .def("f", &abspose::CameraIntrinsics::f);

    m.def(
        "project",
        [](const abspose::CameraIntrinsics& cam, const XYZ& p) {
            const abspose::Point2 q = abspose::project(cam, to_point3(p));
            return UV{q.u, q.v};
        },
        py::arg("cam"), py::arg("point_mm"));
    m.def(
        "normalize_2d",
        [](const abspose::CameraIntrinsics& cam, const UV& p) {
            const abspose::Point2 q = abspose::normalize_2d(cam, to_point2(p, abspose::Frame::Pixel));
            return UV{q.u, q.v};
        },
        py::arg("cam"), py::arg("point_px"));
    m.def(
        "denormalize_2d",
        [](const abspose::CameraIntrinsics& cam, const UV& p) {
            const abspose::Point2 q =
                abspose::denormalize_2d(cam, to_point2(p, abspose::Frame::Normalized));
            return UV{q.u, q.v};
        },
        py::arg("cam"), py::arg("point_norm"));
    m.def(
        "solve_weak_perspective_translation",
        [](const std::vector<UV>& p2d, const std::vector<XYZ>& p3d_rel, double f) {
            const abspose::TranslationSolution sol = abspose::solve_weak_perspective_translation(
                to_points2(p2d, abspose::Frame::Normalized), to_points3(p3d_rel), f);
            py::dict d;
            d["t"] = XYZ{sol.t.x, sol.t.y, sol.t.z};
            d["alpha"] = sol.alpha;
            d["residual"] = sol.residual;
            return d;
        },
        py::arg("p2d_norm"), py::arg("p3d_rel_mm"), py::arg("f") = 1.0);
    m.def(
        "reprojection_error",
        [](const std::vector<UV>& p2d, const std::vector<XYZ>& p3d_rel, const XYZ& t, double f) {
            return abspose::reprojection_error(to_points2(p2d, abspose::Frame::Normalized),
                                               to_points3(p3d_rel), to_point3(t), f);
        },
        py::arg("p2d_norm"), py::arg("p3d_rel_mm"), py::arg("t_mm"), py::arg("f") = 1.0);

    m.def("lr_schedule", &abspose::nn::lr_schedule, py::arg("epoch"), py::arg("base_lr") = 1e-3,
          py::arg("decay") = 0.96, py::arg("period") = 4);

    m.def("default_joint_names", [] { return abspose::JointSet::default14().names; });
    m.def("root_joint_index", [] { return abspose::JointSet::default14().root; });

    m.def(
        "a_mpjpe",
        [](const std::vector<std::vector<XYZ>>& pred, const std::vector<std::vector<XYZ>>& gt) {
            return abspose::a_mpjpe(to_poses3d(pred), to_poses3d(gt));
        },
        py::arg("pred"), py::arg("gt"));
    m.def(
        "r_mpjpe",
        [](const std::vector<std::vector<XYZ>>& pred, const std::vector<std::vector<XYZ>>& gt,
           std::size_t root) {
            if (pred.empty() || pred[0].empty()) {
                throw std::invalid_argument("r_mpjpe: empty input");
            }
            return abspose::r_mpjpe(to_poses3d(pred), to_poses3d(gt),
                                    anonymous_joint_set(pred[0].size(), root));
        },
        py::arg("pred"), py::arg("gt"), py::arg("root_index") = 1);
    m.def(
        "detection_rate",
        [](std::size_t detected, std::size_t total) {
            return abspose::detection_rate(detected, total);
        },
        py::arg("detected"), py::arg("total_gt"));
    m.def(
        "error_histogram",
        [](const std::vector<double>& values, double bin_width, double cap) {
            const abspose::Histogram h = abspose::error_histogram(values, bin_width, cap);
            std::vector<std::tuple<double, double, std::size_t>> bins;
            for (std::size_t b = 0; b < h.counts.size(); ++b) {
                const bool overflow = b + 1 == h.counts.size();
                bins.emplace_back(static_cast<double>(b) * h.bin_width,
                                  overflow ? std::numeric_limits<double>::infinity()
                                           : static_cast<double>(b + 1) * h.bin_width,
                                  h.counts[b]);
            }
            return bins;
        },
        py::arg("values"), py::arg("bin_width") = 50.0, py::arg("cap") = 1000.0);

    m.def(
        "encode_target",
        [](const std::vector<XYZ>& gt, bool log_hip_z) {
            const Eigen::RowVectorXd t =
                abspose::encode_target(to_pose3d(gt), abspose::JointSet::default14(), log_hip_z);
            return std::vector<double>(t.data(), t.data() + t.size());
        },
        py::arg("gt_mm"), py::arg("log_hip_z") = true);
    m.def(
        "decode_prediction",
        [](const std::vector<double>& pred, bool log_hip_z) {
            Eigen::RowVectorXd v(static_cast<Eigen::Index>(pred.size()));
            for (std::size_t i = 0; i < pred.size(); ++i) v(static_cast<Eigen::Index>(i)) = pred[i];
            const abspose::Pose3D p =
                abspose::decode_prediction(v, abspose::JointSet::default14(), log_hip_z);
            std::vector<XYZ> out;
            for (const abspose::Point3& q : p.joints) out.emplace_back(q.x, q.y, q.z);
            return out;
        },
        py::arg("prediction"), py::arg("log_hip_z") = true);

    m.def(
        "gen_dataset",
        [](const std::string& out_dir, int scenes, std::uint64_t seed,
           const std::map<std::string, std::string>& overrides) {
            abspose::runner::gen_data(config_from(overrides), out_dir, scenes, seed);
        },
        py::arg("out_dir"), py::arg("scenes"), py::arg("seed") = 1,
        py::arg("overrides") = std::map<std::string, std::string>{});
    m.def(
        "train",
        [](const std::string& data, const std::string& out_dir, std::uint64_t seed,
           const std::map<std::string, std::string>& overrides) {
            abspose::runner::train(config_from(overrides), data, out_dir, seed);
            return out_dir + "/checkpoints/final.ckpt";
        },
        py::arg("data"), py::arg("out_dir"), py::arg("seed") = 1,
        py::arg("overrides") = std::map<std::string, std::string>{});
    m.def(
        "evaluate",
        [](const std::string& checkpoint, const std::string& data, const std::string& out_dir,
           const std::map<std::string, std::string>& overrides) {
            return report_dict(
                abspose::runner::eval_checkpoint(config_from(overrides), checkpoint, data, out_dir));
        },
        py::arg("checkpoint"), py::arg("data"), py::arg("out_dir"),
        py::arg("overrides") = std::map<std::string, std::string>{});
    m.def(
        "compare_baseline",
        [](const std::string& train_data, const std::string& test_data, const std::string& out_dir,
           const std::map<std::string, std::string>& overrides) {
            const auto rep = abspose::runner::compare_baseline(config_from(overrides), train_data,
                                                               test_data, out_dir);
            py::dict d;
            d["baseline"] = report_dict(rep.baseline);
            d["direct"] = report_dict(rep.direct);
            return d;
        },
        py::arg("train_data"), py::arg("test_data"), py::arg("out_dir"),
        py::arg("overrides") = std::map<std::string, std::string>{});
}
