# Copyright (c) 2026 The abspose authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the abspose toolkit."""

from ._core import (
    CameraIntrinsics,
    a_mpjpe,
    compare_baseline,
    decode_prediction,
    default_joint_names,
    denormalize_2d,
    detection_rate,
    encode_target,
    error_histogram,
    evaluate,
    gen_dataset,
    lr_schedule,
    normalize_2d,
    project,
    r_mpjpe,
    reprojection_error,
    root_joint_index,
    solve_weak_perspective_translation,
    train,
)

__all__ = [
    "CameraIntrinsics",
    "a_mpjpe",
    "compare_baseline",
    "decode_prediction",
    "default_joint_names",
    "denormalize_2d",
    "detection_rate",
    "encode_target",
    "error_histogram",
    "evaluate",
    "gen_dataset",
    "lr_schedule",
    "normalize_2d",
    "project",
    "r_mpjpe",
    "reprojection_error",
    "root_joint_index",
    "solve_weak_perspective_translation",
    "train",
]
