# Copyright 2026 the nerfcast authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the nerfcast radiance field distillation engine."""

from ._core import (  # noqa: F401
    Field,
    InputError,
    IoError,
    Scene,
    TrainError,
    composite,
    hash_index,
    positional_encode,
    psnr,
    select_points,
    select_poses,
    select_rays,
    set_threads,
    sh_eval,
    ssim,
    trilinear,
)

__all__ = [
    "Field",
    "InputError",
    "IoError",
    "Scene",
    "TrainError",
    "composite",
    "hash_index",
    "positional_encode",
    "psnr",
    "select_points",
    "select_poses",
    "select_rays",
    "set_threads",
    "sh_eval",
    "ssim",
    "trilinear",
]
