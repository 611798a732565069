# Copyright 2026 The qrsnap Authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the qrsnap C++ core."""

from ._qrsnap import (  # noqa: F401
    ConfigError,
    EnsembleModel,
    Error,
    FormatError,
    InvalidArgument,
    IoError,
    SchedulePlan,
    apply_blur,
    apply_noise,
    blur_sigma,
    gaussian_kernel_1d,
    generate_synthetic,
    lr_at,
    mix_pair,
    read_sweep_csv,
    render_sweep_svg,
    set_thread_count,
    snapshot_points,
    top_k,
    train_synthetic,
)
