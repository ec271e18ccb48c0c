"""Dual-dynamic-range Gaussian splatting.

Thin Python layer over the compiled ``_ddrgs`` module. Images are
``(H, W, 3)`` float64 arrays; configuration and reports are plain dicts.
"""

from __future__ import annotations

import json
import os
from typing import Callable, Optional

from ._ddrgs import (
    Camera,
    Checkpoint,
    ConfigError,
    DomainError,
    FormatError,
    IntegrityError,
    NumericalError,
    Scene,
    StructuralError,
    checkpoint_digest,
    load_checkpoint,
    mu_law,
    psnr,
    render,
    ssim,
)
from . import _ddrgs

__all__ = [
    "Camera",
    "Checkpoint",
    "ConfigError",
    "DomainError",
    "FormatError",
    "IntegrityError",
    "NumericalError",
    "Scene",
    "StructuralError",
    "checkpoint_digest",
    "default_train_config",
    "evaluate",
    "fd_check",
    "generate_fixture",
    "load_checkpoint",
    "mu_law",
    "psnr",
    "render",
    "ssim",
    "train",
]


def default_train_config() -> dict:
    return json.loads(_ddrgs.default_train_config())


def train(
    data: str | os.PathLike,
    config: Optional[dict] = None,
    on_log: Optional[Callable[[dict], None]] = None,
) -> Checkpoint:
    """Train on a dataset directory. ``config`` holds any subset of
    :func:`default_train_config` keys; ``on_log`` receives each metrics record."""
    callback = None
    if on_log is not None:
        callback = lambda line: on_log(json.loads(line))  # noqa: E731
    return _ddrgs.train(os.fspath(data), json.dumps(config or {}), callback)


def evaluate(checkpoint: Checkpoint, data: str | os.PathLike) -> dict:
    return json.loads(_ddrgs.evaluate(checkpoint, os.fspath(data)))


def generate_fixture(out: str | os.PathLike, **spec) -> int:
    return _ddrgs.generate_fixture(os.fspath(out), **spec)


def fd_check(**kwargs) -> dict:
    return json.loads(_ddrgs.fd_check(**kwargs))
