"""Per-sample gradient normalization (automatic clipping).

``auto_clip`` rescales by ``G / (||v|| + gamma)``: every nonzero gradient keeps
its direction and a nonzero magnitude strictly below ``G``. The classic
threshold rule ``min(1, G/||v||) * v`` is available as ``mode="threshold"``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericError

DEFAULT_GAMMA = 0.01


@dataclass(frozen=True)
class ClipConfig:
    gamma: float = DEFAULT_GAMMA
    G: float = 1.0
    mode: str = "auto"

    def __post_init__(self):
        if self.mode not in ("auto", "threshold", "off"):
            raise ConfigurationError(f"unknown clip mode {self.mode!r}")
        if not self.gamma >= 0:
            raise ConfigurationError("gamma must be >= 0")
        if not self.G > 0:
            raise ConfigurationError("G must be > 0")


def auto_clip(v, cfg: ClipConfig = ClipConfig()) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite gradient passed to clip")
    norm = np.linalg.norm(v)
    if cfg.mode == "auto":
        denom = norm + cfg.gamma
        return (cfg.G / denom) * v if denom > 0 else v.copy()
    if cfg.mode == "threshold":
        return v * min(1.0, cfg.G / norm) if norm > 0 else v.copy()
    return v.copy()


def clip_batch(grads, cfg: ClipConfig = ClipConfig()) -> np.ndarray:
    """Mean of the per-sample clipped gradients of a ``(B, d)`` batch."""
    grads = np.asarray(grads, dtype=np.float64)
    if grads.ndim != 2 or grads.shape[0] == 0:
        raise ConfigurationError("clip_batch needs a non-empty (B, d) batch")
    if not np.all(np.isfinite(grads)):
        raise NumericError("non-finite gradient passed to clip")
    return kernels.clip_mean(grads, cfg.gamma, cfg.G, cfg.mode)
