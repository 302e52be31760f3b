"""Gaussian noise with a static or a 1/k-decaying variance schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_SIGMA = 3.0


@dataclass(frozen=True)
class NoiseSchedule:
    """``sigma_eps`` is a standard deviation; the dynamic variance at step k is
    ``sigma_eps**2 / k``."""

    sigma_eps: float = DEFAULT_SIGMA
    mode: str = "dynamic"

    def __post_init__(self):
        if self.mode not in ("static", "dynamic"):
            raise ConfigurationError(f"unknown schedule mode {self.mode!r}")
        if not self.sigma_eps >= 0:
            raise ConfigurationError("sigma_eps must be >= 0")


def variance_at(s: NoiseSchedule, k: int) -> float:
    if k < 1:
        raise ConfigurationError("step index starts at 1")
    v = s.sigma_eps * s.sigma_eps
    return v / k if s.mode == "dynamic" else v


def sample_noise(s: NoiseSchedule, k: int, p: int, rng: np.random.Generator) -> np.ndarray:
    if p < 1:
        raise ConfigurationError("noise dimension must be >= 1")
    return rng.standard_normal(p) * math.sqrt(variance_at(s, k))


def schedule_sum(s: NoiseSchedule, K: int) -> float:
    """Sum of the per-step variances over steps ``1..K``."""
    if K < 1:
        raise ConfigurationError("K must be >= 1")
    v = s.sigma_eps * s.sigma_eps
    if s.mode == "static":
        return v * K
    return float(np.sum(v / np.arange(1, K + 1, dtype=np.float64)))
