"""Gaussian random projection (Johnson-Lindenstrauss) operators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class ProjectionOperator:
    """A ``d x p`` Gaussian matrix, or the identity on ``R^d``.

    ``project_down`` maps ``v`` to ``A^T v / sqrt(p)``; ``project_up`` maps ``w``
    to ``A w``. In identity mode both are the identity and ``p == d``.
    """

    mode: str
    d: int
    p: int
    sigma_A: float = 1.0
    matrix: np.ndarray | None = None

    @classmethod
    def identity(cls, d: int) -> "ProjectionOperator":
        return cls("identity", d, d)

    def down(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.d,):
            raise ConfigurationError(f"project_down expects dim {self.d}, got {v.shape}")
        if self.mode == "identity":
            return v.copy()
        return (self.matrix.T @ v) / math.sqrt(self.p)

    def up(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.p,):
            raise ConfigurationError(f"project_up expects dim {self.p}, got {w.shape}")
        if self.mode == "identity":
            return w.copy()
        return self.matrix @ w


def target_dim(d: int, reduction_rate: float) -> int:
    """``p = max(1, round((1 - r) d))``, rounding halves up."""
    if not 0 <= reduction_rate < 1:
        raise ConfigurationError("reduction rate must be in [0, 1)")
    return max(1, int(math.floor((1.0 - reduction_rate) * d + 0.5)))


def sample_operator(d: int, p: int, sigma_A: float, rng: np.random.Generator) -> ProjectionOperator:
    if not 1 <= p <= d:
        raise ConfigurationError(f"need 1 <= p <= d, got p={p}, d={d}")
    if not sigma_A > 0:
        raise ConfigurationError("sigma_A must be > 0")
    A = rng.standard_normal((d, p)) * sigma_A
    return ProjectionOperator("gaussian", d, p, float(sigma_A), A)


def project_down(op: ProjectionOperator, v) -> np.ndarray:
    return op.down(v)


def project_up(op: ProjectionOperator, w) -> np.ndarray:
    return op.up(w)


def jl_min_dim(m: int, zeta: float) -> int:
    """Smallest integer strictly greater than ``8 ln(m) / zeta^2``."""
    if not 0 < zeta < 1:
        raise ConfigurationError("zeta must lie in (0, 1)")
    if m < 2:
        raise ConfigurationError("need at least two points")
    return math.floor(8.0 * math.log(m) / zeta**2) + 1


def distortion_report(points, op: ProjectionOperator, zeta: float) -> float:
    """Fraction of point pairs whose squared distance survives ``project_down``
    within a factor ``[1 - zeta, 1 + zeta]``."""
    X = np.asarray(points, dtype=np.float64)
    m = X.shape[0]
    if m < 2:
        raise ConfigurationError("need at least two points")
    if op.mode == "identity":
        Y = X
    else:
        Y = (X @ op.matrix) / math.sqrt(op.p)
    orig = _pair_sq_dists(X)
    proj = _pair_sq_dists(Y)
    ok = (proj >= (1 - zeta) * orig) & (proj <= (1 + zeta) * orig)
    return float(ok.mean())


def _pair_sq_dists(X):
    # explicit differences keep identical points at exactly zero
    out = []
    for i in range(X.shape[0] - 1):
        diff = X[i + 1:] - X[i]
        out.append(np.einsum("ij,ij->i", diff, diff))
    return np.concatenate(out)
