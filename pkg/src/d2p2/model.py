"""Trainable objectives with per-sample losses and exact per-sample gradients.

Parameters are a flat float64 vector. For the MLP the layout is layer-major,
weights before biases: ``W1 (h x m), b1 (h), W2 (c x h), b2 (c)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._pykernels import mlp_forward, sigmoid
from .errors import ConfigurationError, NumericError


@dataclass
class Dataset:
    """Row-ordered samples. ``labels`` hold class indices or targets."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ConfigurationError("features must be a 2-D array")
        self.labels = np.ascontiguousarray(self.labels, dtype=np.float64).reshape(-1)
        if self.features.shape[0] < 1:
            raise ConfigurationError("dataset needs at least one sample")
        if self.labels.shape[0] != self.features.shape[0]:
            raise ConfigurationError(
                f"{self.labels.shape[0]} labels for {self.features.shape[0]} rows"
            )
        if self.n_classes is not None:
            lab = self.labels
            if np.any(lab != np.round(lab)) or lab.min() < 0 or lab.max() >= self.n_classes:
                raise ConfigurationError(f"labels must be class indices in [0, {self.n_classes})")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.n_classes)


def as_params(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != d:
        raise ConfigurationError(f"parameter vector has dim {x.shape[0]}, objective expects {d}")
    return x


def _finite(value, what):
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite {what}")
    return value


class Objective:
    """Base class. Subclasses implement the batched loss and gradient."""

    kind: str = ""
    d: int = 0

    def check_data(self, data: Dataset) -> None:
        pass

    def batch_losses(self, x, data: Dataset, idx) -> np.ndarray:
        raise NotImplementedError

    def batch_gradients(self, x, data: Dataset, idx) -> np.ndarray:
        """Per-sample gradients for rows ``idx`` as a ``(len(idx), d)`` array."""
        raise NotImplementedError

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.d)

    def accuracy(self, x, data: Dataset) -> float:
        return float("nan")

    # single-sample helpers

    def _prep(self, x, data, idx):
        self.check_data(data)
        x = as_params(x, self.d)
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if np.any(idx < 0) or np.any(idx >= data.n):
            raise ConfigurationError(f"sample index out of range for n={data.n}")
        return x, idx

    def loss(self, x, data: Dataset, idx: int) -> float:
        x, i = self._prep(x, data, idx)
        return float(_finite(self.batch_losses(x, data, i), "loss")[0])

    def per_sample_gradient(self, x, data: Dataset, idx: int) -> np.ndarray:
        x, i = self._prep(x, data, idx)
        return _finite(self.batch_gradients(x, data, i), "gradient")[0]

    def gradients(self, x, data: Dataset, idx) -> np.ndarray:
        x, i = self._prep(x, data, idx)
        return _finite(self.batch_gradients(x, data, i), "gradient")

    def full_loss(self, x, data: Dataset, idx=None) -> float:
        if idx is None:
            idx = np.arange(data.n)
        x, i = self._prep(x, data, idx)
        return float(_finite(self.batch_losses(x, data, i), "loss").mean())


class Quadratic(Objective):
    """``f(x, s) = 0.5 * sum_i h_i (x_i - c_i - a_s,i)^2``.

    ``a_s`` is the sample's feature row (an offset of the center), so the
    dataset width must equal ``d``. Zero curvature gives a constant objective.
    """

    kind = "quadratic"

    def __init__(self, d: int, center=None, curvature=None):
        if d < 1:
            raise ConfigurationError("quadratic dimension must be >= 1")
        self.d = int(d)
        self.center = np.zeros(d) if center is None else as_params(center, d)
        self.curvature = np.ones(d) if curvature is None else as_params(curvature, d)
        if np.any(self.curvature < 0):
            raise ConfigurationError("curvature must be non-negative")

    def check_data(self, data):
        if data.width != self.d:
            raise ConfigurationError(f"quadratic expects {self.d} features, got {data.width}")

    def batch_losses(self, x, data, idx):
        r = x - self.center - data.features[idx]
        return 0.5 * (r * r) @ self.curvature

    def batch_gradients(self, x, data, idx):
        return self.curvature * (x - self.center - data.features[idx])

    def minimizer(self, data: Dataset) -> np.ndarray:
        """Minimizer of the mean loss (exact for positive curvature)."""
        return self.center + data.features.mean(axis=0)


class Logistic(Objective):
    """Binary logistic regression without intercept, labels in {0, 1}."""

    kind = "logistic"

    def __init__(self, d: int):
        if d < 1:
            raise ConfigurationError("logistic dimension must be >= 1")
        self.d = int(d)

    def check_data(self, data):
        if data.width != self.d:
            raise ConfigurationError(f"logistic expects {self.d} features, got {data.width}")
        if not np.all((data.labels == 0) | (data.labels == 1)):
            raise ConfigurationError("logistic labels must be 0 or 1")

    def batch_losses(self, x, data, idx):
        z = data.features[idx] @ x
        # ln(1 + exp(-z)) for y=1, ln(1 + exp(z)) for y=0
        return np.logaddexp(0.0, (1.0 - 2.0 * data.labels[idx]) * z)

    def batch_gradients(self, x, data, idx):
        return kernels.logistic_grads(data.features[idx], data.labels[idx], x)

    def accuracy(self, x, data):
        pred = (sigmoid(data.features @ x) > 0.5).astype(np.float64)
        return float(np.mean(pred == data.labels))


class MLP(Objective):
    """One hidden tanh layer followed by a softmax cross-entropy head."""

    kind = "mlp"

    def __init__(self, n_features: int, n_classes: int, hidden: int = 32):
        if min(n_features, n_classes, hidden) < 1 or n_classes < 2:
            raise ConfigurationError("mlp needs n_features, hidden >= 1 and n_classes >= 2")
        self.m, self.h, self.c = int(n_features), int(hidden), int(n_classes)
        self.d = self.h * self.m + self.h + self.c * self.h + self.c

    def check_data(self, data):
        if data.width != self.m:
            raise ConfigurationError(f"mlp expects {self.m} features, got {data.width}")
        lab = data.labels
        if np.any(lab != np.round(lab)) or lab.min() < 0 or lab.max() >= self.c:
            raise ConfigurationError(f"mlp labels must be class indices in [0, {self.c})")

    def _logits(self, x, X):
        return mlp_forward(X, x, self.m, self.h, self.c)[1]

    def batch_losses(self, x, data, idx):
        o = self._logits(x, data.features[idx])
        mx = o.max(axis=1, keepdims=True)
        lse = mx[:, 0] + np.log(np.exp(o - mx).sum(axis=1))
        lab = data.labels[idx].astype(np.int64)
        return lse - o[np.arange(len(lab)), lab]

    def batch_gradients(self, x, data, idx):
        return kernels.mlp_grads(
            data.features[idx], data.labels[idx].astype(np.int64), x, self.m, self.h, self.c
        )

    def init_params(self, rng):
        """Uniform fan-in init ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))`` for every layer."""
        b1 = 1.0 / np.sqrt(self.m)
        b2 = 1.0 / np.sqrt(self.h)
        return np.concatenate(
            [
                rng.uniform(-b1, b1, self.h * self.m),
                rng.uniform(-b1, b1, self.h),
                rng.uniform(-b2, b2, self.c * self.h),
                rng.uniform(-b2, b2, self.c),
            ]
        )

    def accuracy(self, x, data):
        pred = np.argmax(self._logits(x, data.features), axis=1)
        return float(np.mean(pred == data.labels))


def make_objective(kind: str, d_feat: int, n_classes: int = 2, hidden: int = 32) -> Objective:
    if kind == "quadratic":
        return Quadratic(d_feat)
    if kind == "logistic":
        return Logistic(d_feat)
    if kind == "mlp":
        return MLP(d_feat, n_classes, hidden)
    raise ConfigurationError(f"unknown objective kind {kind!r}")


def loss(obj: Objective, x, data: Dataset, idx: int) -> float:
    return obj.loss(x, data, idx)


def per_sample_gradient(obj: Objective, x, data: Dataset, idx: int) -> np.ndarray:
    return obj.per_sample_gradient(x, data, idx)


def full_gradient(obj: Objective, x, data: Dataset) -> np.ndarray:
    """Arithmetic mean of all per-sample gradients."""
    g = obj.gradients(x, data, np.arange(data.n))
    return g.sum(axis=0) / data.n


def finite_diff_gradient(obj: Objective, x, data: Dataset, idx: int, h: float = 1e-5,
                         coords=None) -> np.ndarray:
    """Central-difference gradient of the sample loss, one coordinate at a time.

    With ``coords`` only those coordinates are estimated and returned.
    """
    if h <= 0:
        raise ConfigurationError("finite-difference step must be positive")
    x = as_params(x, obj.d).copy()
    coords = np.arange(obj.d) if coords is None else np.asarray(coords, dtype=np.int64)
    out = np.empty(len(coords))
    for j, i in enumerate(coords):
        orig = x[i]
        x[i] = orig + h
        fp = obj.loss(x, data, idx)
        x[i] = orig - h
        fm = obj.loss(x, data, idx)
        x[i] = orig
        out[j] = (fp - fm) / (2.0 * h)
    return out
