"""Backend selection for the per-step kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementations in ``_pykernels`` are used. Setting ``D2P2_PURE_PYTHON=1``
forces the numpy path. ``BACKEND`` names the active one.
"""
import os

import numpy as np

from . import _pykernels
from ._pykernels import CLIP_AUTO, CLIP_OFF, CLIP_THRESHOLD

_ext = None
if not os.environ.get("D2P2_PURE_PYTHON"):
    try:
        from . import _ckernels as _ext
    except ImportError:
        _ext = None

BACKEND = "cython" if _ext is not None else "numpy"
_impl = _ext if _ext is not None else _pykernels

CLIP_MODES = {"off": CLIP_OFF, "auto": CLIP_AUTO, "threshold": CLIP_THRESHOLD}


def _c(a, dtype=np.float64):
    return np.ascontiguousarray(a, dtype=dtype)


def clip_rows(grads, gamma, scale=1.0, mode="auto"):
    """Clip each row of a ``(B, d)`` gradient matrix."""
    return _impl.clip_rows(_c(grads), float(gamma), float(scale), CLIP_MODES[mode])


def clip_mean(grads, gamma, scale=1.0, mode="auto"):
    """Mean of the per-row clipped gradients, reduced in row order."""
    return _impl.clip_mean(_c(grads), float(gamma), float(scale), CLIP_MODES[mode])


def logistic_grads(X, y, w):
    return _impl.logistic_grads(_c(X), _c(y), _c(w))


def mlp_grads(X, labels, theta, m, h, c):
    return _impl.mlp_grads(_c(X), _c(labels, np.int64), _c(theta), int(m), int(h), int(c))


def get_backend(name):
    """Return the kernel module for ``"numpy"`` or ``"cython"`` (for benchmarks/tests)."""
    if name == "numpy":
        return _pykernels
    if name == "cython":
        if _ext is None:
            from . import _ckernels
            return _ckernels
        return _ext
    raise ValueError(f"unknown backend {name!r}")
