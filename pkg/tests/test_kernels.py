import numpy as np
import pytest

from d2p2 import _pykernels, kernels

try:
    from d2p2 import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


@needs_ext
@pytest.mark.parametrize("mode", [0, 1, 2])
def test_clip_parity(rng, mode):
    G = rng.standard_normal((33, 17)) * rng.uniform(0.01, 10, (33, 1))
    G[4] = 0.0
    for fn in ("clip_rows", "clip_mean"):
        a = getattr(_ckernels, fn)(G, 0.01, 1.0, mode)
        b = getattr(_pykernels, fn)(G, 0.01, 1.0, mode)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@needs_ext
def test_zero_gamma_zero_row(rng):
    G = np.zeros((2, 3))
    G[1] = [3.0, 0.0, 4.0]
    for impl in (_ckernels, _pykernels):
        out = impl.clip_rows(G, 0.0, 1.0, 1)
        np.testing.assert_allclose(out, [[0, 0, 0], [0.6, 0.0, 0.8]])


@needs_ext
def test_logistic_parity(rng):
    X = rng.standard_normal((40, 9)) * 10
    y = (rng.random(40) < 0.5).astype(float)
    w = rng.standard_normal(9)
    np.testing.assert_allclose(_ckernels.logistic_grads(X, y, w),
                               _pykernels.logistic_grads(X, y, w), rtol=1e-12, atol=1e-15)


@needs_ext
def test_mlp_parity(rng):
    m, h, c = 6, 11, 4
    X = rng.standard_normal((25, m))
    lab = rng.integers(0, c, 25).astype(np.int64)
    theta = rng.standard_normal(h * m + h + c * h + c)
    np.testing.assert_allclose(_ckernels.mlp_grads(X, lab, theta, m, h, c),
                               _pykernels.mlp_grads(X, lab, theta, m, h, c),
                               rtol=1e-11, atol=1e-14)


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "numpy")
    assert kernels.get_backend("numpy") is _pykernels
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
