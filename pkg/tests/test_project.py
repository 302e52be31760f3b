import math

import numpy as np
import pytest

from d2p2.errors import ConfigurationError
from d2p2.project import (
    ProjectionOperator,
    distortion_report,
    jl_min_dim,
    project_down,
    project_up,
    sample_operator,
    target_dim,
)
from d2p2.streams import keyed_stream


def test_same_stream_same_matrix():
    a = sample_operator(6, 3, 1.0, keyed_stream(7, "projection", 4))
    b = sample_operator(6, 3, 1.0, keyed_stream(7, "projection", 4))
    np.testing.assert_array_equal(a.matrix, b.matrix)
    c = sample_operator(6, 3, 1.0, keyed_stream(7, "projection", 5))
    assert not np.array_equal(a.matrix, c.matrix)


def test_outer_product_moment():
    # E[A A^T] = p sigma_A^2 I, Monte Carlo over 2e5 draws
    rng = np.random.default_rng(0)
    acc = np.zeros((4, 4))
    N = 200_000
    for _ in range(N):
        A = sample_operator(4, 2, 1.0, rng).matrix
        acc += A @ A.T
    assert np.abs(acc / N - 2.0 * np.eye(4)).max() <= 0.1


def test_entry_variance():
    rng = np.random.default_rng(1)
    A = sample_operator(1000, 1000, 2.0, rng).matrix
    assert A.var() == pytest.approx(4.0, abs=0.02)


def test_down_up_hand_product():
    op = ProjectionOperator("gaussian", 2, 1, 1.0, np.array([[1.0], [1.0]]))
    np.testing.assert_array_equal(project_down(op, [3.0, 4.0]), [7.0])
    np.testing.assert_array_equal(project_up(op, [7.0]), [7.0, 7.0])


def test_identity_mode(rng):
    op = ProjectionOperator.identity(5)
    v = rng.standard_normal(5)
    np.testing.assert_array_equal(project_down(op, v), v)
    np.testing.assert_array_equal(project_up(op, v), v)
    np.testing.assert_array_equal(project_up(op, project_down(op, v)), v)


def test_zero_maps_to_zero(rng):
    op = sample_operator(8, 3, 1.0, rng)
    assert not project_down(op, np.zeros(8)).any()
    assert not project_up(op, np.zeros(3)).any()


def test_linearity(rng):
    op = sample_operator(30, 10, 1.0, rng)
    u, v = rng.standard_normal(30), rng.standard_normal(30)
    lhs = project_down(op, 2.5 * u - 0.7 * v)
    rhs = 2.5 * project_down(op, u) - 0.7 * project_down(op, v)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def test_lift_second_moments():
    rng = np.random.default_rng(2)
    d, p, N = 6, 3, 100_000
    w = np.array([1.0, -2.0, 0.5])
    A = rng.standard_normal((N, d, p))
    # each of the d output coordinates is N(0, sigma_A^2 |w|^2)
    lift = np.einsum("nij,j->ni", A, w)
    assert np.mean(np.sum(lift**2, axis=1)) == pytest.approx(d * w @ w, rel=0.02)
    # noise eps ~ N(0, s^2 I_p): E|A eps|^2 = d p sigma_A^2 s^2
    s = 1.5
    eps = rng.standard_normal((N, p)) * s
    lift = np.einsum("nij,nj->ni", A, eps)
    assert np.mean(np.sum(lift**2, axis=1)) == pytest.approx(d * p * s * s, rel=0.02)


def test_jl_min_dim_values():
    assert jl_min_dim(1000, 0.5) == 222
    assert jl_min_dim(3, 1 - 1e-9) == 9
    assert jl_min_dim(200, 0.5) == 170


def test_jl_min_dim_monotone():
    zetas = [0.1, 0.3, 0.5, 0.9]
    for m in (2, 10, 1000, 10**6):
        dims = [jl_min_dim(m, z) for z in zetas]
        assert dims == sorted(dims, reverse=True)
    for z in zetas:
        dims = [jl_min_dim(m, z) for m in (2, 10, 1000, 10**6)]
        assert dims == sorted(dims)
    assert jl_min_dim(200, 0.5) > 8 * math.log(200) / 0.25


def test_jl_min_dim_rejects_bad_zeta():
    for z in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ConfigurationError):
            jl_min_dim(10, z)


def test_distortion_identity_and_duplicates(rng):
    pts = rng.standard_normal((10, 20))
    pts[3] = pts[7]
    assert distortion_report(pts, ProjectionOperator.identity(20), 0.1) == 1.0
    op = sample_operator(20, 20, 1.0, rng)
    dup = np.stack([pts[0], pts[0]])
    assert distortion_report(dup, op, 0.1) == 1.0


def test_target_dim():
    assert target_dim(10, 0.3) == 7
    assert target_dim(50, 0.7) == 15
    assert target_dim(3, 0.99) == 1
    assert target_dim(8, 0.0) == 8
    with pytest.raises(ConfigurationError):
        target_dim(8, 1.0)


def test_bad_operator_shapes(rng):
    with pytest.raises(ConfigurationError):
        sample_operator(3, 4, 1.0, rng)
    op = sample_operator(4, 2, 1.0, rng)
    with pytest.raises(ConfigurationError):
        project_down(op, np.zeros(3))
    with pytest.raises(ConfigurationError):
        project_up(op, np.zeros(4))
