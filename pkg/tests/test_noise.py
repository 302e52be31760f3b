import math

import numpy as np
import pytest

from d2p2.errors import ConfigurationError
from d2p2.noise import NoiseSchedule, sample_noise, schedule_sum, variance_at
from d2p2.streams import keyed_stream


def test_variance_values():
    dyn = NoiseSchedule(3.0, "dynamic")
    assert variance_at(dyn, 1) == 9.0
    assert variance_at(dyn, 4) == 2.25
    st = NoiseSchedule(3.0, "static")
    assert {variance_at(st, k) for k in (1, 2, 100)} == {9.0}
    with pytest.raises(ConfigurationError):
        variance_at(dyn, 0)


def test_dynamic_strictly_decreasing():
    dyn = NoiseSchedule(3.0, "dynamic")
    v = [variance_at(dyn, k) for k in range(1, 2000)]
    assert all(b < a for a, b in zip(v, v[1:]))


def test_schedule_sums():
    assert schedule_sum(NoiseSchedule(1.0, "static"), 5) == 5.0
    assert schedule_sum(NoiseSchedule(1.0, "dynamic"), 4) == pytest.approx(25 / 12, rel=1e-15)


def test_harmonic_bound_spot_checks():
    for K in (1, 2, 10, 1000, 10**6):
        for s in (0.5, 1.0, 3.0):
            assert schedule_sum(NoiseSchedule(s, "dynamic"), K) <= (math.log(K) + 1) * s * s


def test_zero_sigma_is_zero_vector():
    out = sample_noise(NoiseSchedule(0.0, "dynamic"), 3, 7, keyed_stream(0, "noise", 3))
    assert not out.any()


def test_noise_moments():
    z = sample_noise(NoiseSchedule(3.0, "dynamic"), 1, 1_000_000, keyed_stream(5, "noise", 1))
    assert z.var() == pytest.approx(9.0, abs=0.05)
    assert abs(z.mean()) <= 4 * 3.0 / math.sqrt(z.size)


def test_noise_deterministic_per_key():
    s = NoiseSchedule(3.0, "dynamic")
    a = sample_noise(s, 4, 10, keyed_stream(9, "noise", 4))
    b = sample_noise(s, 4, 10, keyed_stream(9, "noise", 4))
    np.testing.assert_array_equal(a, b)
    c = sample_noise(s, 4, 10, keyed_stream(9, "projection", 4))
    assert not np.array_equal(a, c)
