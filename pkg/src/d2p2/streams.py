"""Keyed random streams.

Every draw in a training run comes from a Philox generator keyed by
``(seed, purpose, step)``. Two draws with the same key are identical no matter
what else was sampled before them, which is what makes variant trajectories
comparable bitwise.
"""
from __future__ import annotations

import numpy as np

PROJECTION = 1
NOISE = 2
SAMPLING = 3
INIT = 4
DATA = 5
SPLIT = 6

_PURPOSES = {
    "projection": PROJECTION,
    "noise": NOISE,
    "sampling": SAMPLING,
    "init": INIT,
    "data": DATA,
    "split": SPLIT,
}


def keyed_stream(seed: int, purpose: int | str, step: int = 0) -> np.random.Generator:
    """Return a fresh generator for one ``(seed, purpose, step)`` key."""
    if isinstance(purpose, str):
        purpose = _PURPOSES[purpose]
    if seed < 0 or step < 0:
        raise ValueError("seed and step must be non-negative")
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(purpose), int(step)])
    return np.random.Generator(np.random.Philox(ss))
