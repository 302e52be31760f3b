"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Prints one line per kernel and problem size with the best time for each
backend and the speedup of the compiled one.
"""
import argparse
import timeit

import numpy as np

from d2p2 import kernels

CASES = [
    ("clip_mean", dict(B=256, d=50)),
    ("clip_mean", dict(B=256, d=5000)),
    ("logistic_grads", dict(B=256, d=50)),
    ("logistic_grads", dict(B=1024, d=784)),
    ("mlp_grads", dict(B=256, m=50, h=32, c=2)),
    ("mlp_grads", dict(B=256, m=784, h=64, c=10)),
]


def make_call(backend, name, rng, B, d=None, m=None, h=None, c=None):
    if name == "clip_mean":
        G = rng.standard_normal((B, d))
        return lambda: backend.clip_mean(G, 0.01, 1.0, kernels.CLIP_AUTO)
    if name == "logistic_grads":
        X = rng.standard_normal((B, d))
        y = (rng.random(B) < 0.5).astype(np.float64)
        w = rng.standard_normal(d)
        return lambda: backend.logistic_grads(X, y, w)
    X = rng.standard_normal((B, m))
    labels = rng.integers(0, c, B).astype(np.int64)
    theta = 0.1 * rng.standard_normal(h * m + h + c * h + c)
    return lambda: backend.mlp_grads(X, labels, theta, m, h, c)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    try:
        compiled = kernels.get_backend("cython")
    except ImportError:
        compiled = None
        print("compiled extension not built; timing numpy only")
    fallback = kernels.get_backend("numpy")

    print(f"{'kernel':<16}{'size':<28}{'numpy ms':>10}{'cython ms':>11}{'speedup':>9}")
    for name, size in CASES:
        row = []
        for backend in (fallback, compiled):
            if backend is None:
                row.append(float("nan"))
                continue
            call = make_call(backend, name, np.random.default_rng(0), **size)
            call()
            row.append(1e3 * min(timeit.repeat(call, number=1, repeat=args.repeat)))
        label = ",".join(f"{k}={v}" for k, v in size.items())
        print(f"{name:<16}{label:<28}{row[0]:>10.3f}{row[1]:>11.3f}{row[0] / row[1]:>8.2f}x")


if __name__ == "__main__":
    main()
