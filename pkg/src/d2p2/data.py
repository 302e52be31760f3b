"""Dataset sources: seeded synthetic Gaussian blobs and CSV files."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import streams
from .errors import CSVParseError, ConfigurationError
from .model import Dataset


def generate_synthetic(n: int, d_feat: int, separation: float, seed: int = 0) -> Dataset:
    """Two unit-variance Gaussian blobs centred at ``+-(separation / 2) u``.

    ``u`` is a random unit vector; classes are split evenly (label 1 gets the
    extra sample when ``n`` is odd) and rows are shuffled.
    """
    if n < 2 or d_feat < 1:
        raise ConfigurationError("need n >= 2 and d_feat >= 1")
    rng = streams.keyed_stream(seed, streams.DATA)
    u = rng.standard_normal(d_feat)
    u /= np.linalg.norm(u)
    labels = np.zeros(n)
    labels[n // 2:] = 1.0
    X = rng.standard_normal((n, d_feat)) + np.outer(2.0 * labels - 1.0, u) * (separation / 2.0)
    perm = rng.permutation(n)
    return Dataset(X[perm], labels[perm], n_classes=2)


def train_test_split(data: Dataset, test_fraction: float = 0.2) -> tuple[Dataset, Dataset]:
    """Leading rows train, trailing rows test. Rows are assumed already shuffled."""
    if not 0 < test_fraction < 1:
        raise ConfigurationError("test_fraction must lie in (0, 1)")
    n_test = max(1, int(round(data.n * test_fraction)))
    if n_test >= data.n:
        raise ConfigurationError("dataset too small to split")
    cut = data.n - n_test
    return data.subset(slice(0, cut)), data.subset(slice(cut, data.n))


def load_csv(path) -> Dataset:
    """Read a CSV whose header names a ``label`` column; other columns are features.

    Lines starting with ``#`` are skipped.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1)
                if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise CSVParseError(f"{path}: no data rows")
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if "label" not in header:
        raise CSVParseError(f"{path}:{header_line}: no column named 'label'")
    li = header.index("label")
    body = rows[1:]
    if not body:
        raise CSVParseError(f"{path}: no data rows")
    feats, labels = [], []
    for lineno, r in body:
        if len(r) != len(header):
            raise CSVParseError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(r)}"
            )
        try:
            vals = [float(c) for c in r]
        except ValueError:
            bad = next(c for c in r if not _is_float(c))
            raise CSVParseError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
        labels.append(vals.pop(li))
        feats.append(vals)
    X = np.array(feats, dtype=np.float64).reshape(len(feats), len(header) - 1)
    y = np.array(labels)
    n_classes = None
    if np.all(y == np.round(y)) and y.min() >= 0:
        n_classes = int(y.max()) + 1
    return Dataset(X, y, n_classes=n_classes)


def write_csv(data: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(data.width)] + ["label"])
        for row, lab in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in row] + [repr(float(lab))])


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True
