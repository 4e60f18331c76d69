"""Datasets: CSV loading, PCA reduction to three angles, and a synthetic circle task."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or unusable dataset."""


@dataclass(frozen=True)
class Dataset:
    """Features of shape ``(n, 3)`` (angles in radians) and binary labels of shape ``(n,)``."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(f"{X.shape[0]} feature rows but labels of shape {y.shape}")
        if y.size and not np.isin(y, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        if not np.isfinite(X).all():
            raise DataError("features must be finite")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(int))

    def __len__(self):
        return int(self.labels.shape[0])

    def subset(self, idx, name=None):
        return Dataset(self.features[idx], self.labels[idx], name or self.name)


def load_csv(path, has_header=None):
    """Read a CSV whose last column is a 0/1 label and the rest are features.

    ``has_header=None`` treats the first row as a header when any of its cells
    is not a number.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} contains no rows")
    if has_header is None:
        has_header = not all(_is_number(c) for c in rows[0])
    first_line = 2 if has_header else 1
    if has_header:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path} contains a header but no data")
    width = len(rows[0])
    if width < 2:
        raise DataError("need at least one feature column and a label column")
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = first_line + i
        if len(row) != width:
            raise DataError(f"row {line}: expected {width} columns, found {len(row)}")
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(f"row {line}, column {j + 1}: not a number: {cell!r}") from None
            if not math.isfinite(values[i, j]):
                raise DataError(f"row {line}, column {j + 1}: value is not finite")
    labels = values[:, -1]
    bad = np.flatnonzero(~np.isin(labels, (0.0, 1.0)))
    if bad.size:
        raise DataError(f"row {first_line + bad[0]}: labels must be 0 or 1, got {labels[bad[0]]:g}")
    return values[:, :-1], labels.astype(int)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def pca_reduce(X, n_components=3):
    """Project centred ``X`` onto its leading principal axes and rescale each to ``[-pi, pi]``.

    Axes are ordered by decreasing variance; each axis's sign is fixed so that its
    largest-magnitude loading is positive, which makes the output deterministic.
    Components that are constant map to zero.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("features must be a 2-D array")
    n, d = X.shape
    if n < n_components + 1:
        raise DataError(f"PCA to {n_components} components needs at least {n_components + 1} samples, got {n}")
    if d < n_components:
        raise DataError(f"PCA to {n_components} components needs at least {n_components} feature columns, got {d}")
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (n - 1)
    w, v = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1][:n_components]
    w, v = w[order], v[:, order]
    if w[-1] <= 1e-12 * max(w[0], 1e-300):
        raise DataError(f"data has rank below {n_components}; cannot extract {n_components} components")
    pivots = np.argmax(np.abs(v), axis=0)
    v = v * np.sign(v[pivots, np.arange(n_components)])
    Z = Xc @ v
    lo, hi = Z.min(axis=0), Z.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.where(hi > lo, -math.pi + 2 * math.pi * (Z - lo) / span, 0.0)


def dataset_from_csv(path, has_header=None, reduce=True):
    """Load a CSV; reduce to three PCA angles, or use three angle columns as given."""
    X, y = load_csv(path, has_header)
    if reduce:
        X = pca_reduce(X)
    elif X.shape[1] != 3:
        raise DataError(f"expected 3 feature columns without PCA, got {X.shape[1]}")
    return Dataset(X, y, Path(path).stem)


def synth_circle(n, seed=0):
    """Points uniform in ``[-1, 1]^2`` labelled 1 inside the circle of area 2 (radius^2 = 2/pi).

    Features are ``(pi x1, pi x2, 0)`` so the classes are balanced in expectation.
    """
    if n < 2:
        raise DataError("need at least two samples")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-1.0, 1.0, size=(n, 2))
    y = (np.sum(xy**2, axis=1) < 2 / math.pi).astype(int)
    X = np.column_stack([math.pi * xy, np.zeros(n)])
    return Dataset(X, y, "circle")


def split(ds, n_train, n_test, seed=0):
    """Seeded shuffle, then the first ``n_train`` samples train and the next ``n_test`` test."""
    n_train, n_test = int(n_train), int(n_test)
    if n_train < 1 or n_test < 0:
        raise DataError("n_train must be positive and n_test non-negative")
    if n_train + n_test > len(ds):
        raise DataError(f"requested {n_train} + {n_test} samples but the dataset has {len(ds)}")
    perm = np.random.default_rng(seed).permutation(len(ds))
    train = ds.subset(perm[:n_train], ds.name + "-train")
    test = ds.subset(perm[n_train:n_train + n_test], ds.name + "-test")
    return train, test


def save_csv(ds, path):
    """Write features and labels with a header row."""
    path = Path(path)
    d = ds.features.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(d)] + ["label"])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])
