"""Iris-scale datasets: CSV loading, stratified splits, angle scaling."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class Dataset:
    """Train/test features (already scaled to ``[0, pi]``) and integer labels."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    split_seed: int
    classes: tuple

    @property
    def n_features(self) -> int:
        return self.x_train.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def single_class(self, label: int = 0) -> "Dataset":
        """Copy with every label replaced by ``label``."""
        return replace(self, y_train=np.full_like(self.y_train, label), y_test=np.full_like(self.y_test, label))


def read_csv(path) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Numeric feature columns followed by one label column (name or index)."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if not rows:
        raise ValidationError(f"{path} is empty")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    try:
        x = np.array([[float(v) for v in r[:-1]] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"non-numeric feature in {path}: {exc}") from exc
    raw = [r[-1].strip() for r in rows]
    if all(v.lstrip("-").isdigit() for v in raw):
        y = np.array([int(v) for v in raw])
        classes = tuple(str(c) for c in range(y.max() + 1))
    else:
        classes = tuple(dict.fromkeys(raw))
        y = np.array([classes.index(v) for v in raw])
    return x, y, classes


def stratified_split(y: np.ndarray, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays for a per-class shuffled split; every class lands in both parts."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        if idx.size < 2:
            raise ValidationError(f"class {c} has fewer than two samples")
        n_test = min(max(1, int(round(test_fraction * idx.size))), idx.size - 1)
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def minmax_angles(x_train: np.ndarray, x_test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale to ``[0, pi]`` with training statistics; test values are clipped."""
    lo, hi = x_train.min(axis=0), x_train.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    scale = lambda v: np.clip((v - lo) / span * np.pi, 0.0, np.pi)
    return scale(x_train), scale(x_test)


def load_dataset(path=None, split_seed: int = 0, test_fraction: float = 0.2) -> Dataset:
    """Load a CSV (bundled Iris by default), split 80-20 and scale to angles."""
    if path is None:
        with resources.as_file(resources.files("hybridlip") / "data" / "iris.csv") as p:
            x, y, classes = read_csv(p)
    else:
        x, y, classes = read_csv(path)
    tr, te = stratified_split(y, test_fraction, split_seed)
    x_tr, x_te = minmax_angles(x[tr], x[te])
    return Dataset(x_tr, y[tr], x_te, y[te], split_seed, classes)


def load_iris(split_seed: int = 0) -> Dataset:
    return load_dataset(None, split_seed)
