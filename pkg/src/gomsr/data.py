"""Dataset ingestion and the five synthetic ground-truth generators.

CSV files are plain numeric with a comma-separated header row. The
synthetic datasets draw each feature x_i as the (i+1)-th prime times a
uniform [0, 1] sample and compute the target from a known expression built
around re-used subexpressions; generation is a pure function of
(id, n_samples, seed) using numpy's PCG64 generator, so datasets are
reproducible across platforms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23)

SYNTHETIC_FEATURES = {1: 9, 2: 8, 3: 5, 4: 4, 5: 3}
DEFAULT_SYNTHETIC_SAMPLES = 1000


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise ValueError("need at least one feature column")
        if self.features.shape[0] != self.target.shape[0]:
            raise ValueError("feature rows and target length differ")
        if self.features.shape[0] < 2:
            raise ValueError("need at least two samples")
        if len(self.feature_names) != self.features.shape[1]:
            raise ValueError("feature name count does not match columns")
        if not np.isfinite(self.features).all() or not np.isfinite(self.target).all():
            raise ValueError("dataset contains non-finite values")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class TargetStats:
    min_target: float
    max_target: float
    mean: float
    variance: float


def target_stats(d: Dataset) -> TargetStats:
    t = d.target
    return TargetStats(float(t.min()), float(t.max()), float(t.mean()), float(t.var()))


def load_csv(path, target_column) -> Dataset:
    """Load a numeric CSV; `target_column` is a header name or column index."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = [row for row in reader if row]

    if isinstance(target_column, str) and target_column in header:
        target_idx = header.index(target_column)
    else:
        try:
            target_idx = int(target_column)
        except (TypeError, ValueError):
            raise ValueError(f"{path}: missing target column {target_column!r}") from None
        if not 0 <= target_idx < len(header):
            raise ValueError(f"{path}: missing target column {target_column!r}")

    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two data rows")

    values = np.empty((len(rows), len(header)))
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise ValueError(f"{path}: non-numeric cell {cell!r} at row {r + 2}, column {header[c]!r}")
            values[r, c] = v

    keep = [c for c in range(len(header)) if c != target_idx]
    return Dataset(
        features=values[:, keep],
        target=values[:, target_idx],
        feature_names=tuple(header[c] for c in keep),
    )


def save_csv(d: Dataset, path, target_name: str = "target") -> None:
    """Write a dataset in the same format `load_csv` reads (target last)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.feature_names) + [target_name])
        for i in range(d.n_samples):
            writer.writerow([repr(float(v)) for v in d.features[i]] + [repr(float(d.target[i]))])


def _synth_target(dataset_id: int, x: np.ndarray) -> np.ndarray:
    if dataset_id == 1:
        return sum(np.sin(x[:, i] + x[:, 0]) for i in range(1, 9))
    if dataset_id == 2:
        return np.sin(x[:, 2] * x[:, 3]) + sum(np.sin(x[:, i] * x[:, 0]) for i in range(1, 8))
    if dataset_id == 3:
        return sum(np.sqrt(np.abs(np.sin(x[:, i] * x[:, 0]))) for i in range(1, 5))
    if dataset_id == 4:
        f0 = lambda a, b: np.sin(a + b)
        f1 = lambda a, b: np.cos(a * b)
        return f0(f1(x[:, 0], x[:, 1]), f1(x[:, 2], x[:, 3])) + f1(
            f0(x[:, 0], x[:, 1]), f0(x[:, 2], x[:, 3])
        )
    if dataset_id == 5:
        f0 = lambda a, b, c: np.cos(a * np.sin(b / c))
        return (
            f0(x[:, 0], x[:, 1], x[:, 2])
            + f0(x[:, 0], x[:, 2], x[:, 1])
            + f0(x[:, 1], x[:, 0], x[:, 2])
            + f0(x[:, 1], x[:, 2], x[:, 0])
        )
    raise ValueError(f"synthetic dataset id must be 1..5, got {dataset_id}")


def generate_synthetic(dataset_id: int, n_samples: int = DEFAULT_SYNTHETIC_SAMPLES, seed: int = 0) -> Dataset:
    """Synthetic dataset `dataset_id` with per-(sample, feature) uniform draws."""
    if dataset_id not in SYNTHETIC_FEATURES:
        raise ValueError(f"synthetic dataset id must be 1..5, got {dataset_id}")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    n_features = SYNTHETIC_FEATURES[dataset_id]
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n_samples, n_features)) * np.array(_PRIMES[:n_features])
    return Dataset(
        features=x,
        target=_synth_target(dataset_id, x),
        feature_names=tuple(f"x{i}" for i in range(n_features)),
    )
