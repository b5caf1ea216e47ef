"""
Datasets: CSV loading, standardization, fold splits and synthetic generators.

The 1-D synthetic set draws ``x ~ U(-3, 3)`` and
``y = sin(2x) + 0.5 sin(5x + 1) + 0.3x + ε`` with ``ε ~ N(0, 0.2²)``
(``SYNTHETIC_NOISE_VARIANCE``).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ParseError

log = logging.getLogger(__name__)

REGRESSION = "regression"
CLASSIFICATION = "classification"

SYNTHETIC_RANGE = (-3.0, 3.0)
SYNTHETIC_NOISE_VARIANCE = 0.04


@dataclasses.dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    task: str = REGRESSION
    name: str = ""
    feature_means: np.ndarray | None = None
    feature_stds: np.ndarray | None = None
    target_mean: float = 0.0
    target_std: float = 1.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains NaN or Inf values")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.task == CLASSIFICATION and y.size and not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("classification labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return int(self.X.shape[0])

    @property
    def D(self) -> int:
        return int(self.X.shape[1])

    @property
    def normalized(self) -> bool:
        return self.feature_means is not None

    def subset(self, rows) -> "Dataset":
        return dataclasses.replace(self, X=self.X[rows], y=self.y[rows])

    def inverse_targets(self, y) -> np.ndarray:
        """Map (standardized) regression targets or means back to original units."""
        return np.asarray(y) * self.target_std + self.target_mean

    def inverse_inputs(self, X) -> np.ndarray:
        if self.feature_means is None:
            return np.asarray(X)
        return np.asarray(X) * self.feature_stds + self.feature_means


def load_csv(path, task: str = REGRESSION, target_column: int | str = -1, name: str | None = None) -> Dataset:
    """Read a comma-separated file with a header row.

    Classification targets given as {0, 1} are mapped to {-1, +1}.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path} is empty")
        rows = []
        for r, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", r, len(row))
            values = []
            for c, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"non-numeric cell {cell!r}", r, c) from None
            rows.append(values)
    data = np.asarray(rows, dtype=float).reshape(-1, len(header))
    if isinstance(target_column, str):
        if target_column not in header:
            raise ConfigError(f"target column {target_column!r} not in header")
        target_column = header.index(target_column)
    t = target_column % len(header)
    y = data[:, t]
    X = np.delete(data, t, axis=1)
    if task == CLASSIFICATION:
        labels = set(np.unique(y).tolist())
        if labels <= {0.0, 1.0}:
            y = np.where(y > 0.5, 1.0, -1.0)
    return Dataset(X, y, task, name or path.stem)


def feature_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    means = X.mean(axis=0) if len(X) else np.zeros(X.shape[1])
    stds = X.std(axis=0) if len(X) else np.ones(X.shape[1])
    const = ~(stds > 0)
    if np.any(const):
        log.warning("constant feature columns %s get std=1", np.flatnonzero(const).tolist())
        stds = np.where(const, 1.0, stds)
    return means, stds


def normalize(dataset: Dataset, standardize_targets: bool = True, reference: Dataset | None = None) -> Dataset:
    """Standardize features (and regression targets) to zero mean, unit variance.

    Statistics come from ``reference`` when given (e.g. normalizing a test fold
    with its training fold's statistics), else from ``dataset`` itself. The
    returned dataset carries them, so ``inverse_targets`` recovers original units.
    """
    if dataset.normalized:
        raise DataError("dataset is already normalized")
    ref = reference if reference is not None else dataset
    if ref.normalized:
        means, stds = ref.feature_means, ref.feature_stds
        t_mean, t_std = ref.target_mean, ref.target_std
    else:
        means, stds = feature_stats(ref.X)
        t_mean, t_std = 0.0, 1.0
        if standardize_targets and ref.task == REGRESSION and ref.N:
            t_mean = float(ref.y.mean())
            t_std = float(ref.y.std()) or 1.0
    X = (dataset.X - means) / stds
    y = (dataset.y - t_mean) / t_std if dataset.task == REGRESSION else dataset.y
    return dataclasses.replace(
        dataset, X=X, y=y, feature_means=means, feature_stds=stds,
        target_mean=t_mean, target_std=t_std,
    )


def split_folds(dataset: Dataset, n_folds: int, fold_index: int, seed: int = 0,
                stratify: bool | None = None) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled k-fold split; returns ``(train, test)``.

    Classification data is stratified by label unless ``stratify=False``.
    """
    if n_folds < 2:
        raise ConfigError(f"need at least 2 folds, got {n_folds}")
    if not 0 <= fold_index < n_folds:
        raise ConfigError(f"fold_index {fold_index} out of range for {n_folds} folds")
    rng = np.random.default_rng(seed)
    if stratify is None:
        stratify = dataset.task == CLASSIFICATION
    assignment = np.empty(dataset.N, dtype=np.int64)
    if stratify:
        offset = 0
        for label in np.unique(dataset.y):
            rows = rng.permutation(np.flatnonzero(dataset.y == label))
            assignment[rows] = (np.arange(rows.size) + offset) % n_folds
            offset += rows.size
    else:
        rows = rng.permutation(dataset.N)
        assignment[rows] = np.arange(dataset.N) % n_folds
    test = assignment == fold_index
    return dataset.subset(np.flatnonzero(~test)), dataset.subset(np.flatnonzero(test))


def synthetic_function(x: np.ndarray) -> np.ndarray:
    return np.sin(2 * x) + 0.5 * np.sin(5 * x + 1) + 0.3 * x


def synthetic_1d(n: int, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    x = rng.uniform(*SYNTHETIC_RANGE, size=n)
    y = synthetic_function(x) + np.sqrt(SYNTHETIC_NOISE_VARIANCE) * rng.standard_normal(n)
    return Dataset(x.reshape(-1, 1), y, REGRESSION, "synthetic_1d")


def synthetic_nd(n: int, d: int = 8, seed: int = 0, task: str = REGRESSION) -> Dataset:
    """Smooth random-feature function of ``d`` Gaussian inputs, for scale tests."""
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((d, 16)) / np.sqrt(d)
    b = rng.uniform(0, 2 * np.pi, 16)
    a = rng.standard_normal(16) / 4
    X = rng.standard_normal((n, d))
    f = np.cos(X @ W + b) @ a
    if task == CLASSIFICATION:
        y = np.where(f + 0.1 * rng.standard_normal(n) > 0, 1.0, -1.0)
    else:
        y = f + 0.1 * rng.standard_normal(n)
    return Dataset(X, y, task, f"synthetic_{d}d")


def subsample(dataset: Dataset, max_rows: int, seed: int = 0) -> Dataset:
    """Cap the number of rows with a seeded draw without replacement."""
    if dataset.N <= max_rows:
        return dataset
    rows = np.sort(np.random.default_rng(seed).choice(dataset.N, size=max_rows, replace=False))
    return dataset.subset(rows)


MANIFEST_ENV = "SWSGP_DATA_MANIFEST"


def read_manifest(path=None) -> dict:
    """Dataset manifest: ``{name: {"path", "task", "target_column"}}``.

    Relative paths resolve against the manifest's directory.
    """
    path = path or os.environ.get(MANIFEST_ENV)
    if not path:
        return {}
    path = Path(path)
    entries = json.loads(path.read_text())
    for name, entry in entries.items():
        p = Path(entry["path"])
        entry["path"] = str(p if p.is_absolute() else path.parent / p)
    return entries


def load_named(name: str, options: dict | None = None, manifest: dict | None = None) -> Dataset:
    """Resolve a dataset by name: built-in generators first, then the manifest."""
    options = dict(options or {})
    if name == "synthetic_1d":
        return synthetic_1d(options.get("n", 1000), options.get("seed", 0))
    if name == "synthetic_nd":
        return synthetic_nd(options.get("n", 10000), options.get("d", 8), options.get("seed", 0),
                            options.get("task", REGRESSION))
    manifest = read_manifest() if manifest is None else manifest
    if name not in manifest:
        raise ConfigError(f"unknown dataset {name!r}; not built in and not in the manifest")
    entry = manifest[name]
    return load_csv(entry["path"], entry.get("task", REGRESSION), entry.get("target_column", -1), name)
