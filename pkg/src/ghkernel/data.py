"""Datasets: the synthetic manifold benchmark and delimited-text ingestion.

Randomness always comes from ``numpy.random.default_rng(seed)``, i.e. the
PCG64 bit generator, so a seed reproduces the same data on every platform.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.preprocessing import StandardScaler

logger = logging.getLogger(__name__)

__all__ = [
    "Dataset",
    "DataFormatError",
    "EmptyClassError",
    "FORESTCOVER",
    "KDDCUP99",
    "PreprocessSpec",
    "Subsample",
    "benchmark_split",
    "generate_synthetic",
    "load_csv",
    "split",
    "standardize_on_normals",
    "write_csv",
]

GENERATOR_VERSION = "manifolds-1"
NOISE = 0.08
EXCLUSION = 0.15


class DataFormatError(ValueError):
    pass


class EmptyClassError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    seed: int | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features must be (n, d) with one label per row")
        if not np.all(np.isfinite(self.features)):
            raise DataFormatError("features contain NaN or Inf")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ValueError("labels must be 0 (normal) or 1 (anomaly)")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def normals(self) -> np.ndarray:
        return self.features[self.labels == 0]

    @property
    def contamination(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0

    def subset(self, idx, name=None) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], name or self.name, self.seed)

    def require_both_classes(self):
        if not (np.any(self.labels == 0) and np.any(self.labels == 1)):
            raise EmptyClassError(f"{self.name}: evaluation requires both normal and anomalous examples")


# ---------------------------------------------------------------------------
# Synthetic manifolds
# ---------------------------------------------------------------------------

# (center_x, center_y, radius, start_angle, end_angle); the ring is a full arc.
_ARCS = (
    (0.0, 0.0, 1.0, 0.0, math.pi),
    (1.0, 0.5, 1.0, math.pi, 2.0 * math.pi),
    (0.5, -1.5, 0.5, 0.0, 2.0 * math.pi),
)
# Shift so the union of centerlines is centred on the origin.
_SHIFT = np.array([-0.5, 0.5])


def _distance_to_arc(points, arc):
    cx, cy, radius, a0, a1 = arc
    rel = points - (np.array([cx, cy]) + _SHIFT)
    dist = np.hypot(rel[:, 0], rel[:, 1])
    on_circle = np.abs(dist - radius)
    if a1 - a0 >= 2.0 * math.pi:
        return on_circle
    theta = np.mod(np.arctan2(rel[:, 1], rel[:, 0]) - a0, 2.0 * math.pi)
    ends = [radius * np.array([math.cos(a), math.sin(a)]) for a in (a0, a1)]
    to_ends = np.minimum(*(np.hypot(*(rel - e).T) for e in ends))
    return np.where(theta <= a1 - a0, on_circle, to_ends)


def distance_to_manifolds(points) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.min([_distance_to_arc(points, arc) for arc in _ARCS], axis=0)


def generate_synthetic(seed: int = 0, n_normal: int = 1000, n_anomaly: int = 50) -> Dataset:
    """Two interleaved crescents plus a ring, with scattered anomalies.

    Normal points are spread evenly over the three manifolds with isotropic
    Gaussian noise (sd 0.08). Anomalies are uniform over the normal data's
    bounding box enlarged by 20%, keeping only points farther than 0.15 from
    every manifold centerline.
    """
    if n_normal < 1 or n_anomaly < 1:
        raise EmptyClassError("n_normal and n_anomaly must both be >= 1")
    rng = np.random.default_rng(seed)
    parts = []
    for arc, count in zip(_ARCS, np.array_split(np.arange(n_normal), len(_ARCS))):
        cx, cy, radius, a0, a1 = arc
        theta = rng.uniform(a0, a1, size=count.size)
        pts = np.column_stack([cx + radius * np.cos(theta), cy + radius * np.sin(theta)]) + _SHIFT
        parts.append(pts + rng.normal(0.0, NOISE, size=pts.shape))
    normal = np.concatenate(parts)

    lo, hi = normal.min(axis=0), normal.max(axis=0)
    mid, half = 0.5 * (lo + hi), 0.6 * (hi - lo)
    anomalies = np.empty((0, 2))
    while anomalies.shape[0] < n_anomaly:
        cand = rng.uniform(mid - half, mid + half, size=(4 * n_anomaly, 2))
        anomalies = np.concatenate([anomalies, cand[distance_to_manifolds(cand) > EXCLUSION]])
    anomalies = anomalies[:n_anomaly]

    features = np.concatenate([normal, anomalies])
    labels = np.concatenate([np.zeros(n_normal, int), np.ones(n_anomaly, int)])
    return Dataset(features, labels, name="synthetic", seed=seed)


# ---------------------------------------------------------------------------
# Delimited text
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Subsample:
    n_normal: int
    n_anomaly: int
    seed: int = 0


@dataclass(frozen=True)
class PreprocessSpec:
    """How to turn a raw delimited file into a Dataset.

    ``anomaly_labels=None`` treats every label outside ``normal_labels`` as
    an anomaly; otherwise rows matching neither set are dropped. With
    ``categories`` given, values outside a column's vocabulary encode as all
    zeros (with a logged diagnostic); otherwise the vocabulary is read off
    the file. ``standardize`` z-scores every non-constant column with
    statistics of the normal rows only.
    """

    label_column: int = -1
    normal_labels: tuple = ("0",)
    anomaly_labels: tuple | None = ("1",)
    categorical_columns: tuple = ()
    categories: dict | None = None
    standardize: bool = False
    subsample: Subsample | None = None
    header: bool | None = None
    name: str = "csv"


KDDCUP99 = PreprocessSpec(
    label_column=41,
    normal_labels=("normal.", "normal"),
    anomaly_labels=None,
    categorical_columns=(1, 2, 3),
    name="kddcup99",
)
FORESTCOVER = PreprocessSpec(
    label_column=54,
    normal_labels=("2",),
    anomaly_labels=("4",),
    name="forestcover",
)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, spec: PreprocessSpec = PreprocessSpec()) -> Dataset:
    """Parse, label, one-hot encode, optionally subsample and standardize."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), start=1) if row]
    if not rows:
        raise EmptyClassError(f"{path}: no rows")
    width = len(rows[0][1])
    label_col = spec.label_column % width
    categorical = sorted(c % width for c in spec.categorical_columns)

    header = spec.header
    if header is None:
        first = rows[0][1]
        header = any(not _is_number(first[c].strip()) for c in range(width) if c != label_col and c not in categorical)
    if header:
        rows = rows[1:]

    normal_set = {str(x) for x in spec.normal_labels}
    anomaly_set = None if spec.anomaly_labels is None else {str(x) for x in spec.anomaly_labels}
    numeric_cols = [c for c in range(width) if c != label_col and c not in categorical]
    kept, labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DataFormatError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
        raw = row[label_col].strip()
        if raw in normal_set:
            labels.append(0)
        elif anomaly_set is None or raw in anomaly_set:
            labels.append(1)
        else:
            continue
        kept.append((lineno, row))

    numeric = np.empty((len(kept), len(numeric_cols)))
    for r, (lineno, row) in enumerate(kept):
        for c_out, c in enumerate(numeric_cols):
            try:
                numeric[r, c_out] = float(row[c])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: column {c} is not numeric: {row[c]!r}") from None

    blocks = [numeric]
    for c in categorical:
        values = [row[c].strip() for _, row in kept]
        vocab = list(spec.categories[c]) if spec.categories and c in spec.categories else sorted(set(values))
        index = {v: i for i, v in enumerate(vocab)}
        onehot = np.zeros((len(kept), len(vocab)))
        unknown = 0
        for r, v in enumerate(values):
            if v in index:
                onehot[r, index[v]] = 1.0
            else:
                unknown += 1
        if unknown:
            logger.warning("%s: column %d has %d values outside its category list; encoded as zeros", path, c, unknown)
        blocks.append(onehot)

    dataset = Dataset(np.hstack(blocks), np.array(labels, dtype=int), name=spec.name)
    if not np.any(dataset.labels == 0) or not np.any(dataset.labels == 1):
        raise EmptyClassError(f"{path}: need rows of both classes after applying label rules")
    if spec.subsample is not None:
        dataset = _subsample(dataset, spec.subsample)
    if spec.standardize:
        dataset = standardize_on_normals(dataset)[0]
    return dataset


def _subsample(dataset: Dataset, sub: Subsample) -> Dataset:
    rng = np.random.default_rng(sub.seed)
    picks = []
    for label, want in ((0, sub.n_normal), (1, sub.n_anomaly)):
        pool = np.flatnonzero(dataset.labels == label)
        if want > pool.size:
            logger.warning("%s: asked for %d rows of class %d, only %d available", dataset.name, want, label, pool.size)
        picks.append(np.sort(rng.permutation(pool)[: min(want, pool.size)]))
    return dataset.subset(np.concatenate(picks))


def standardize_on_normals(fit_on: Dataset, *others: Dataset):
    """Z-score columns with statistics of ``fit_on``'s normal rows only.

    Constant columns keep unit scale. Returns the transformed ``fit_on``
    followed by each of ``others``.
    """
    scaler = StandardScaler().fit(fit_on.normals)
    return tuple(replace(ds, features=scaler.transform(ds.features)) for ds in (fit_on, *others))


def write_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j}" for j in range(dataset.n_features)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


def split(dataset: Dataset, train_fraction: float = 0.8, train_on_normal_only: bool = False, seed: int = 0):
    """Deterministic shuffled split into (train, test).

    With ``train_on_normal_only`` the training side draws only from normal
    rows and every anomaly goes to the test side.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction!r}")
    rng = np.random.default_rng(seed)
    if train_on_normal_only:
        pool = rng.permutation(np.flatnonzero(dataset.labels == 0))
        n_train = int(round(train_fraction * pool.size))
        train_idx = pool[:n_train]
        test_idx = np.concatenate([pool[n_train:], rng.permutation(np.flatnonzero(dataset.labels == 1))])
    else:
        perm = rng.permutation(len(dataset))
        n_train = int(round(train_fraction * len(dataset)))
        train_idx, test_idx = perm[:n_train], perm[n_train:]
    if train_idx.size == 0 or test_idx.size == 0:
        raise ValueError("split leaves an empty side")
    return dataset.subset(train_idx, f"{dataset.name}-train"), dataset.subset(test_idx, f"{dataset.name}-test")


@dataclass(frozen=True)
class SplitProtocol:
    """Benchmark split sizes; None means "derive from train_fraction"."""

    train_fraction: float = 0.8
    n_train_normal: int | None = None
    n_test: int | None = None
    test_contamination: float | None = None
    standardize: bool = False
    notes: tuple = field(default_factory=tuple)


def benchmark_split(dataset: Dataset, seed: int, protocol: SplitProtocol = SplitProtocol()):
    """Split into a development set and a test set.

    Development gets the training normals plus half of the anomalies (used
    only to validate hyperparameters); test gets held-out normals and the
    other half of the anomalies, resampled to ``test_contamination`` when
    set. Models are fitted on development normals only.
    """
    rng = np.random.default_rng(seed)
    normals = rng.permutation(np.flatnonzero(dataset.labels == 0))
    anomalies = rng.permutation(np.flatnonzero(dataset.labels == 1))
    if normals.size < 2 or anomalies.size < 2:
        raise EmptyClassError(f"{dataset.name}: need at least two rows of each class")
    n_dev_anom = anomalies.size // 2
    dev_anom, test_anom = anomalies[:n_dev_anom], anomalies[n_dev_anom:]

    n_train = protocol.n_train_normal or int(round(protocol.train_fraction * normals.size))
    dev_norm, test_norm = normals[:n_train], normals[n_train:]
    if protocol.n_test is not None:
        c = protocol.test_contamination if protocol.test_contamination is not None else dataset.contamination
        want_anom = int(round(c * protocol.n_test))
        if want_anom > test_anom.size:
            raise EmptyClassError(f"{dataset.name}: {test_anom.size} test anomalies available, protocol needs {want_anom}")
        test_anom = test_anom[:want_anom]
        test_norm = test_norm[: protocol.n_test - want_anom]
    elif protocol.test_contamination is not None:
        c = protocol.test_contamination
        want_anom = int(round(c * test_norm.size / (1.0 - c)))
        test_anom = test_anom[: min(want_anom, test_anom.size)]
    if dev_norm.size < 2 or test_norm.size < 1 or test_anom.size < 1:
        raise EmptyClassError(f"{dataset.name}: protocol leaves a split without both classes")

    dev = dataset.subset(np.concatenate([dev_norm, dev_anom]), f"{dataset.name}-dev")
    test = dataset.subset(np.concatenate([test_norm, test_anom]), f"{dataset.name}-test")
    if protocol.standardize:
        dev, test = standardize_on_normals(dev, test)
    return dev, test
