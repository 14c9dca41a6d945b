"""Metrics, grid search and the benchmark harness."""

from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import rankdata
from sklearn.base import clone

from . import kernels
from .data import Dataset, SplitProtocol, benchmark_split
from .kde import GHKernelDensity
from .quadrature import QuadratureError

logger = logging.getLogger(__name__)

__all__ = [
    "BenchmarkTable",
    "ClassificationMetrics",
    "DatasetSource",
    "EvalReport",
    "GridSpec",
    "ModelConfig",
    "auc_roc",
    "benchmark",
    "classification_metrics",
    "evaluate",
    "grid_search",
    "set_nested_params",
]


def auc_roc(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for ties; anomalies (label 1) positive."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0 or n_pos + n_neg != labels.size:
        raise ValueError("AUC needs labels in {0, 1} with both classes present")
    ranks = rankdata(scores)  # average ranks for ties
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    precision: float
    recall: float
    precision_undefined: bool = False


def classification_metrics(predictions, labels) -> ClassificationMetrics:
    """Accuracy, precision and recall with anomaly (1) as the positive class.

    Precision with no predicted positives is reported as 0 and flagged.
    """
    pred = np.asarray(predictions).astype(int)
    true = np.asarray(labels).astype(int)
    if pred.size == 0 or pred.shape != true.shape:
        raise ValueError("predictions and labels must be nonempty and equally long")
    tp = int(np.sum((pred == 1) & (true == 1)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    accuracy = float(np.mean(pred == true))
    undefined = tp + fp == 0
    precision = 0.0 if undefined else tp / (tp + fp)
    recall = tp / (tp + fn) if tp + fn else 0.0
    return ClassificationMetrics(accuracy, precision, recall, undefined)


@dataclass
class EvalReport:
    auc_roc: float
    accuracy: float
    precision: float
    recall: float
    train_time_s: float
    n_hyperparams: int
    n_hyperparams_total: int
    model_desc: str
    protocol_desc: str
    precision_undefined: bool = False


def n_hyperparams(estimator) -> tuple[int, int]:
    """(kernel parameters, kernel parameters + nu or bandwidth)."""
    k = estimator._kernel().n_params
    return k, k + 1


def _describe(estimator) -> str:
    params = {k: v for k, v in estimator.get_params(deep=False).items()}
    return f"{type(estimator).__name__}({', '.join(f'{k}={v!r}' for k, v in params.items())})"


PROTOCOL_NOTES = (
    "fit on development normals only",
    "OCSVM: anomaly iff decision < 0",
    "KDE: anomaly iff score above the (1 - c) quantile of training scores, c = test contamination",
    "train time: cold fit including kernel tabulation, excludes data loading",
)


def _predict_anomalies(estimator, X, contamination: float) -> np.ndarray:
    if isinstance(estimator, GHKernelDensity):
        estimator.choose_threshold(min(max(contamination, 1e-6), 1 - 1e-6))
    return (estimator.predict(X) == -1).astype(int)


def evaluate(estimator, dev: Dataset, test: Dataset, protocol_desc: str = "", cold: bool = True) -> EvalReport:
    """Fit on ``dev`` normals (timed) and score ``test``.

    With ``cold`` the GH table cache is emptied first, so the timing covers
    kernel tabulation as well as the Gram matrix and solve.
    """
    test.require_both_classes()
    model = clone(estimator)
    if cold:
        kernels.clear_table_cache()
    start = time.perf_counter()
    model.fit(dev.normals)
    elapsed = time.perf_counter() - start
    scores = model.anomaly_score(test.features)
    metrics = classification_metrics(_predict_anomalies(model, test.features, test.contamination), test.labels)
    k, total = n_hyperparams(model)
    return EvalReport(
        auc_roc=auc_roc(scores, test.labels),
        accuracy=metrics.accuracy,
        precision=metrics.precision,
        recall=metrics.recall,
        train_time_s=elapsed,
        n_hyperparams=k,
        n_hyperparams_total=total,
        model_desc=_describe(model),
        protocol_desc=protocol_desc or "; ".join(PROTOCOL_NOTES),
        precision_undefined=metrics.precision_undefined,
    )


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


def set_nested_params(estimator, params: dict):
    """Clone ``estimator`` with dotted-path overrides, e.g. ``kernel.variant.alpha``.

    Nested paths rebuild the frozen kernel dataclasses with
    ``dataclasses.replace`` so their validation runs again.
    """
    top = {}
    nested: dict[str, dict] = {}
    for name, value in params.items():
        head, _, rest = name.partition(".")
        if rest:
            nested.setdefault(head, {})[rest] = value
        else:
            top[name] = value
    model = clone(estimator).set_params(**top)
    for head, sub in nested.items():
        obj = getattr(model, head)
        if obj is None and head == "kernel":
            obj = model._kernel()
        model.set_params(**{head: _replace_path(obj, sub)})
    return model


def _replace_path(obj, params: dict):
    direct, deeper = {}, {}
    for name, value in params.items():
        head, _, rest = name.partition(".")
        if rest:
            deeper.setdefault(head, {})[rest] = value
        else:
            direct[head] = value
    for head, sub in deeper.items():
        direct[head] = _replace_path(getattr(obj, head), sub)
    return dataclasses.replace(obj, **direct)


@dataclass
class GridSpec:
    """Parameter grid over dotted estimator paths; selection by validation AUC."""

    params: dict
    validation_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if not self.params or any(len(v) == 0 for v in self.params.values()):
            raise ValueError("grid must be nonempty")

    def combinations(self):
        names = sorted(self.params)
        for values in itertools.product(*(self.params[n] for n in names)):
            yield dict(zip(names, values))


def _sort_key(value):
    if isinstance(value, (int, float)):
        return (0, float(value), "")
    return (1, 0.0, repr(value))


@dataclass
class GridResult:
    best_params: dict
    best_estimator: object
    report: EvalReport
    results: list = field(default_factory=list)


def grid_search(dataset: Dataset, estimator, grid: GridSpec) -> GridResult:
    """Exhaustive search; the winner has the highest validation AUC.

    ``dataset`` must hold normal rows and some anomalies. A seeded
    ``validation_fraction`` of the normals is held out; models fit on the
    remaining normals and are scored on held-out normals plus all anomalies.
    Ties go to fewer hyperparameters, then to the lexicographically smallest
    parameter values (names in sorted order).
    """
    dataset.require_both_classes()
    rng = np.random.default_rng(grid.seed)
    normals = rng.permutation(np.flatnonzero(dataset.labels == 0))
    n_val = max(1, int(round(grid.validation_fraction * normals.size)))
    fit_part = dataset.subset(np.sort(normals[n_val:]))
    val_part = dataset.subset(np.sort(np.concatenate([normals[:n_val], np.flatnonzero(dataset.labels == 1)])))
    protocol = (
        f"grid search: {len(normals) - n_val} fit normals, validation on {n_val} held-out normals "
        f"+ {int(dataset.labels.sum())} anomalies, seed {grid.seed}"
    )

    results = []
    for params in grid.combinations():
        try:
            model = set_nested_params(estimator, params)
            report = evaluate(model, fit_part, val_part, protocol, cold=False)
        except (ValueError, ArithmeticError, QuadratureError) as exc:
            logger.warning("skipping grid point %s: %s", params, exc)
            continue
        key = (-report.auc_roc, report.n_hyperparams_total, tuple(_sort_key(params[n]) for n in sorted(params)))
        results.append((key, params, model, report))
    if not results:
        raise ValueError("every grid combination was invalid")
    _, best_params, best_model, best_report = min(results, key=lambda r: r[0])
    return GridResult(best_params, best_model, best_report, [(p, r.auc_roc) for _, p, _, r in results])


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------


@dataclass
class DatasetSource:
    """A named dataset plus the split protocol used in the benchmark.

    ``load(seed)`` returns the full dataset; deterministic datasets may
    ignore the seed.
    """

    name: str
    load: Callable[[int], Dataset]
    protocol: SplitProtocol = field(default_factory=SplitProtocol)


@dataclass
class ModelConfig:
    """A benchmark row. ``grid`` may be a callable building the grid from the dev split."""

    name: str
    estimator: object
    grid: GridSpec | Callable[[Dataset], GridSpec] | None = None
    section: str = ""


METRICS = ("auc_roc", "accuracy", "precision", "recall", "train_time_s")


@dataclass
class BenchmarkTable:
    rows: list
    cells: list
    seeds: list

    @property
    def show_sd(self) -> bool:
        return len(self.seeds) > 1

    @property
    def failed(self) -> bool:
        return any(c.get("error") for c in self.cells)

    def row(self, dataset: str, model: str) -> dict:
        for r in self.rows:
            if r["dataset"] == dataset and r["model"] == model:
                return r
        raise KeyError((dataset, model))

    def to_json(self) -> str:
        return json.dumps({"seeds": self.seeds, "rows": self.rows, "cells": self.cells}, indent=2, sort_keys=True)

    def to_text(self) -> str:
        cols = ["dataset", "section", "model"]
        for m in METRICS:
            cols.append(m)
            if self.show_sd:
                cols.append(f"{m}_sd")
        cols += ["n_hyperparams", "n_hyperparams_total", "failures"]
        table = [cols]
        for r in self.rows:
            line = []
            for c in cols:
                v = r.get(c, "")
                line.append(f"{v:.4f}" if isinstance(v, float) else str(v))
            table.append(line)
        widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
        return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table) + "\n"


def _run_cell(source: DatasetSource, config: ModelConfig, seed: int, cache: dict) -> dict:
    cell = {"dataset": source.name, "model": config.name, "seed": seed}
    try:
        key = (source.name, seed)
        if key not in cache:
            cache[key] = benchmark_split(source.load(seed), seed, source.protocol)
        dev, test = cache[key]
        estimator = config.estimator
        if config.grid is not None:
            grid = config.grid(dev) if callable(config.grid) else config.grid
            grid = dataclasses.replace(grid, seed=seed)
            found = grid_search(dev, estimator, grid)
            estimator = found.best_estimator
            cell["best_params"] = {k: repr(v) for k, v in found.best_params.items()}
        notes = "; ".join(PROTOCOL_NOTES + tuple(source.protocol.notes))
        report = evaluate(estimator, dev, test, notes)
        cell.update(dataclasses.asdict(report))
    except Exception as exc:  # a failed cell must not stop the others
        logger.error("cell %s / %s / seed %s failed: %s", source.name, config.name, seed, exc)
        cell["error"] = f"{type(exc).__name__}: {exc}"
    return cell


def benchmark(datasets, model_configs, seeds) -> BenchmarkTable:
    """Run every (dataset, model, seed) cell and aggregate mean and SD."""
    if not datasets or not model_configs or not seeds:
        raise ValueError("datasets, model configs and seeds must be nonempty")
    seeds = list(seeds)
    cache: dict = {}
    cells, rows = [], []
    for source in datasets:
        for config in model_configs:
            group = [_run_cell(source, config, seed, cache) for seed in seeds]
            cells.extend(group)
            ok = [c for c in group if "error" not in c]
            row = {"dataset": source.name, "section": config.section, "model": config.name, "failures": len(group) - len(ok)}
            for m in METRICS:
                values = np.array([c[m] for c in ok], dtype=float)
                row[m] = float(values.mean()) if values.size else math.nan
                if len(seeds) > 1:
                    row[f"{m}_sd"] = float(values.std(ddof=1)) if values.size > 1 else math.nan
            if ok:
                row["n_hyperparams"] = ok[0]["n_hyperparams"]
                row["n_hyperparams_total"] = ok[0]["n_hyperparams_total"]
                row["protocol_desc"] = ok[0]["protocol_desc"]
            rows.append(row)
        cache = {}
    return BenchmarkTable(rows, cells, seeds)
