"""Command-line entry point: ``ghkernel <command> [--config FILE] [--set key=value ...]``.

Commands: generate, fit, score, benchmark, export-boundary. Every command
reads a JSON config (optional), applies ``--set`` overrides (dotted keys,
values parsed as JSON when possible), validates everything before doing any
work, and writes its outputs atomically into ``out_dir`` together with the
resolved config.

Exit status: 0 ok, 2 config, 3 data, 4 numeric, 5 I/O, 6 some benchmark
cells failed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import presets
from .data import GENERATOR_VERSION, DataFormatError, Dataset, EmptyClassError, PreprocessSpec, generate_synthetic, load_csv
from .evaluation import DatasetSource, GridSpec, ModelConfig, benchmark
from .ghdist import InvalidParameterError
from .kde import GHKernelDensity
from .kernels import kernel_from_dict
from .ocsvm import GHOneClassSVM, InfeasibleNuError
from .quadrature import QuadratureError
from .serialization import MODEL_FORMAT, ModelFormatError, atomic_write_text, dumps_model, load_model

logger = logging.getLogger("ghkernel")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_IO, EXIT_PARTIAL = 0, 2, 3, 4, 5, 6
REPORT_FORMAT = "ghkernel-report/1"


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

_MODEL_DEFAULTS = {
    "type": "ocsvm",
    "kernel": {"family": "gh", "variant": {"tag": "full_gh"}},
    "nu": 0.1,
    "tol": 1e-6,
    "max_iter": None,
    "bandwidth": "scott",
    "contamination": None,
}

DEFAULTS = {
    "generate": {"seed": 0, "out_dir": ".", "n_normal": 1000, "n_anomaly": 50, "name": "synthetic"},
    "fit": {
        "seed": 0,
        "out_dir": ".",
        "data": None,
        "dataset": {"preset": None, "label_column": -1, "normal_labels": ["0"], "anomaly_labels": ["1"]},
        "train_on": "normal",
        "model": _MODEL_DEFAULTS,
        "name": "model",
    },
    "score": {
        "seed": 0,
        "out_dir": ".",
        "model": None,
        "data": None,
        "dataset": {"preset": None, "label_column": -1, "normal_labels": ["0"], "anomaly_labels": ["1"]},
        "name": "scores",
    },
    "benchmark": {
        "seed": 0,
        "seeds": [0],
        "out_dir": ".",
        "datasets": [{"kind": "synthetic", "n_normal": 1000, "n_anomaly": 50}],
        "models": "ocsvm",
        "nu": 0.05,
        "name": "benchmark",
    },
    "export-boundary": {
        "seed": 0,
        "out_dir": ".",
        "model": None,
        "data": None,
        "dataset": {"preset": None, "label_column": -1, "normal_labels": ["0"], "anomaly_labels": ["1"]},
        "grid_size": 300,
        "inflate": 0.1,
        "bins": 50,
        "name": "boundary",
    },
}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _set_path(config: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = config
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key not in ("kernel", "variant"):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve_config(command: str, config_path=None, overrides=(), seed=None, out_dir=None) -> dict:
    """Defaults, then the config file, then ``--set`` pairs, then ``--seed``/``--out-dir``."""
    user: dict = {}
    if config_path is not None:
        try:
            user = json.loads(Path(config_path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{config_path}: invalid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{config_path}: top level must be an object")
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        _set_path(user, key, _parse_value(text))
    if seed is not None:
        user["seed"] = seed
        if command == "benchmark":
            user["seeds"] = [seed]
    if out_dir is not None:
        user["out_dir"] = out_dir
    unknown = sorted(set(user) - set(DEFAULTS[command]))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    return _merge(DEFAULTS[command], user)


def _require_file(config: dict, key: str) -> Path:
    value = config.get(key)
    if not value:
        raise ConfigError(f"'{key}' is required")
    path = Path(value)
    if not path.is_file():
        raise ConfigError(f"{key} file not found: {path}")
    return path


def _int(config, key, minimum):
    value = config[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def _preprocess_spec(cfg: dict) -> PreprocessSpec:
    preset = cfg.get("preset")
    if preset is not None:
        if preset not in presets.REAL_PROTOCOLS:
            raise ConfigError(f"unknown dataset preset {preset!r}")
        return presets.REAL_PROTOCOLS[preset][0]
    anomaly = cfg.get("anomaly_labels")
    return PreprocessSpec(
        label_column=int(cfg.get("label_column", -1)),
        normal_labels=tuple(str(v) for v in cfg.get("normal_labels", ["0"])),
        anomaly_labels=None if anomaly is None else tuple(str(v) for v in anomaly),
        header=cfg.get("header"),
    )


def build_estimator(cfg: dict):
    """An unfitted estimator from a model config block; raises ConfigError."""
    try:
        kernel = kernel_from_dict(cfg["kernel"])
        if cfg["type"] == "ocsvm":
            nu = cfg["nu"]
            if not isinstance(nu, (int, float)) or not 0.0 < nu <= 1.0:
                raise ConfigError(f"model.nu must lie in (0, 1], got {nu!r}")
            tol = cfg["tol"]
            if not isinstance(tol, (int, float)) or not tol > 0:
                raise ConfigError(f"model.tol must be > 0, got {tol!r}")
            return GHOneClassSVM(kernel, nu=float(nu), tol=float(tol), max_iter=cfg["max_iter"])
        if cfg["type"] == "kde":
            bandwidth = cfg["bandwidth"]
            if bandwidth != "scott" and (not isinstance(bandwidth, (int, float)) or not bandwidth > 0):
                raise ConfigError(f"model.bandwidth must be 'scott' or > 0, got {bandwidth!r}")
            c = cfg["contamination"]
            if c is not None and not 0.0 < c < 1.0:
                raise ConfigError(f"model.contamination must lie in (0, 1), got {c!r}")
            return GHKernelDensity(kernel, bandwidth=bandwidth, contamination=c)
        raise ConfigError(f"model.type must be 'ocsvm' or 'kde', got {cfg['type']!r}")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model config: {exc}") from None


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _out_dir(config) -> Path:
    path = Path(config["out_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _report_text(doc: dict) -> str:
    return f"{REPORT_FORMAT}\n{json.dumps(doc, indent=2, sort_keys=True, allow_nan=True)}\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _dataset_csv(dataset: Dataset) -> str:
    return _csv_text(
        [f"x{j}" for j in range(dataset.n_features)] + ["label"],
        ([repr(float(v)) for v in row] + [int(label)] for row, label in zip(dataset.features, dataset.labels)),
    )


def _write_config(out: Path, name: str, command: str, config: dict) -> None:
    atomic_write_text(out / f"{name}.config.json", json.dumps({"command": command, **config}, indent=2, sort_keys=True) + "\n")


def _load_data(config) -> Dataset:
    return load_csv(Path(config["data"]), _preprocess_spec(config["dataset"]))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_generate(config) -> int:
    n_normal = _int(config, "n_normal", 1)
    n_anomaly = _int(config, "n_anomaly", 0)
    if n_anomaly == 0:
        raise ConfigError("n_anomaly must be >= 1: evaluation requires both classes")
    seed = _int(config, "seed", 0)
    out = _out_dir(config)
    dataset = generate_synthetic(seed, n_normal, n_anomaly)
    name = config["name"]
    atomic_write_text(out / f"{name}.csv", _dataset_csv(dataset))
    manifest = {
        "generator_version": GENERATOR_VERSION,
        "seed": seed,
        "n_normal": n_normal,
        "n_anomaly": n_anomaly,
        "rows": len(dataset),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    atomic_write_text(out / f"{name}.manifest.json", _report_text(manifest))
    _write_config(out, name, "generate", config)
    logger.info("wrote %d rows to %s", len(dataset), out / f"{name}.csv")
    return EXIT_OK


def cmd_fit(config) -> int:
    _require_file(config, "data")
    estimator = build_estimator(config["model"])
    if config["train_on"] not in ("normal", "all"):
        raise ConfigError(f"train_on must be 'normal' or 'all', got {config['train_on']!r}")
    out = _out_dir(config)
    dataset = _load_data(config)
    X = dataset.normals if config["train_on"] == "normal" else dataset.features
    if isinstance(estimator, GHOneClassSVM) and estimator.nu * X.shape[0] < 1:
        raise ConfigError(f"nu * n = {estimator.nu * X.shape[0]:.3g} < 1 for {X.shape[0]} training rows")
    start = time.perf_counter()
    estimator.fit(X)
    elapsed = time.perf_counter() - start

    name = config["name"]
    atomic_write_text(out / f"{name}.ghkm", dumps_model(estimator))
    diagnostics = {"model_format": MODEL_FORMAT, "n_train": int(X.shape[0]), "n_features": int(X.shape[1]), "train_time_s": elapsed}
    if isinstance(estimator, GHOneClassSVM):
        diagnostics.update(
            rho=estimator.rho_,
            n_iter=estimator.n_iter_,
            converged=estimator.converged_,
            kkt_violation=estimator.kkt_violation_,
            objective=estimator.objective_,
            support_fraction=estimator.support_fraction_,
            training_outlier_fraction=estimator.training_outlier_fraction_,
            gram_jitter=estimator.gram_jitter_,
        )
    else:
        diagnostics.update(
            bandwidth=estimator.bandwidth_, log_norm_const=estimator.log_norm_const_, threshold=estimator.threshold_
        )
    atomic_write_text(out / f"{name}.fit.json", _report_text(diagnostics))
    _write_config(out, name, "fit", config)
    return EXIT_OK


def _load_model(config):
    _require_file(config, "model")
    try:
        return load_model(config["model"])
    except ModelFormatError as exc:
        raise DataError(f"{config['model']}: {exc}") from None


def _check_dims(model, dataset: Dataset):
    if dataset.n_features != model.n_features_in_:
        raise DataError(f"data has {dataset.n_features} features, model expects {model.n_features_in_}")


def cmd_score(config) -> int:
    _require_file(config, "data")
    model = _load_model(config)
    out = _out_dir(config)
    dataset = _load_data(config)
    _check_dims(model, dataset)
    score = model.anomaly_score(dataset.features)
    if isinstance(model, GHOneClassSVM):
        decision = model.decision_function(dataset.features)
        prediction = model.predict(dataset.features)
    else:
        decision = -score
        prediction = model.predict(dataset.features) if model.threshold_ is not None else np.zeros(len(dataset), dtype=int)
    rows = (
        [i, repr(float(s)), repr(float(d)), int(p), int(label)]
        for i, (s, d, p, label) in enumerate(zip(score, decision, prediction, dataset.labels))
    )
    name = config["name"]
    atomic_write_text(out / f"{name}.csv", _csv_text(["row", "score", "decision", "prediction", "label"], rows))
    _write_config(out, name, "score", config)
    return EXIT_OK


def _dataset_sources(config) -> list[DatasetSource]:
    entries = config["datasets"]
    if not isinstance(entries, list) or not entries:
        raise ConfigError("datasets must be a nonempty list")
    sources = []
    for entry in entries:
        kind = entry.get("kind", "synthetic")
        if kind == "synthetic":
            n_normal, n_anomaly = entry.get("n_normal", 1000), entry.get("n_anomaly", 50)
            if n_anomaly < 2 or n_normal < 4:
                raise ConfigError("synthetic dataset needs n_anomaly >= 2 and n_normal >= 4")
            sources.append(presets.synthetic_source(n_normal, n_anomaly))
        elif kind in presets.REAL_PROTOCOLS:
            path = entry.get("path")
            if not path or not Path(path).is_file():
                raise ConfigError(f"{kind}: dataset file not found: {path!r}")
            sources.append(presets.real_data_source(kind, path))
        else:
            raise ConfigError(f"unknown dataset kind {kind!r}")
    return sources


def _model_configs(config) -> list[ModelConfig]:
    models = config["models"]
    nu = config["nu"]
    if not isinstance(nu, (int, float)) or not 0.0 < nu <= 1.0:
        raise ConfigError(f"nu must lie in (0, 1], got {nu!r}")
    named = {"ocsvm": presets.ocsvm_models(nu), "kde": presets.kde_models()}
    if isinstance(models, str):
        if models == "table1":
            return named["ocsvm"] + named["kde"]
        if models not in named:
            raise ConfigError(f"models must be 'ocsvm', 'kde', 'table1' or a list, got {models!r}")
        return named[models]
    if not isinstance(models, list) or not models:
        raise ConfigError("models must be a nonempty list")
    out = []
    for entry in models:
        if isinstance(entry, str):
            # "OCSVM:Full GH" or "KDE:Gaussian"
            section, _, row = entry.partition(":")
            matches = [m for m in named.get(section.lower(), []) if m.name == row]
            if not matches:
                raise ConfigError(f"unknown preset model {entry!r}")
            out.append(matches[0])
        else:
            block = _merge(_MODEL_DEFAULTS, entry.get("model", {}))
            estimator = build_estimator(block)
            grid = GridSpec({k: list(v) for k, v in entry["grid"].items()}) if entry.get("grid") else None
            out.append(ModelConfig(entry.get("name", block["type"]), estimator, grid, block["type"].upper()))
    return out


def cmd_benchmark(config) -> int:
    seeds = config["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError(f"seeds must be a nonempty list of nonnegative integers, got {seeds!r}")
    sources = _dataset_sources(config)
    models = _model_configs(config)
    out = _out_dir(config)
    table = benchmark(sources, models, seeds)
    name = config["name"]
    doc = {"seeds": table.seeds, "rows": table.rows}
    atomic_write_text(out / f"{name}.json", _report_text(doc))
    atomic_write_text(out / f"{name}.cells.json", _report_text({"cells": table.cells}))
    atomic_write_text(out / f"{name}.txt", f"# {REPORT_FORMAT}\n" + table.to_text())
    _write_config(out, name, "benchmark", config)
    sys.stdout.write(table.to_text())
    if table.failed:
        logger.error("%d benchmark cells failed", sum(1 for c in table.cells if c.get("error")))
        return EXIT_PARTIAL
    return EXIT_OK


def decision_values(model, X, contamination: float) -> np.ndarray:
    """Positive inside the fitted region, negative outside, zero on the boundary.

    For KDE the boundary is the anomaly-score threshold; when the model has
    none, it is set from ``contamination`` on a copy.
    """
    if isinstance(model, GHOneClassSVM):
        return model.decision_function(X)
    threshold = model.threshold_
    if threshold is None:
        model = copy.copy(model)
        threshold = model.choose_threshold(contamination)
    return threshold - model.anomaly_score(X)


def boundary_grid(points, size: int, inflate: float):
    lo, hi = points.min(axis=0), points.max(axis=0)
    pad = inflate * (hi - lo)
    xs = np.linspace(lo[0] - pad[0], hi[0] + pad[0], size)
    ys = np.linspace(lo[1] - pad[1], hi[1] + pad[1], size)
    return xs, ys


def cmd_export_boundary(config) -> int:
    from .svg import boundary_svg, histogram_svg

    _require_file(config, "data")
    size = _int(config, "grid_size", 2)
    bins = _int(config, "bins", 1)
    inflate = config["inflate"]
    if not isinstance(inflate, (int, float)) or inflate < 0:
        raise ConfigError(f"inflate must be >= 0, got {inflate!r}")
    model = _load_model(config)
    out = _out_dir(config)
    dataset = _load_data(config)
    if dataset.n_features != 2:
        raise DataError(f"boundary export needs 2-D data, got {dataset.n_features} features")
    _check_dims(model, dataset)

    contamination = dataset.contamination
    xs, ys = boundary_grid(dataset.features, size, inflate)
    gx, gy = np.meshgrid(xs, ys)
    values = decision_values(model, np.column_stack([gx.ravel(), gy.ravel()]), contamination).reshape(gy.shape)
    point_values = decision_values(model, dataset.features, contamination)

    name = config["name"]
    grid_rows = ([repr(float(x)), repr(float(y)), repr(float(v))] for x, y, v in zip(gx.ravel(), gy.ravel(), values.ravel()))
    atomic_write_text(out / f"{name}_grid.csv", _csv_text(["x", "y", "value"], grid_rows))

    edges = np.histogram_bin_edges(point_values, bins=bins)
    normal_counts, _ = np.histogram(point_values[dataset.labels == 0], bins=edges)
    anomaly_counts, _ = np.histogram(point_values[dataset.labels == 1], bins=edges)
    hist_rows = (
        [repr(float(a)), repr(float(b)), int(n), int(m)]
        for a, b, n, m in zip(edges[:-1], edges[1:], normal_counts, anomaly_counts)
    )
    atomic_write_text(out / f"{name}_hist.csv", _csv_text(["bin_lo", "bin_hi", "count_normal", "count_anomaly"], hist_rows))
    atomic_write_text(out / f"{name}.svg", boundary_svg(xs, ys, values, dataset.features, dataset.labels))
    atomic_write_text(out / f"{name}_hist.svg", histogram_svg(edges, normal_counts, anomaly_counts))
    _write_config(out, name, "export-boundary", config)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "score": cmd_score,
    "benchmark": cmd_benchmark,
    "export-boundary": cmd_export_boundary,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghkernel", description="GH-kernel anomaly detection")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int, help="seed (for benchmark: a single-seed run)")
        p.add_argument("--out-dir", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args.command, args.config, args.set, args.seed, args.out_dir)
        return COMMANDS[args.command](config)
    except (ConfigError, InvalidParameterError, InfeasibleNuError) as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DataError, DataFormatError, EmptyClassError, ModelFormatError) as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA
    except (QuadratureError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.error("numeric error: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
