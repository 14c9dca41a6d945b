"""Text model files: a format tag on line 1, then one JSON document.

Floats go through ``repr`` so a saved model reproduces its scores bit for
bit after loading.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .kde import GHKernelDensity
from .kernels import kernel_from_dict, kernel_to_dict
from .ocsvm import GHOneClassSVM

__all__ = ["MODEL_FORMAT", "ModelFormatError", "atomic_write_text", "dumps_model", "load_model", "loads_model", "save_model"]

MODEL_FORMAT = "ghkernel-model/1"


class ModelFormatError(ValueError):
    """Unreadable model file, or one written under another format version."""


def atomic_write_text(path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    umask = os.umask(0)
    os.umask(umask)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        # mkstemp creates 0600; give the file the usual umask-derived mode.
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _to_document(model) -> dict:
    if isinstance(model, GHOneClassSVM):
        check_is_fitted(model, "dual_coef_")
        return {
            "model": "ocsvm",
            "kernel": kernel_to_dict(model._kernel()),
            "params": {"nu": model.nu, "tol": model.tol, "max_iter": model.max_iter},
            "n_features": model.n_features_in_,
            "train_points": model.X_fit_.tolist(),
            "alphas": model.dual_coef_.tolist(),
            "rho": model.rho_,
            "diagnostics": {
                "n_iter": model.n_iter_,
                "kkt_violation": model.kkt_violation_,
                "converged": model.converged_,
                "objective": model.objective_,
                "gram_jitter": model.gram_jitter_,
                "support_fraction": model.support_fraction_,
                "training_outlier_fraction": model.training_outlier_fraction_,
            },
        }
    if isinstance(model, GHKernelDensity):
        check_is_fitted(model, "X_fit_")
        return {
            "model": "kde",
            "kernel": kernel_to_dict(model._kernel()),
            "params": {"bandwidth": model.bandwidth, "contamination": model.contamination},
            "n_features": model.n_features_in_,
            "train_points": model.X_fit_.tolist(),
            "bandwidth": model.bandwidth_,
            "log_norm_const": model.log_norm_const_,
            "threshold": model.threshold_,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def dumps_model(model) -> str:
    body = json.dumps(_to_document(model), sort_keys=True, allow_nan=False)
    return f"{MODEL_FORMAT}\n{body}\n"


def _points(doc) -> np.ndarray:
    X = np.asarray(doc["train_points"], dtype=float)
    if X.ndim != 2 or X.shape[1] != doc["n_features"]:
        raise ModelFormatError("train_points do not match n_features")
    return X


def loads_model(text: str):
    tag, _, body = text.partition("\n")
    if tag.strip() != MODEL_FORMAT:
        if tag.startswith("ghkernel-model/"):
            raise ModelFormatError(f"model format {tag.strip()!r} is not supported (expected {MODEL_FORMAT!r})")
        raise ModelFormatError("not a ghkernel model file")
    try:
        doc = json.loads(body)
        kernel = kernel_from_dict(doc["kernel"])
        kind = doc["model"]
        if kind == "ocsvm":
            model = GHOneClassSVM(kernel, **doc["params"])
            model.X_fit_ = _points(doc)
            model.n_features_in_ = doc["n_features"]
            model.dual_coef_ = np.asarray(doc["alphas"], dtype=float)
            model.rho_ = float(doc["rho"])
            model.support_ = np.flatnonzero(model.dual_coef_ > model.tol)
            for name, value in doc["diagnostics"].items():
                setattr(model, name + "_", value)
            if model.dual_coef_.shape != (model.X_fit_.shape[0],):
                raise ModelFormatError("alphas do not match train_points")
        elif kind == "kde":
            model = GHKernelDensity(kernel, **doc["params"])
            model.X_fit_ = _points(doc)
            model.n_features_in_ = doc["n_features"]
            model.bandwidth_ = float(doc["bandwidth"])
            model.log_norm_const_ = float(doc["log_norm_const"])
            model.threshold_ = doc["threshold"]
        else:
            raise ModelFormatError(f"unknown model kind {kind!r}")
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    return model


def save_model(model, path) -> None:
    atomic_write_text(path, dumps_model(model))


def load_model(path):
    return loads_model(Path(path).read_text(encoding="utf-8"))
