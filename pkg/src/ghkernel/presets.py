"""Model lists for the synthetic and tabular benchmark tables.

Grids are expressed relative to a data-driven length scale (the median
distance from a normal point to its 5th nearest normal neighbour), so the
same presets work on the 2-D synthetic data and on standardized tabular
data. On the synthetic set that scale is about 0.07.
"""

from __future__ import annotations

import numpy as np
from sklearn.neighbors import NearestNeighbors

from .data import FORESTCOVER, KDDCUP99, Dataset, SplitProtocol, generate_synthetic, load_csv
from .evaluation import DatasetSource, GridSpec, ModelConfig
from .ghdist import NIG, FullGH, GaussianReduction, Hyperbolic, StudentT
from .kde import GHKernelDensity
from .kernels import RBF, Epanechnikov, Exponential, GaussianProfile, GHKernel, Linear, Polynomial, Sigmoid, Tophat
from .ocsvm import GHOneClassSVM

__all__ = [
    "KDE_ROWS",
    "OCSVM_ROWS",
    "REAL_PROTOCOLS",
    "kde_models",
    "length_scale",
    "ocsvm_models",
    "real_data_source",
    "synthetic_source",
    "table1_models",
]

OCSVM_ROWS = (
    "RBF",
    "Polynomial",
    "Linear",
    "Sigmoid",
    "Full GH",
    "GH (Gaussian)",
    "GH (NIG)",
    "GH (Student-t)",
    "GH (Hyperbolic)",
)
KDE_ROWS = (
    "Gaussian",
    "Epanechnikov",
    "Tophat",
    "Exponential",
    "Full GH",
    "GH (Gaussian)",
    "GH (NIG)",
    "GH (Student-t)",
    "GH (Hyperbolic)",
)

_K = 5
_MAX_POINTS = 2000


def length_scale(X, k: int = _K) -> float:
    """Median distance to the k-th nearest neighbour, on at most 2000 rows."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] > _MAX_POINTS:
        X = X[np.random.default_rng(0).choice(X.shape[0], _MAX_POINTS, replace=False)]
    k = min(k, X.shape[0] - 1)
    dist, _ = NearestNeighbors(n_neighbors=k + 1).fit(X).kneighbors(X)
    scale = float(np.median(dist[:, k]))
    return scale if scale > 0 else 1.0


def _scaled(build):
    """Wrap ``build(scale) -> params`` as a grid factory on the dev normals."""

    def factory(dev: Dataset) -> GridSpec:
        return GridSpec(build(length_scale(dev.normals)))

    return factory


# Multipliers of the length scale; tuned once on synthetic seeds outside the test range.
_LENGTHS = (0.7, 1.4, 2.8)
_BANDWIDTHS = (0.3, 0.7, 1.4)
_GH_SHAPE = {"alpha": (1.0, 2.0), "beta": (0.0, 0.5)}


def _gh_grid(prefix: str, variant_grid: dict, lengths):
    def build(scale):
        params = {f"{prefix}.variant.{k}": list(v) for k, v in variant_grid.items()}
        params[f"{prefix}.lengthscale"] = [round(m * scale, 6) for m in lengths]
        return params

    return build


def _inner_scale(dev: Dataset) -> float:
    # Typical squared norm, so inner-product kernels see O(1) arguments.
    X = dev.normals
    return float(np.mean(np.sum(X * X, axis=1))) or 1.0


_GH_VARIANTS = (
    ("Full GH", FullGH(), {"lam": (-0.5, 1.0), **_GH_SHAPE}),
    ("GH (Gaussian)", GaussianReduction(), {}),
    ("GH (NIG)", NIG(), _GH_SHAPE),
    ("GH (Student-t)", StudentT(), {"df": (1.0, 3.0, 10.0)}),
    ("GH (Hyperbolic)", Hyperbolic(), _GH_SHAPE),
)


def ocsvm_models(nu: float = 0.05) -> list[ModelConfig]:
    """The nine OCSVM rows, each with its tuning grid."""
    rows = [
        ModelConfig(
            "RBF",
            GHOneClassSVM(RBF(), nu=nu),
            _scaled(lambda s: {"kernel.gamma": [round(c / s**2, 6) for c in (0.005, 0.05, 0.15, 0.5)]}),
            "OCSVM",
        ),
        ModelConfig(
            "Polynomial",
            GHOneClassSVM(Polynomial(), nu=nu),
            lambda dev: GridSpec(
                {
                    "kernel.degree": [2, 3],
                    "kernel.coef0": [0.0, 1.0],
                    "kernel.scale": [round(c / _inner_scale(dev), 6) for c in (0.5, 2.0)],
                }
            ),
            "OCSVM",
        ),
        ModelConfig("Linear", GHOneClassSVM(Linear(), nu=nu), None, "OCSVM"),
        ModelConfig(
            "Sigmoid",
            GHOneClassSVM(Sigmoid(), nu=nu),
            lambda dev: GridSpec(
                {
                    "kernel.scale": [round(c / _inner_scale(dev), 6) for c in (0.1, 1.0)],
                    "kernel.coef0": [-1.0, 0.0],
                }
            ),
            "OCSVM",
        ),
    ]
    for name, variant, grid in _GH_VARIANTS:
        lengths = (0.35,) + _LENGTHS if not grid else _LENGTHS
        rows.append(
            ModelConfig(name, GHOneClassSVM(GHKernel(variant), nu=nu), _scaled(_gh_grid("kernel", grid, lengths)), "OCSVM")
        )
    return rows


def kde_models() -> list[ModelConfig]:
    """The nine KDE rows; the bandwidth is tuned for every profile."""

    def bandwidths(scale):
        return [round(m * scale, 6) for m in _BANDWIDTHS]

    rows = [
        ModelConfig(name, GHKernelDensity(profile), _scaled(lambda s: {"bandwidth": bandwidths(s)}), "KDE")
        for name, profile in (
            ("Gaussian", GaussianProfile()),
            ("Epanechnikov", Epanechnikov()),
            ("Tophat", Tophat()),
            ("Exponential", Exponential()),
        )
    ]
    for name, variant, grid in _GH_VARIANTS:

        def factory(dev, grid=grid):
            grid = dict(grid)
            if "df" in grid:
                # The profile is only normalizable for df > d - 1.
                d = dev.n_features
                grid["df"] = tuple(df for df in grid["df"] if df > d - 1) or (float(d),)
            params = {f"kernel.variant.{k}": list(v) for k, v in grid.items()}
            params["bandwidth"] = bandwidths(length_scale(dev.normals))
            return GridSpec(params)

        rows.append(ModelConfig(name, GHKernelDensity(GHKernel(variant)), factory, "KDE"))
    return rows


def table1_models(sections=("OCSVM", "KDE")) -> list[ModelConfig]:
    out = []
    if "OCSVM" in sections:
        out += ocsvm_models()
    if "KDE" in sections:
        out += kde_models()
    return out


# Real-data protocols: 5000 training normals, 5000 test rows at a fixed
# contamination, features standardized with training-normal statistics.
REAL_PROTOCOLS = {
    "kddcup99": (KDDCUP99, SplitProtocol(n_train_normal=5000, n_test=5000, test_contamination=0.2, standardize=True)),
    "forestcover": (FORESTCOVER, SplitProtocol(n_train_normal=5000, n_test=5000, test_contamination=0.1, standardize=True)),
}


def real_data_source(name: str, path) -> DatasetSource:
    """A benchmark source for a raw KDDCup99 or ForestCover file.

    The file is parsed once; the split protocol draws the seeded subsample.
    """
    try:
        spec, protocol = REAL_PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown real dataset {name!r}; choose from {sorted(REAL_PROTOCOLS)}") from None
    cache = {}

    def load(seed):
        if "data" not in cache:
            cache["data"] = load_csv(path, spec)
        return cache["data"]

    return DatasetSource(name, load, protocol)


def synthetic_source(n_normal: int = 1000, n_anomaly: int = 50) -> DatasetSource:
    return DatasetSource("synthetic", lambda seed: generate_synthetic(seed, n_normal, n_anomaly))
