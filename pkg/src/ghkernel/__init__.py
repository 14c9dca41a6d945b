"""Anomaly detection with Generalized Hyperbolic (GH) autocorrelation kernels.

The main entry points are :class:`GHOneClassSVM` and :class:`GHKernelDensity`,
which accept any kernel from :mod:`ghkernel.kernels`.
"""

from .data import Dataset, generate_synthetic, load_csv
from .evaluation import auc_roc, benchmark, grid_search
from .ghdist import NIG, FullGH, GaussianReduction, GHParams, Hyperbolic, StudentT, pdf_normalization_check, tail_decay_rate
from .kde import GHKernelDensity
from .kernels import (
    RBF,
    Epanechnikov,
    Exponential,
    GaussianProfile,
    GHKernel,
    Linear,
    Polynomial,
    Sigmoid,
    Tophat,
    build_gh_table,
    gram,
)
from .ocsvm import GHOneClassSVM, solve_dual
from .specfun import bessel_k, log_bessel_k

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FullGH",
    "GHKernel",
    "GHKernelDensity",
    "GHOneClassSVM",
    "GHParams",
    "GaussianProfile",
    "GaussianReduction",
    "Epanechnikov",
    "Exponential",
    "Hyperbolic",
    "Linear",
    "NIG",
    "Polynomial",
    "RBF",
    "Sigmoid",
    "StudentT",
    "Tophat",
    "auc_roc",
    "benchmark",
    "bessel_k",
    "build_gh_table",
    "generate_synthetic",
    "gram",
    "grid_search",
    "load_csv",
    "log_bessel_k",
    "pdf_normalization_check",
    "solve_dual",
    "tail_decay_rate",
]
