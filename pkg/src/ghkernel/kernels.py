"""Kernel functions, including GH kernels built by autocorrelating a GH density.

The GH kernel between two points is the overlap integral

    k(r) = integral of f(v) * f(v - r) dv,    r = |x - y| / lengthscale,

of a one-dimensional GH-family density ``f``. There is no closed form, so
``build_gh_table`` evaluates k on a grid once and later lookups interpolate.
Multivariate inputs use the radial form k(||x - y|| / s) / k(0), which makes
every GH kernel stationary with unit diagonal.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.distance import cdist, pdist, squareform
from scipy.special import gammaln

from .ghdist import (
    FullGH,
    GaussianReduction,
    Hyperbolic,
    InvalidParameterError,
    NIG,
    StudentT,
    variant_from_dict,
    variant_to_dict,
)
from .quadrature import QuadratureError, log_integrate

logger = logging.getLogger(__name__)

__all__ = [
    "RBF",
    "Polynomial",
    "Linear",
    "Sigmoid",
    "GHKernel",
    "GaussianProfile",
    "Epanechnikov",
    "Tophat",
    "Exponential",
    "GHKernelTable",
    "GramMatrix",
    "build_gh_table",
    "cross_kernel",
    "gram",
    "kernel_eval",
    "kde_profile_eval",
    "kernel_to_dict",
    "kernel_from_dict",
]

TABLE_CUTOFF = 1e-12
DEFAULT_GRID = 1024


# ---------------------------------------------------------------------------
# GH autocorrelation tables
# ---------------------------------------------------------------------------


def log_autocorrelation(variant, r, rtol: float = 1e-10) -> np.ndarray:
    """log k(r) for an array of separations r >= 0, by direct quadrature.

    The integrand has one bump near the location of each factor. The domain
    is cut at the midpoint and each half gets a rule centred on its bump.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise ValueError("separations must be nonnegative")
    lo, hi = variant.window()
    mu = variant.location
    width = variant.core_width()
    out = np.empty_like(r)
    for start in range(0, r.size, 64):
        rr = r[start : start + 64]
        col = rr[:, None]

        def integrand(v, col=col):
            return variant.log_pdf(v) + variant.log_pdf(v - col)

        left, _ = log_integrate(integrand, np.full_like(rr, mu), width, np.full_like(rr, lo), mu + 0.5 * rr, rtol=rtol)
        right, _ = log_integrate(integrand, mu + rr, width, mu + 0.5 * rr, hi + rr, rtol=rtol)
        out[start : start + 64] = np.logaddexp(left, right)
    return out


@dataclass(frozen=True, eq=False)
class GHKernelTable:
    """Tabulated autocorrelation profile of a GH-family density.

    ``log_k_values`` holds log k(r) on ``r_values``; queries interpolate
    log k with a cubic spline clamped to zero slope at r = 0 (k is even) and
    return 0 beyond ``r_max``.
    """

    r_values: np.ndarray
    log_k_values: np.ndarray
    variant: object = None
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        spline = CubicSpline(self.r_values, self.log_k_values, bc_type=((1, 0.0), "not-a-knot"))
        object.__setattr__(self, "_spline", spline)

    @property
    def r_max(self) -> float:
        return float(self.r_values[-1])

    @property
    def k_values(self) -> np.ndarray:
        return np.exp(self.log_k_values)

    @property
    def k0(self) -> float:
        return float(np.exp(self.log_k_values[0]))

    def log_k(self, r) -> np.ndarray:
        """Unnormalized log k(|r|); -inf beyond the table."""
        r = np.abs(np.asarray(r, dtype=float))
        out = np.full(r.shape, -np.inf)
        inside = r <= self.r_max
        out[inside] = self._spline(r[inside])
        return out

    def log_profile(self, r) -> np.ndarray:
        return self.log_k(r) - self.log_k_values[0]

    def profile(self, r) -> np.ndarray:
        """k(r) / k(0)."""
        return np.exp(self.log_profile(r))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "k"])
            for r, lk in zip(self.r_values, self.log_k_values):
                writer.writerow([repr(float(r)), repr(float(np.exp(lk)))])


def _centered(variant):
    # Autocorrelation does not depend on location.
    if isinstance(variant, StudentT):
        return dataclasses.replace(variant, loc=0.0)
    return dataclasses.replace(variant, mu=0.0)


def build_gh_table(variant, epsilon: float = 1e-10, n_grid: int = DEFAULT_GRID) -> GHKernelTable:
    """Tabulate k(r) on [0, r_max] where k(r_max) / k(0) < 1e-12.

    Each k(r) is computed by panel-doubling Gauss-Legendre quadrature until
    successive refinements agree to ``epsilon`` (relative). The grid is
    sinh-spaced: dense near the core, coarser in the smooth tail.
    """
    if n_grid < 512:
        raise ValueError("n_grid must be at least 512")
    return _build_gh_table(_centered(variant), float(epsilon), int(n_grid))


@lru_cache(maxsize=64)
def _build_gh_table(variant, epsilon, n_grid):
    width = variant.core_width()
    log_k0 = log_autocorrelation(variant, [0.0], epsilon)[0]
    log_cut = math.log(TABLE_CUTOFF)
    r_hi = width
    while log_autocorrelation(variant, [r_hi], epsilon)[0] - log_k0 >= log_cut:
        r_hi *= 2.0
        if r_hi > 1e12 * width:
            raise QuadratureError("kernel profile does not decay below the table cutoff")
    probe = np.linspace(0.5 * r_hi, r_hi, 65)
    below = np.nonzero(log_autocorrelation(variant, probe, epsilon) - log_k0 < log_cut)[0]
    r_max = float(probe[below[0]])

    t = np.linspace(0.0, np.arcsinh(r_max / width), n_grid)
    r = width * np.sinh(t)
    r[-1] = r_max
    log_k = log_autocorrelation(variant, r, epsilon)
    return GHKernelTable(r_values=r, log_k_values=log_k, variant=variant)


def clear_table_cache() -> None:
    _build_gh_table.cache_clear()


# ---------------------------------------------------------------------------
# Kernel specifications
# ---------------------------------------------------------------------------


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class RBF:
    gamma: float = 1.0

    family = "rbf"
    stationary = True
    psd_guaranteed = True

    def __post_init__(self):
        _positive("gamma", self.gamma)

    @property
    def n_params(self) -> int:
        return 1

    def from_distance(self, r):
        return np.exp(-self.gamma * np.square(r))


@dataclass(frozen=True)
class Polynomial:
    degree: int = 3
    coef0: float = 1.0
    scale: float = 1.0

    family = "polynomial"
    stationary = False

    @property
    def psd_guaranteed(self) -> bool:
        return self.coef0 >= 0

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise InvalidParameterError(f"degree must be an integer >= 1, got {self.degree!r}")
        _positive("scale", self.scale)

    @property
    def n_params(self) -> int:
        return 3

    def from_inner(self, p):
        return (self.scale * p + self.coef0) ** int(self.degree)


@dataclass(frozen=True)
class Linear:
    family = "linear"
    stationary = False
    psd_guaranteed = True

    @property
    def n_params(self) -> int:
        return 0

    def from_inner(self, p):
        return np.asarray(p, dtype=float)


@dataclass(frozen=True)
class Sigmoid:
    scale: float = 1.0
    coef0: float = 0.0

    family = "sigmoid"
    stationary = False
    psd_guaranteed = False

    def __post_init__(self):
        _positive("scale", self.scale)

    @property
    def n_params(self) -> int:
        return 2

    def from_inner(self, p):
        return np.tanh(self.scale * p + self.coef0)


@dataclass(frozen=True)
class GHKernel:
    """Normalized GH autocorrelation kernel k(||x - y|| / lengthscale) / k(0)."""

    variant: object = field(default_factory=FullGH)
    lengthscale: float = 1.0
    epsilon: float = 1e-10

    family = "gh"
    stationary = True
    # PSD in one dimension; radial use in R^d is checked empirically.
    psd_guaranteed = False

    def __post_init__(self):
        if not isinstance(self.variant, (FullGH, NIG, Hyperbolic, GaussianReduction, StudentT)):
            raise InvalidParameterError(f"not a GH variant: {self.variant!r}")
        _positive("lengthscale", self.lengthscale)
        _positive("epsilon", self.epsilon)

    @property
    def n_params(self) -> int:
        # Location does not enter an autocorrelation; the lengthscale takes its slot.
        return self.variant.n_params

    @property
    def table(self) -> GHKernelTable:
        return build_gh_table(self.variant, self.epsilon)

    def from_distance(self, r):
        return self.table.profile(np.asarray(r, dtype=float) / self.lengthscale)

    def log_profile(self, u):
        return self.table.log_profile(u)

    @property
    def support(self) -> float:
        return self.table.r_max


@dataclass(frozen=True)
class GaussianProfile:
    family = "gaussian_profile"
    support = math.inf
    n_params = 0

    def log_profile(self, u):
        u = np.asarray(u, dtype=float)
        return -0.5 * u * u

    def log_norm_const(self, d: int) -> float:
        return 0.5 * d * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Epanechnikov:
    family = "epanechnikov"
    support = 1.0
    n_params = 0

    def log_profile(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u < 1.0, np.log1p(-np.minimum(u * u, 1.0)), -np.inf)

    def log_norm_const(self, d: int) -> float:
        # unit-ball volume * 2 / (d + 2)
        return _log_unit_ball(d) + math.log(2.0 / (d + 2.0))


@dataclass(frozen=True)
class Tophat:
    family = "tophat"
    support = 1.0
    n_params = 0

    def log_profile(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= 1.0, 0.0, -np.inf)

    def log_norm_const(self, d: int) -> float:
        return _log_unit_ball(d)


@dataclass(frozen=True)
class Exponential:
    family = "exponential"
    support = math.inf
    n_params = 0

    def log_profile(self, u):
        return -np.asarray(u, dtype=float)

    def log_norm_const(self, d: int) -> float:
        return log_sphere_area(d) + gammaln(d)


def log_sphere_area(d: int) -> float:
    """log surface area of the unit sphere in R^d (2 for d = 1)."""
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - gammaln(0.5 * d)


def _log_unit_ball(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0)


PROFILE_KERNELS = (GaussianProfile, Epanechnikov, Tophat, Exponential, GHKernel)
_FAMILIES = {
    cls.family: cls
    for cls in (RBF, Polynomial, Linear, Sigmoid, GHKernel, GaussianProfile, Epanechnikov, Tophat, Exponential)
}


def kernel_to_dict(spec) -> dict:
    out = {"family": spec.family}
    for f in dataclasses.fields(spec):
        value = getattr(spec, f.name)
        out[f.name] = variant_to_dict(value) if f.name == "variant" else value
    return out


def kernel_from_dict(d: dict):
    d = dict(d)
    try:
        cls = _FAMILIES[d.pop("family")]
    except KeyError as exc:
        raise InvalidParameterError(f"unknown kernel family {exc}") from None
    if "variant" in d:
        d["variant"] = variant_from_dict(d["variant"])
    return cls(**d)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _as_points(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of points")
    return X


def cross_kernel(spec, X, Y) -> np.ndarray:
    """Kernel matrix K[i, j] = k(X[i], Y[j])."""
    X, Y = _as_points(X), _as_points(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if spec.stationary:
        return spec.from_distance(cdist(X, Y))
    return spec.from_inner(X @ Y.T)


def kernel_eval(spec, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(cross_kernel(spec, x[None, :], y[None, :])[0, 0])


def kde_profile_eval(spec, u) -> float:
    """Radial KDE profile at u >= 0, scaled so the value at 0 is 1."""
    if u < 0:
        raise ValueError("radial argument must be nonnegative")
    return float(np.exp(spec.log_profile(np.asarray(u, dtype=float))))


@dataclass
class GramMatrix:
    values: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        if "_eig" not in self.__dict__:
            if self.n > 2000:
                raise ValueError("eigenvalue diagnostics limited to n <= 2000")
            self.__dict__["_eig"] = np.linalg.eigvalsh(self.values)
        return self.__dict__["_eig"]

    @property
    def min_eig_estimate(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max_eig(self) -> float:
        return float(self.eigenvalues[-1])

    def is_psd(self, rtol: float = 1e-8) -> bool:
        return self.min_eig_estimate >= -rtol * max(self.max_eig, 0.0)

    def regularized(self, rtol: float = 1e-8) -> "GramMatrix":
        """Return self if PSD within ``rtol``, else a ridge-jittered copy."""
        if self.n > 2000 or self.is_psd(rtol):
            return self
        ridge = abs(self.min_eig_estimate) + 1e-10
        logger.warning("Gram matrix not PSD (min eig %.3e); adding ridge %.3e", self.min_eig_estimate, ridge)
        return GramMatrix(self.values + ridge * np.eye(self.n), jitter=ridge)


def gram(spec, points) -> GramMatrix:
    """Symmetric Gram matrix; each unordered pair is evaluated once."""
    X = _as_points(points, "points")
    if not np.all(np.isfinite(X)):
        raise ValueError("points must be finite")
    n = X.shape[0]
    if n == 0:
        raise ValueError("need at least one point")
    if spec.stationary:
        values = squareform(spec.from_distance(pdist(X)), checks=False)
        np.fill_diagonal(values, spec.from_distance(np.zeros(1))[0])
    else:
        # Mirror the upper triangle so symmetry is exact.
        values = np.triu(spec.from_inner(X @ X.T))
        values = values + np.triu(values, 1).T
    return GramMatrix(values)
