"""Generalized hyperbolic (GH) densities and their named special cases.

All densities are evaluated in log space. The GH family members (full GH,
NIG, hyperbolic) share one implementation of the five-parameter density;
the Gaussian and Student's t reductions use their own closed forms because
the corresponding GH limits are numerically degenerate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .quadrature import QuadratureError, log_integrate
from .specfun import log_bessel_k

__all__ = [
    "FullGH",
    "GHParams",
    "GaussianReduction",
    "Hyperbolic",
    "InvalidParameterError",
    "NIG",
    "StudentT",
    "UnsupportedVariantError",
    "log_pdf",
    "pdf_normalization_check",
    "tail_decay_rate",
    "variant_from_dict",
    "variant_to_dict",
]

TAIL_EPS = 1e-12
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class InvalidParameterError(ValueError):
    pass


class UnsupportedVariantError(TypeError):
    pass


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidParameterError(msg)


@dataclass(frozen=True)
class GHParams:
    """Parameters (lam, alpha, beta, delta, mu) of a GH distribution."""

    lam: float
    alpha: float
    beta: float
    delta: float
    mu: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            _require(math.isfinite(value), f"{name} must be finite, got {value!r}")
        _require(self.alpha > 0, f"alpha must be > 0, got {self.alpha}")
        _require(self.delta > 0, f"delta must be > 0, got {self.delta}")
        _require(abs(self.beta) < self.alpha, f"|beta| must be < alpha, got beta={self.beta}, alpha={self.alpha}")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.alpha * self.alpha - self.beta * self.beta)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        lam, alpha, beta, delta, mu = self.lam, self.alpha, self.beta, self.delta, self.mu
        gamma = self.gamma
        log_norm = lam * math.log(gamma / delta) - _HALF_LOG_2PI - log_bessel_k(lam, delta * gamma)
        z = x - mu
        q = np.hypot(delta, z)
        return (
            log_norm
            + beta * z
            + log_bessel_k(lam - 0.5, alpha * q)
            + (lam - 0.5) * (np.log(q) - math.log(alpha))
        )

    def window(self, eps: float = TAIL_EPS) -> tuple[float, float]:
        reach = math.log(1.0 / eps) + 10.0
        return (
            self.mu - reach / (self.alpha + self.beta) - self.delta,
            self.mu + reach / (self.alpha - self.beta) + self.delta,
        )

    def core_width(self) -> float:
        return min(self.delta, math.sqrt(self.delta / self.alpha))


class _GHFamily:
    """Shared behaviour for the tags whose density is the GH formula."""

    n_params: int

    @property
    def params(self) -> GHParams:
        raise NotImplementedError

    @property
    def location(self) -> float:
        return self.params.mu

    def log_pdf(self, x):
        return self.params.log_pdf(x)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def window(self, eps: float = TAIL_EPS):
        return self.params.window(eps)

    def core_width(self) -> float:
        return self.params.core_width()

    def tail_rates(self) -> tuple[float, float]:
        """Exponential decay rates of the (left, right) tails."""
        p = self.params
        return p.alpha + p.beta, p.alpha - p.beta


@dataclass(frozen=True)
class FullGH(_GHFamily):
    lam: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    delta: float = 1.0
    mu: float = 0.0

    tag = "full_gh"
    n_params = 5

    def __post_init__(self):
        self.params  # validates

    @property
    def params(self) -> GHParams:
        return GHParams(self.lam, self.alpha, self.beta, self.delta, self.mu)


@dataclass(frozen=True)
class NIG(_GHFamily):
    """Normal-inverse Gaussian: the GH density with lam = -1/2."""

    alpha: float = 1.0
    beta: float = 0.0
    delta: float = 1.0
    mu: float = 0.0

    tag = "nig"
    lam = -0.5
    n_params = 4

    def __post_init__(self):
        self.params

    @property
    def params(self) -> GHParams:
        return GHParams(-0.5, self.alpha, self.beta, self.delta, self.mu)


@dataclass(frozen=True)
class Hyperbolic(_GHFamily):
    """Hyperbolic distribution: the GH density with lam = 1."""

    alpha: float = 1.0
    beta: float = 0.0
    delta: float = 1.0
    mu: float = 0.0

    tag = "hyperbolic"
    lam = 1.0
    n_params = 4

    def __post_init__(self):
        self.params

    @property
    def params(self) -> GHParams:
        return GHParams(1.0, self.alpha, self.beta, self.delta, self.mu)


@dataclass(frozen=True)
class GaussianReduction:
    sigma: float = 1.0
    mu: float = 0.0

    tag = "gaussian"
    n_params = 2

    def __post_init__(self):
        _require(math.isfinite(self.mu), "mu must be finite")
        _require(math.isfinite(self.sigma) and self.sigma > 0, f"sigma must be > 0, got {self.sigma}")

    @property
    def location(self) -> float:
        return self.mu

    def log_pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return -0.5 * z * z - _HALF_LOG_2PI - math.log(self.sigma)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def window(self, eps: float = TAIL_EPS):
        reach = self.sigma * (math.sqrt(2.0 * math.log(1.0 / eps)) + 1.0)
        return self.mu - reach, self.mu + reach

    def core_width(self) -> float:
        return self.sigma


@dataclass(frozen=True)
class StudentT:
    df: float = 3.0
    loc: float = 0.0
    scale: float = 1.0

    tag = "student_t"
    n_params = 3

    def __post_init__(self):
        _require(math.isfinite(self.loc), "loc must be finite")
        _require(math.isfinite(self.df) and self.df > 0, f"df must be > 0, got {self.df}")
        _require(math.isfinite(self.scale) and self.scale > 0, f"scale must be > 0, got {self.scale}")

    @property
    def location(self) -> float:
        return self.loc

    def log_pdf(self, x):
        nu = self.df
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        log_norm = gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi) - math.log(self.scale)
        return log_norm - 0.5 * (nu + 1) * np.log1p(z * z / nu)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def window(self, eps: float = TAIL_EPS):
        # Polynomial tails: size the window from the quantile function.
        reach = self.scale * stats.t.isf(0.5 * eps, self.df)
        return self.loc - reach, self.loc + reach

    def core_width(self) -> float:
        return self.scale


_TAGS = {cls.tag: cls for cls in (FullGH, NIG, Hyperbolic, GaussianReduction, StudentT)}
GH_FAMILY = (FullGH, NIG, Hyperbolic)


def log_pdf(variant, x):
    """Log density of ``variant`` at ``x`` (scalar or array)."""
    return variant.log_pdf(x)


def pdf_normalization_check(variant, rtol: float = 1e-10) -> float:
    """Integral of the density over its truncation window.

    Should be 1 up to the omitted tail mass (< 1e-12) and quadrature error.
    """
    lo, hi = variant.window()
    try:
        log_total, _ = log_integrate(variant.log_pdf, variant.location, variant.core_width(), lo, hi, rtol=rtol)
    except QuadratureError as exc:
        raise QuadratureError(f"normalization of {variant!r}: {exc}") from exc
    return float(np.exp(log_total))


def tail_decay_rate(variant) -> float:
    """Slowest exponential tail rate, alpha - |beta|, of a GH-family density."""
    if not isinstance(variant, GH_FAMILY):
        raise UnsupportedVariantError(f"{type(variant).__name__} has no exponential tail rate")
    return min(variant.tail_rates())


def variant_to_dict(variant) -> dict:
    return {"tag": variant.tag, **asdict(variant)}


def variant_from_dict(d: dict):
    d = dict(d)
    try:
        cls = _TAGS[d.pop("tag")]
    except KeyError as exc:
        raise InvalidParameterError(f"unknown GH variant tag {exc}") from None
    return cls(**{k: float(v) for k, v in d.items()})
