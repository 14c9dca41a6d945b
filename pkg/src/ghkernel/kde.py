"""Kernel density estimation with radial profiles, including GH profiles.

For a profile p(u) with p(0) = 1, the estimate in d dimensions is

    f(x) = 1 / (n h^d C_d) * sum_i p(||x - x_i|| / h),

where C_d = |S^{d-1}| * integral_0^inf p(u) u^{d-1} du makes the radial
kernel integrate to one. Everything runs in log space so that h^d and C_d
stay representable for high-dimensional inputs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .ghdist import StudentT
from .kernels import GHKernel, GaussianProfile, PROFILE_KERNELS, log_sphere_area
from .quadrature import log_integrate

__all__ = ["DENSITY_FLOOR", "GHKernelDensity", "log_norm_const", "scott_bandwidth"]

DENSITY_FLOOR = 1e-300
_LOG_FLOOR = math.log(DENSITY_FLOOR)


def _upper_limit(kernel, d: int) -> float:
    support = kernel.support
    if math.isfinite(support):
        return float(support)
    if kernel.family == "gaussian_profile":
        return math.sqrt(max(d - 1, 0)) + 40.0
    # exponential profile: integrand peaks at u = d - 1 with spread sqrt(d)
    return d + 80.0 + 12.0 * math.sqrt(d)


def log_norm_const(kernel, d: int, rtol: float = 1e-12) -> float:
    """log C_d for a radial profile in dimension ``d``, by quadrature."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if isinstance(kernel, GHKernel) and isinstance(kernel.variant, StudentT) and kernel.variant.df <= d - 1:
        # k(u) ~ u^-(df+1), so u^(d-1) k(u) is only integrable for df > d - 1.
        raise ValueError(f"Student-t profile with df={kernel.variant.df} is not integrable in {d} dimensions")
    upper = _upper_limit(kernel, d)

    def integrand(u):
        with np.errstate(divide="ignore"):
            return kernel.log_profile(u) + (d - 1) * np.log(u)

    log_radial, _ = log_integrate(integrand, 0.0, upper / 8.0, 0.0, upper, rtol=rtol)
    return log_sphere_area(d) + float(log_radial)


def scott_bandwidth(X) -> float:
    n, d = X.shape
    spread = float(np.mean(np.std(X, axis=0, ddof=1))) if n > 1 else 1.0
    if not spread > 0:
        spread = 1.0
    return spread * n ** (-1.0 / (d + 4))


class GHKernelDensity(BaseEstimator):
    """Kernel density estimator with negative-log-density anomaly scores.

    Parameters
    ----------
    kernel : profile kernel, default=GaussianProfile()
        One of GaussianProfile, Epanechnikov, Tophat, Exponential or GHKernel.
        A GHKernel's lengthscale is ignored here; ``bandwidth`` sets the scale.
    bandwidth : float or "scott", default="scott"
    contamination : float, optional
        If given, ``fit`` also sets ``threshold_`` via :meth:`choose_threshold`.
    """

    def __init__(self, kernel=None, bandwidth="scott", contamination=None):
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.contamination = contamination

    def _kernel(self):
        kernel = GaussianProfile() if self.kernel is None else self.kernel
        if not isinstance(kernel, PROFILE_KERNELS):
            raise ValueError(f"{type(kernel).__name__} is not a radial density profile")
        return kernel

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        kernel = self._kernel()
        if self.bandwidth == "scott":
            h = scott_bandwidth(X)
        else:
            h = float(self.bandwidth)
            if not (math.isfinite(h) and h > 0):
                raise ValueError(f"bandwidth must be > 0, got {self.bandwidth!r}")
        self.X_fit_ = X
        self.n_features_in_ = X.shape[1]
        self.bandwidth_ = h
        self.log_norm_const_ = log_norm_const(kernel, X.shape[1])
        self.threshold_ = None
        if self.contamination is not None:
            self.choose_threshold(self.contamination)
        return self

    @property
    def norm_const_(self) -> float:
        return math.exp(self.log_norm_const_)

    def _check_X(self, X):
        check_is_fitted(self, "X_fit_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}")
        return X

    def log_density(self, X):
        X = self._check_X(X)
        kernel = self._kernel()
        n, d = self.X_fit_.shape
        offset = math.log(n) + d * math.log(self.bandwidth_) + self.log_norm_const_
        out = np.empty(X.shape[0])
        step = max(1, 2_000_000 // n)
        for start in range(0, X.shape[0], step):
            u = cdist(X[start : start + step], self.X_fit_) / self.bandwidth_
            # Sorted summation keeps the result independent of training order.
            terms = np.sort(kernel.log_profile(u), axis=1)
            out[start : start + step] = logsumexp(terms, axis=1)
        return out - offset

    def density(self, X):
        return np.exp(self.log_density(X))

    def score_samples(self, X):
        """Log density, following the scikit-learn convention."""
        return self.log_density(X)

    def anomaly_score(self, X):
        """-log(max(density, 1e-300)); higher means more anomalous."""
        return -np.maximum(self.log_density(X), _LOG_FLOOR)

    def choose_threshold(self, contamination):
        """Set ``threshold_`` to the (1 - contamination) quantile of training scores."""
        check_is_fitted(self, "X_fit_")
        if not (0.0 < contamination < 1.0):
            raise ValueError(f"contamination must lie in (0, 1), got {contamination!r}")
        if self.X_fit_.shape[0] == 0:
            raise ValueError("empty training set")
        scores = self.anomaly_score(self.X_fit_)
        self.threshold_ = float(np.quantile(scores, 1.0 - contamination))
        return self.threshold_

    def predict(self, X):
        """+1 for inliers, -1 for points scoring above ``threshold_``."""
        if getattr(self, "threshold_", None) is None:
            raise ValueError("no threshold set; call choose_threshold first")
        return np.where(self.anomaly_score(X) > self.threshold_, -1, 1)
