"""One-class SVM trained on the dual problem over a precomputed Gram matrix.

The dual solved here is

    minimize    0.5 * a' G a - sum_i a_i G_ii
    subject to  0 <= a_i <= 1 / (nu * n),   sum_i a_i = 1,

i.e. the maximization form with its sign flipped. The linear term is the
constant 1 for kernels with unit diagonal (every stationary kernel in this
package), so there it reduces to the classical one-class dual; it is kept so
that non-normalized kernels are handled by the same objective.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_array, check_is_fitted

from .kernels import GHKernel, cross_kernel, gram

logger = logging.getLogger(__name__)

__all__ = ["DualSolution", "GHOneClassSVM", "InfeasibleNuError", "dual_objective", "solve_dual"]


class InfeasibleNuError(ValueError):
    """nu * n < 1: the box [0, 1/(nu n)] cannot hold coefficients summing to 1."""


@dataclass
class DualSolution:
    alphas: np.ndarray
    rho: float
    n_iter: int
    kkt_violation: float
    converged: bool
    objective: float
    objective_history: list = field(default_factory=list)
    rho_fallback: bool = False


def dual_objective(G, alphas) -> float:
    G = np.asarray(G, dtype=float)
    return float(0.5 * alphas @ G @ alphas - alphas @ np.diag(G))


def _check_nu(nu, n):
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu!r}")
    if nu * n < 1.0 - 1e-12:
        raise InfeasibleNuError(f"nu * n = {nu * n:.3g} < 1; need at least {math.ceil(1 / nu)} points")


@njit(cache=True)
def _smo(G, alphas, grad, C, tol, max_iter, track):
    n = alphas.shape[0]
    history = np.empty(max_iter + 1 if track else 0)
    violation = np.inf
    it = 0
    while True:
        if track:
            obj = 0.0
            for k in range(n):
                obj += alphas[k] * (grad[k] - G[k, k])
            history[it] = 0.5 * obj
        i = -1
        j = -1
        for k in range(n):
            if alphas[k] < C and (i < 0 or grad[k] < grad[i]):
                i = k
            if alphas[k] > 0.0 and (j < 0 or grad[k] > grad[j]):
                j = k
        if i < 0 or j < 0:
            # Every coefficient pinned at a bound (nu = 1): nothing can move.
            violation = 0.0
            break
        violation = grad[j] - grad[i]
        if violation < tol or it == max_iter:
            break
        step_max = min(C - alphas[i], alphas[j])
        curvature = G[i, i] + G[j, j] - 2.0 * G[i, j]
        step = violation / curvature if curvature > 1e-15 else step_max
        if step >= step_max:
            step = step_max
            if step == C - alphas[i]:
                alphas[i] = C
            else:
                alphas[i] += step
            if step == alphas[j]:
                alphas[j] = 0.0
            else:
                alphas[j] -= step
        else:
            alphas[i] += step
            alphas[j] -= step
        for k in range(n):
            grad[k] += step * (G[i, k] - G[j, k])  # rows: G is symmetric
        it += 1
    return it, violation, history[: it + 1] if track else history


def solve_dual(G, nu, tol=1e-6, max_iter=None, track_objective=False) -> DualSolution:
    """Pairwise working-set solver for the one-class dual.

    Each step picks the maximal KKT-violating pair (i may increase, j may
    decrease), moves mass from j to i by the exact minimizer of the
    two-variable subproblem clipped to the box, and stops once the violation
    drops below ``tol``. Ties go to the lowest index.
    """
    G = np.ascontiguousarray(G, dtype=float)
    n = G.shape[0]
    if G.shape != (n, n):
        raise ValueError("Gram matrix must be square")
    if n < 2:
        raise ValueError("need at least two training points")
    _check_nu(nu, n)
    if max_iter is None:
        max_iter = 100 * n
    C = 1.0 / (nu * n)

    alphas = np.zeros(n)
    n_full = min(int(nu * n + 1e-12), n)
    alphas[:n_full] = C
    if n_full < n:
        alphas[n_full] = max(1.0 - n_full * C, 0.0)
    diag = G.diagonal().copy()
    grad = G @ alphas - diag

    n_iter, violation, history = _smo(G, alphas, grad, C, float(tol), int(max_iter), bool(track_objective))
    converged = violation < tol
    if not converged:
        warnings.warn(
            f"dual solver stopped after {n_iter} iterations with KKT violation {violation:.3e}",
            ConvergenceWarning,
            stacklevel=2,
        )

    margin_values = grad + diag  # (G a)_i
    margin = (alphas > tol) & (alphas < C - tol)
    fallback = not np.any(margin)
    if fallback:
        support = alphas > tol
        rho = float(np.median(margin_values[support]))
        logger.warning("no margin support vectors; rho from median over %d support vectors", support.sum())
    else:
        rho = float(np.mean(margin_values[margin]))
    objective = float(0.5 * alphas @ (grad - diag))
    return DualSolution(alphas, rho, int(n_iter), float(violation), bool(converged), objective, list(history), fallback)


class GHOneClassSVM(OutlierMixin, BaseEstimator):
    """One-class SVM with a pluggable kernel (GH kernel by default).

    Parameters
    ----------
    kernel : kernel spec, default=GHKernel()
        Any kernel from :mod:`ghkernel.kernels`.
    nu : float, default=0.1
        Upper bound on the training-outlier fraction and lower bound on the
        support-vector fraction.
    tol : float, default=1e-6
        Stop once the maximal KKT violation falls below this.
    max_iter : int, optional
        Solver iteration cap; 100 * n_samples when omitted.

    Attributes
    ----------
    dual_coef_ : ndarray of shape (n_samples,)
    rho_ : float
    support_ : ndarray of int
        Indices with dual coefficient above ``tol``.
    X_fit_ : ndarray of shape (n_samples, n_features)
    """

    def __init__(self, kernel=None, nu=0.1, tol=1e-6, max_iter=None):
        self.kernel = kernel
        self.nu = nu
        self.tol = tol
        self.max_iter = max_iter

    def _kernel(self):
        return GHKernel() if self.kernel is None else self.kernel

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n = X.shape[0]
        if n < 2:
            raise ValueError("need at least two training points")
        _check_nu(self.nu, n)
        kernel = self._kernel()
        G = gram(kernel, X)
        if not getattr(kernel, "psd_guaranteed", False):
            G = G.regularized()
        sol = solve_dual(G.values, self.nu, self.tol, self.max_iter)

        self.X_fit_ = X
        self.n_features_in_ = X.shape[1]
        self.dual_coef_ = sol.alphas
        self.rho_ = sol.rho
        self.support_ = np.flatnonzero(sol.alphas > self.tol)
        self.n_iter_ = sol.n_iter
        self.kkt_violation_ = sol.kkt_violation
        self.converged_ = sol.converged
        self.objective_ = sol.objective
        self.gram_jitter_ = G.jitter

        train_decision = G.values @ sol.alphas - sol.rho
        self.support_fraction_ = self.support_.size / n
        # Margin vectors sit at 0 up to the KKT tolerance.
        self.training_outlier_fraction_ = float(np.mean(train_decision < -self.tol))
        # The bounds only hold for unit-diagonal kernels, i.e. the stationary ones.
        off = self.support_fraction_ < self.nu - 0.02 or self.training_outlier_fraction_ > self.nu + 0.02
        if off and getattr(kernel, "stationary", False):
            logger.warning(
                "nu-property off: support fraction %.3f, outlier fraction %.3f, nu %.3f",
                self.support_fraction_,
                self.training_outlier_fraction_,
                self.nu,
            )
        return self

    def decision_function(self, X):
        """Signed distance to the boundary: positive inside, negative outside."""
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}")
        sv = np.flatnonzero(self.dual_coef_ > 0.0)
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], 2048):
            K = cross_kernel(self._kernel(), X[start : start + 2048], self.X_fit_[sv])
            out[start : start + 2048] = K @ self.dual_coef_[sv]
        return out - self.rho_

    def anomaly_score(self, X):
        """Higher means more anomalous (negated decision function)."""
        return -self.decision_function(X)

    def score_samples(self, X):
        return self.decision_function(X) + self.rho_

    def predict(self, X):
        """+1 for inliers, -1 for outliers."""
        return np.where(self.decision_function(X) < 0, -1, 1)
