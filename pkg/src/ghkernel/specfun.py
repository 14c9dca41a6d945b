"""Modified Bessel function of the second kind at arbitrary real order.

``log_bessel_k`` is the primary entry point; ``bessel_k`` exponentiates it.
Both use the symmetry K_{-nu} = K_{nu}, so only |nu| is ever evaluated.

The bulk of the domain is served by the exponentially scaled AMOS routine
(``scipy.special.kve``), which removes the e^{-x} factor and keeps large
arguments finite in log space. Where ``kve`` overflows (tiny x, large order)
the value is rebuilt by upward recurrence on the ratio K_{v+1}/K_v, which
never leaves log space.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, kve

__all__ = ["bessel_k", "log_bessel_k"]

# Below this argument even K_{v0+1}, v0 in [0, 1), may exceed double range.
_TINY_X = 1e-150


def _check_args(nu: float, x: np.ndarray) -> float:
    if not math.isfinite(nu):
        raise ValueError(f"Bessel order must be finite, got {nu!r}")
    if not np.all(np.isfinite(x)):
        raise ValueError("Bessel argument must be finite")
    if np.any(x <= 0):
        raise ValueError("Bessel argument must be strictly positive")
    nu = abs(float(nu))
    # K is even in nu, so flushing tiny orders costs O(nu^2); kve returns NaN
    # for subnormal orders.
    return 0.0 if nu < 1e-10 else nu


def _log_k_recurrence(nu: float, x: float) -> float:
    """log K_nu(x) for one point where the direct evaluation overflowed."""
    if x < _TINY_X:
        # Leading small-argument term; the neglected terms are O(x^2 / nu).
        if nu == 0.0:
            return math.log(-math.log(x / 2.0) - np.euler_gamma)
        return gammaln(nu) - math.log(2.0) + nu * (math.log(2.0) - math.log(x))
    steps = int(math.floor(nu))
    v0 = nu - steps
    k0 = kve(v0, x)
    k1 = kve(v0 + 1.0, x)
    log_k = math.log(k0) - x
    ratio = k1 / k0
    # K_{v+1}/K_v = K_{v-1}/K_v + 2v/x
    for i in range(steps):
        log_k += math.log(ratio)
        ratio = 1.0 / ratio + 2.0 * (v0 + i + 1.0) / x
    return log_k


def log_bessel_k(nu, x):
    """Natural log of K_nu(x).

    Parameters
    ----------
    nu : float
        Real order; negative values are folded onto |nu|.
    x : float or array_like
        Strictly positive, finite argument(s).

    Returns
    -------
    float or ndarray
        log K_nu(x), matching the shape of ``x``.
    """
    scalar = np.ndim(x) == 0
    xa = np.asarray(x, dtype=float)
    nu = _check_args(nu, xa)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.log(kve(nu, xa)) - xa
    bad = ~np.isfinite(out)
    if np.any(bad):
        out = np.array(out, copy=True, ndmin=1)
        flat_x = np.broadcast_to(xa, out.shape)
        for idx in zip(*np.nonzero(bad.reshape(out.shape))):
            out[idx] = _log_k_recurrence(nu, float(flat_x[idx]))
        out = out.reshape(xa.shape)
    return float(out) if scalar else out


def bessel_k(nu, x):
    """K_nu(x) in linear space.

    Raises ``OverflowError`` when the value exceeds double range; use
    :func:`log_bessel_k` there. Large arguments underflow quietly to 0.
    """
    log_k = log_bessel_k(nu, x)
    if np.any(np.asarray(log_k) > np.log(np.finfo(float).max)):
        raise OverflowError("K_nu(x) overflows double precision; use log_bessel_k")
    return np.exp(log_k) if np.ndim(log_k) else math.exp(log_k)
