"""Bessel functions of the first kind for real order, their first zeros,
and the two derived model constants.

The model needs J_nu, J_nu' and J_nu'' for non-integer orders nu(n) =
sqrt(36 n^2 - 96 n + 61)/6 together with the first positive roots x0 of
J_nu and x1 of J_nu'.  Everything here is evaluated from scratch:

* ascending power series for x <= max(12, 2 nu).  Beyond x ~ 12 the
  alternating series loses digits through cancellation (the largest term
  grows like e^x / (pi x)), so
* Hankel's large-argument expansion, truncated at its smallest term, is
  used past the switchover.  For half-integer orders the expansion
  terminates and is exact.

Sums are accumulated in the widest hardware float (``np.longdouble``,
80-bit on x86) which keeps the returned double-precision values accurate
to ~1e-13 absolute over the needed range (order <= ~7, argument <= ~50).
Each evaluation carries an internal error estimate; crossing 1e-10
triggers a :class:`BesselAccuracyWarning` rather than an exception, since
callers in this package stay far inside the reliable region.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BesselAccuracyWarning",
    "BesselOrder",
    "BesselZeros",
    "ZeroBracketingError",
    "nu_of",
    "alpha_of",
    "bessel_j",
    "bessel_j_prime",
    "bessel_j_second",
    "first_zeros",
]

_L = np.longdouble
_ACCURACY_TARGET = 1e-10
_SERIES_MAX_TERMS = 300
_ZERO_SCAN_STEP = 0.1
_ZERO_SCAN_SPAN = 20.0  # search horizon beyond the scan start


class BesselAccuracyWarning(UserWarning):
    """Internal error estimate of an evaluation exceeded 1e-10."""


class ZeroBracketingError(RuntimeError):
    """No sign change found within the documented search horizon."""


@dataclass(frozen=True)
class BesselOrder:
    """Positive real order of a Bessel function of the first kind."""

    nu: float

    def __post_init__(self):
        if not (self.nu > 0.0) or not math.isfinite(self.nu):
            raise ValueError(f"order must be a positive finite real, got {self.nu}")


@dataclass(frozen=True)
class BesselZeros:
    """First positive roots x0 of J_nu and x1 of J_nu' (0 < x1 < x0)."""

    x0: float
    x1: float

    def __post_init__(self):
        if not (0.0 < self.x1 < self.x0):
            raise ValueError(f"need 0 < x1 < x0, got x1={self.x1}, x0={self.x0}")


def nu_of(n: int) -> float:
    """Bessel order attached to the space dimension, sqrt(36n^2-96n+61)/6."""
    if n < 2 or int(n) != n:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    n = int(n)
    return float(np.sqrt(_L(36 * n * n - 96 * n + 61)) / _L(6))


def alpha_of(n: int) -> float:
    """Amplitude of the singular stationary profile, cbrt(9n - 15)."""
    if n < 2 or int(n) != n:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    return float(np.cbrt(_L(9 * int(n) - 15)))


def _series(mu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending series sum_k (-1)^k (x/2)^(2k+mu) / (k! Gamma(mu+k+1)).

    Returns the value and an absolute error estimate (cancellation plus
    truncation).  ``mu`` may be any real that is not a negative integer.
    """
    xl = x.astype(_L)
    z = xl / 2
    # leading coefficient 1/Gamma(mu+1); Gamma may legitimately be negative
    # for mu in (-2,-1) etc.
    lead = np.zeros_like(xl)
    pos = x > 0
    lead[pos] = np.exp(_L(mu) * np.log(z[pos])) / _L(math.gamma(mu + 1.0))
    # x == 0: (x/2)^mu is 0 for mu > 0, 1 for mu == 0; mu < 0 never reaches
    # here with x == 0 (guarded by the public wrappers).
    if mu == 0.0:
        lead[~pos] = 1.0

    term = np.ones_like(xl)
    total = np.ones_like(xl)
    max_term = np.ones_like(xl)
    z2 = -(z * z)
    k = 0
    while k < _SERIES_MAX_TERMS:
        k += 1
        term = term * z2 / (_L(k) * _L(mu + k))
        total = total + term
        np.maximum(max_term, np.abs(term), out=max_term)
        if np.all(np.abs(term) <= 1e-24 * (np.abs(total) + 1e-300)):
            break
    value = lead * total
    eps_l = float(np.finfo(_L).eps)
    est = (
        np.abs(lead) * (max_term * eps_l + np.abs(term))
        + 2.3e-16 * np.abs(value)
    )
    return value.astype(float), est.astype(float)


def _asymptotic(mu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hankel expansion sqrt(2/(pi x)) (P cos w - Q sin w), w = x - mu pi/2 - pi/4.

    Terms a_k / x^k with a_k = prod_{j<=k} (4mu^2 - (2j-1)^2) / (8 j) are
    added until they stop decreasing (optimal truncation); the size of the
    first omitted term bounds the truncation error.  Terminates exactly for
    half-integer mu.
    """
    xl = x.astype(_L)
    four_mu2 = _L(4.0 * mu * mu)
    p = np.ones_like(xl)
    q = np.zeros_like(xl)
    term = np.ones_like(xl)
    trunc = np.zeros_like(xl)
    active = np.ones(x.shape, dtype=bool)
    # terms may grow while (2k-1)^2 < 4 mu^2; optimal truncation is at the
    # later upturn, after the terms have started decreasing
    decreasing = np.zeros(x.shape, dtype=bool)
    k = 0
    while np.any(active) and k < 200:
        k += 1
        new = term * (four_mu2 - _L((2 * k - 1) ** 2)) / (_L(8 * k) * xl)
        grew = np.abs(new) >= np.abs(term)
        stopping = active & grew & decreasing
        trunc[stopping] = np.abs(new[stopping])
        active &= ~stopping
        decreasing |= ~grew
        term = np.where(active, new, 0.0)
        sign = (-1) ** (k // 2)
        if k % 2 == 0:
            p = p + sign * term
        else:
            q = q + sign * term
        if np.all(np.abs(term) <= 1e-24):
            break
    omega = xl - _L(mu) * _L(math.pi) / 2 - _L(math.pi) / 4
    pref = np.sqrt(_L(2) / (_L(math.pi) * xl))
    value = pref * (p * np.cos(omega) - q * np.sin(omega))
    est = pref * (trunc + np.abs(term)) + 2.3e-16 * (np.abs(value) + pref)
    return value.astype(float), est.astype(float)


def _jv_raw(mu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """J_mu on x >= 0 for arbitrary real mu (values and error estimates)."""
    if mu < 0.0 and mu == math.floor(mu):
        # negative integer order: J_{-m} = (-1)^m J_m
        val, est = _jv_raw(-mu, x)
        sgn = (-1.0) ** int(-mu)
        return sgn * val, est
    cutoff = max(12.0, 2.0 * abs(mu))
    small = x <= cutoff
    value = np.empty_like(x, dtype=float)
    est = np.empty_like(x, dtype=float)
    if np.any(small):
        value[small], est[small] = _series(mu, x[small])
    if np.any(~small):
        value[~small], est[~small] = _asymptotic(mu, x[~small])
    return value, est


def _check_accuracy(est: np.ndarray, value: np.ndarray, what: str) -> None:
    scale = np.maximum(1.0, np.abs(value))
    worst = float(np.max(est / scale)) if est.size else 0.0
    if worst > _ACCURACY_TARGET:
        warnings.warn(
            f"{what}: internal error estimate {worst:.2e} exceeds "
            f"{_ACCURACY_TARGET:.0e}",
            BesselAccuracyWarning,
            stacklevel=3,
        )


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def bessel_j(order: BesselOrder, x):
    """J_nu(x) for x >= 0.  Accepts scalars or arrays of arguments."""
    arr, scalar = _as_array(x)
    if np.any(arr < 0.0):
        raise ValueError("bessel_j requires x >= 0")
    value, est = _jv_raw(order.nu, arr)
    _check_accuracy(est, value, f"J_{order.nu:g}")
    return float(value[0]) if scalar else value


def bessel_j_prime(order: BesselOrder, x):
    """d/dx J_nu(x) for x > 0, via J_nu' = J_(nu-1) - (nu/x) J_nu.

    Unbounded as x -> 0+ when nu < 1 (the series term behaves like
    nu (x/2)^(nu-1) / (2 Gamma(nu+1))); hence the strict x > 0 domain.
    """
    arr, scalar = _as_array(x)
    if np.any(arr <= 0.0):
        raise ValueError("bessel_j_prime requires x > 0")
    low, est_l = _jv_raw(order.nu - 1.0, arr)
    mid, est_m = _jv_raw(order.nu, arr)
    value = low - (order.nu / arr) * mid
    est = est_l + (order.nu / arr) * est_m
    _check_accuracy(est, value, f"J'_{order.nu:g}")
    return float(value[0]) if scalar else value


def bessel_j_second(order: BesselOrder, x):
    """d^2/dx^2 J_nu(x) for x > 0, via (J_(nu-2) - 2 J_nu + J_(nu+2)) / 4.

    Deliberately assembled from the three-term recurrence rather than from
    the defining differential equation, so that residual checks of that
    equation remain meaningful.
    """
    arr, scalar = _as_array(x)
    if np.any(arr <= 0.0):
        raise ValueError("bessel_j_second requires x > 0")
    lo, e1 = _jv_raw(order.nu - 2.0, arr)
    mid, e2 = _jv_raw(order.nu, arr)
    hi, e3 = _jv_raw(order.nu + 2.0, arr)
    value = (lo - 2.0 * mid + hi) / 4.0
    _check_accuracy((e1 + 2.0 * e2 + e3) / 4.0, value, f"J''_{order.nu:g}")
    return float(value[0]) if scalar else value


def _bisect(f, a: float, b: float) -> float:
    fa = f(a)
    for _ in range(200):
        if b - a <= 1e-12 * max(1.0, abs(b)):
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm > 0.0:
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def first_zeros(order: BesselOrder) -> BesselZeros:
    """First positive roots of J_nu' (x1) and J_nu (x0).

    Scans with step 0.1 from max(nu, 0.1) -- both roots exceed nu -- for a
    sign change, bisects the bracket to 1e-12 and applies one Newton
    polish.  Deterministic: repeated calls are bit-identical.  Raises
    :class:`ZeroBracketingError` if no bracket appears within 20.0 above
    the scan start (far beyond the true roots for any practical order).
    """
    nu = order.nu
    j = lambda t: bessel_j(order, t)
    jp = lambda t: bessel_j_prime(order, t)
    # second derivative from the defining equation, for the Newton step on jp
    jpp = lambda t: -jp(t) / t - (1.0 - nu * nu / (t * t)) * j(t)

    def scan(f, start: float) -> tuple[float, float]:
        a = start
        fa = f(a)
        steps = int(_ZERO_SCAN_SPAN / _ZERO_SCAN_STEP)
        for i in range(1, steps + 1):
            b = start + i * _ZERO_SCAN_STEP
            fb = f(b)
            if fa > 0.0 and fb <= 0.0:
                return a, b
            a, fa = b, fb
        raise ZeroBracketingError(
            f"no sign change of order-{nu:g} function in "
            f"[{start:g}, {start + _ZERO_SCAN_SPAN:g}] (search horizon "
            f"{_ZERO_SCAN_SPAN:g} above scan start)"
        )

    start = max(nu, 0.1)
    a, b = scan(jp, start)
    x1 = _bisect(jp, a, b)
    x1 -= jp(x1) / jpp(x1)

    a, b = scan(j, x1)
    x0 = _bisect(j, a, b)
    x0 -= j(x0) / jp(x0)

    zeros = BesselZeros(x0=x0, x1=x1)
    if abs(j(x0)) > _ACCURACY_TARGET or abs(jp(x1)) > _ACCURACY_TARGET:
        raise RuntimeError(
            f"zero residuals out of tolerance: |J({x0})|={abs(j(x0)):.2e}, "
            f"|J'({x1})|={abs(jp(x1)):.2e}"
        )
    return zeros
