"""Closed-form objects of the model: the singular stationary profile,
the decaying linear mode, the subsolution built from their difference,
and the admissibility gate on the domain radius.

For dimension n >= 2 and alpha = cbrt(9n - 15),

    u*(r) = -alpha r^(1/3)

is stationary for u_t = Lap(u) + u u_r^3, and

    v(r, t) = C exp(-lam^2 t) r^(n - 3/2) J_nu(lam r),   nu = nu(n),

solves the linearization around u*.  u* - v is a subsolution provided

    0 < R < min( x1 / lam, sqrt( (3/8) (3n-5) (2n-3)^3 ) ),

x1 being the first positive root of J_nu'.  Residual evaluators assemble
the governing equations directly from the pieces; the r^(-5/3)-amplified
cancellations near the origin are kept benign by accumulating in the
widest hardware float.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import specfn
from .specfn import BesselOrder

__all__ = [
    "AdmissibilityError",
    "ModelParams",
    "RadialProfile",
    "make_params",
    "max_admissible_R",
    "radius_bound",
    "u_star",
    "u_star_r",
    "u_star_rr",
    "v_mode",
    "v_mode_r",
    "v_mode_t",
    "v_mode_rr",
    "psi",
    "psi_prime",
    "residual_stationary",
    "residual_linearized",
    "subsolution_defect",
    "mode_lower_bound_c1",
    "probe_lattice",
]

_L = np.longdouble


class AdmissibilityError(ValueError):
    """Parameter set violates the domain-radius gate."""


@dataclass(frozen=True)
class ModelParams:
    """Problem constants plus the derived quantities that depend on them.

    ``weak_form_ok`` records whether the distributional identity across the
    origin is in scope (it needs n >= 3); it is a flag, not a hard reject.
    """

    n: int
    R: float
    lam: float
    C: float
    alpha: float
    nu: float
    x0: float
    x1: float

    @property
    def weak_form_ok(self) -> bool:
        return self.n >= 3

    @property
    def decay_rate(self) -> float:
        return self.lam * self.lam

    def replace(self, **kw) -> "ModelParams":
        return dataclasses.replace(self, **kw)


def radius_bound(n: int) -> float:
    """The dimension-only part of the admissibility bound."""
    return math.sqrt(0.375 * (3 * n - 5) * (2 * n - 3) ** 3)


def max_admissible_R(n: int, lam: float) -> float:
    """Largest admissible domain radius, min(x1/lam, radius_bound(n))."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if lam <= 0:
        raise ValueError("lam must be positive")
    zeros = specfn.first_zeros(BesselOrder(specfn.nu_of(n)))
    return min(zeros.x1 / lam, radius_bound(n))


def make_params(
    n: int,
    R: float | None = None,
    lam: float | None = None,
    C: float = 0.0,
    lambda_fraction: float = 0.9,
    R_fraction: float = 0.9,
) -> ModelParams:
    """Build an admissible parameter set.

    Exactly one of ``R`` and ``lam`` may be given; the other is derived so
    that the gate holds with margin (lam = lambda_fraction * x1 / R, or
    R = R_fraction * max admissible radius).  Passing both is allowed but
    then the pair itself must pass the gate.
    """
    if n < 2 or int(n) != n:
        raise ValueError(f"dimension must be an integer >= 2, got {n}")
    if C < 0:
        raise ValueError("mode amplitude C must be nonnegative")
    nu = specfn.nu_of(n)
    alpha = specfn.alpha_of(n)
    zeros = specfn.first_zeros(BesselOrder(nu))
    if R is None and lam is None:
        raise ValueError("one of R, lam is required")
    if R is None:
        if not 0 < R_fraction < 1:
            raise ValueError("R_fraction must lie in (0, 1)")
        R = R_fraction * min(zeros.x1 / lam, radius_bound(n))
    elif lam is None:
        if not 0 < lambda_fraction < 1:
            raise ValueError("lambda_fraction must lie in (0, 1)")
        lam = lambda_fraction * zeros.x1 / R
    params = ModelParams(
        n=int(n), R=float(R), lam=float(lam), C=float(C),
        alpha=alpha, nu=nu, x0=zeros.x0, x1=zeros.x1,
    )
    ensure_admissible(params)
    return params


def ensure_admissible(params: ModelParams) -> None:
    """Raise unless 0 < R < min(x1/lam, radius_bound(n))."""
    limit = min(params.x1 / params.lam, radius_bound(params.n))
    if not 0.0 < params.R < limit:
        raise AdmissibilityError(
            f"R={params.R:g} outside admissible interval (0, {limit:g}) "
            f"= (0, min(x1/lam, sqrt(3/8 (3n-5)(2n-3)^3))) for n={params.n}, "
            f"lam={params.lam:g}"
        )


@dataclass(frozen=True)
class RadialProfile:
    """Samples of a radial function: nodes, values and derivative values."""

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing, length >= 2")
        for name in ("values", "derivative"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != g.shape:
                raise ValueError(f"{name} shape {a.shape} != grid {g.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite entries")


# -- stationary profile -----------------------------------------------------

def u_star(params: ModelParams, r):
    """Stationary profile -alpha r^(1/3); continued by 0 at r = 0."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("radius must be nonnegative")
    return -params.alpha * np.cbrt(arr)


def u_star_r(params: ModelParams, r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("derivative of the stationary profile needs r > 0")
    return -(params.alpha / 3.0) * arr ** (-2.0 / 3.0)


def u_star_rr(params: ModelParams, r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("second derivative needs r > 0")
    return (2.0 * params.alpha / 9.0) * arr ** (-5.0 / 3.0)


# -- separated mode ---------------------------------------------------------

def _bessel_triplet(params: ModelParams, r: np.ndarray):
    order = BesselOrder(params.nu)
    x = params.lam * r
    return (
        specfn.bessel_j(order, x),
        specfn.bessel_j_prime(order, x),
        specfn.bessel_j_second(order, x),
    )


def psi(params: ModelParams, r):
    """Spatial factor r^(n - 3/2) J_nu(lam r) of the mode; 0 at r = 0."""
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros_like(arr)
    pos = arr > 0
    if np.any(pos):
        rp = arr[pos]
        out[pos] = rp ** (params.n - 1.5) * specfn.bessel_j(
            BesselOrder(params.nu), params.lam * rp
        )
    return out if np.ndim(r) else float(out[0])


def psi_prime(params: ModelParams, r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("psi_prime needs r > 0")
    order = BesselOrder(params.nu)
    x = params.lam * arr
    return (params.n - 1.5) * arr ** (params.n - 2.5) * specfn.bessel_j(order, x) \
        + params.lam * arr ** (params.n - 1.5) * specfn.bessel_j_prime(order, x)


def _psi_second(params: ModelParams, r: np.ndarray):
    j, jp, jpp = _bessel_triplet(params, r)
    d = params.n - 1.5
    return (
        d * (d - 1.0) * r ** (d - 2.0) * j
        + 2.0 * params.lam * d * r ** (d - 1.0) * jp
        + params.lam ** 2 * r ** d * jpp
    )


def v_mode(params: ModelParams, r, t):
    """Mode value C exp(-lam^2 t) r^(n-3/2) J_nu(lam r); 0 at r = 0.

    Positive on (0, R] for C > 0 because the gate keeps lam R below the
    first root of J_nu; evaluation beyond that root is permitted but warned.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("time must be nonnegative")
    if np.any(params.lam * np.asarray(r, dtype=float) >= params.x0):
        warnings.warn(
            "mode evaluated at lam*r beyond the first Bessel root; "
            "sign guarantees no longer apply",
            stacklevel=2,
        )
    return params.C * np.exp(-params.lam ** 2 * tt) * psi(params, r)


def v_mode_r(params: ModelParams, r, t):
    tt = np.asarray(t, dtype=float)
    return params.C * np.exp(-params.lam ** 2 * tt) * psi_prime(params, r)


def v_mode_t(params: ModelParams, r, t):
    return -params.lam ** 2 * v_mode(params, r, t)


def v_mode_rr(params: ModelParams, r, t):
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("v_mode_rr needs r > 0")
    tt = np.asarray(t, dtype=float)
    return params.C * np.exp(-params.lam ** 2 * tt) * _psi_second(params, arr)


def mode_lower_bound_c1(params: ModelParams, samples: int = 4000) -> float:
    """Grid minimum of J_nu(lam r) / r^nu on (0, R].

    Positive whenever lam R < x0; the small-r limit (lam/2)^nu / Gamma(nu+1)
    is its supremum since J_nu(x)/x^nu decreases up to the first root.
    """
    r = np.geomspace(1e-8 * params.R, params.R, samples)
    j = specfn.bessel_j(BesselOrder(params.nu), params.lam * r)
    return float(np.min(j / r ** params.nu))


# -- residual evaluators ----------------------------------------------------

def _upcast_pieces(params: ModelParams, r: np.ndarray, t: np.ndarray):
    """All closed-form pieces on (r, t), accumulated in extended precision.

    alpha is recomputed from n in extended precision: the assembled defect
    cancels alpha^3 against 9n - 15, and a double-rounded alpha would leave
    r^(-5/3)-amplified noise of order 1e-10 near the inner probe radii.
    """
    rl = r.astype(_L)
    al = _L(9 * params.n - 15) ** (_L(1) / 3)
    lam = _L(params.lam)
    ef = _L(params.C) * np.exp(-lam * lam * t.astype(_L))
    j, jp, jpp = _bessel_triplet(params, r)
    d = _L(params.n) - _L(1.5)
    psi_v = rl ** d * j.astype(_L)
    psi_p = d * rl ** (d - 1) * j.astype(_L) + lam * rl ** d * jp.astype(_L)
    psi_pp = (
        d * (d - 1) * rl ** (d - 2) * j.astype(_L)
        + 2 * lam * d * rl ** (d - 1) * jp.astype(_L)
        + lam * lam * rl ** d * jpp.astype(_L)
    )
    pieces = {
        "us": -al * rl ** (_L(1) / 3),
        "usr": -(al / 3) * rl ** (-_L(2) / 3),
        "usrr": (2 * al / 9) * rl ** (-_L(5) / 3),
        "v": ef * psi_v,
        "vr": ef * psi_p,
        "vrr": ef * psi_pp,
        "vt": -lam * lam * ef * psi_v,
        "r": rl,
    }
    return pieces


def residual_stationary(params: ModelParams, r):
    """Lap(u*) + u* (u*_r)^3, assembled from the closed-form pieces.

    Identically (alpha/27) r^(-5/3) (15 - 9n + alpha^3) = 0; the returned
    value is that zero up to rounding of the assembly.
    """
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(arr <= 0):
        raise ValueError("residual_stationary needs r > 0")
    p = _upcast_pieces(params, arr, np.zeros_like(arr))
    lap = p["usrr"] + (params.n - 1) / p["r"] * p["usr"]
    res = (lap + p["us"] * p["usr"] ** 3).astype(float)
    return res if np.ndim(r) else float(res[0])


def stationary_residual_scale(params: ModelParams, r):
    """Natural magnitude (alpha/27) r^(-5/3) |15 - 9n| for relative tests."""
    arr = np.asarray(r, dtype=float)
    return (params.alpha / 27.0) * arr ** (-5.0 / 3.0) * abs(15 - 9 * params.n)


def residual_linearized(params: ModelParams, r, t):
    """v_t - Lap(v) - 3 u* (u*_r)^2 v_r - (u*_r)^3 v at (r, t)."""
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(arr <= 0):
        raise ValueError("residual_linearized needs r > 0")
    arr, tt = np.broadcast_arrays(arr, tt)
    p = _upcast_pieces(params, arr, tt)
    lap_v = p["vrr"] + (params.n - 1) / p["r"] * p["vr"]
    adv = 3 * p["us"] * p["usr"] ** 2
    res = (p["vt"] - lap_v - adv * p["vr"] - p["usr"] ** 3 * p["v"]).astype(float)
    return res if np.ndim(r) else float(res[0])


def subsolution_defect(params: ModelParams, r, t):
    """u_t - Lap(u) - u u_r^3 for u = u* - v.  Nonpositive (up to rounding)
    on admissible parameter sets; that sign is the subsolution property."""
    ensure_admissible(params)
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(arr <= 0) or np.any(arr >= params.R):
        raise ValueError("subsolution_defect needs 0 < r < R")
    if np.any(tt < 0):
        raise ValueError("subsolution_defect needs t >= 0")
    arr, tt = np.broadcast_arrays(arr, tt)
    p = _upcast_pieces(params, arr, tt)
    u = p["us"] - p["v"]
    ur = p["usr"] - p["vr"]
    ut = -p["vt"]
    lap = (p["usrr"] - p["vrr"]) + (params.n - 1) / p["r"] * (p["usr"] - p["vr"])
    res = (ut - lap - u * ur ** 3).astype(float)
    return res if np.ndim(r) else float(res[0])


def probe_lattice(params: ModelParams, radii: int = 200,
                  times=(0.0, 0.1, 1.0, 5.0)):
    """Log-spaced radii in [1e-4 R, 0.999 R] crossed with the probe times.

    The logarithmic spacing exercises the singular r -> 0 factors.
    Returns broadcastable (r, t) arrays of shape (len(times), radii).
    """
    r = np.geomspace(1e-4 * params.R, 0.999 * params.R, radii)
    t = np.asarray(times, dtype=float)
    return np.broadcast_arrays(r[None, :], t[:, None])
