"""Admissible initial data, the regularized inner boundary, and the
cutoff nonlinearity.

An initial datum must sit below the stationary profile, meet it at the
outer boundary, be nonincreasing with at most the stationary slope decay
rate, and approach it near the origin at least like r^(n - 3/2 + nu).
Two parametric families are provided; both subtract a vanishing-at-R
deficit from the stationary profile.

For the annulus (eps, R) the datum is bridged to the time-dependent inner
boundary value u*(eps) - v(eps, 0) without ever steepening: the bridge
reparameterizes by the datum's own decrease and applies a quintic
smoothstep, so its slope is the datum's slope times a factor in [0, 1]
and the join at the matching set is C^2.

The gradient ceiling c*_eps dominates the slopes of the stationary
profile, the subsolution, and the bridged datum, and satisfies the inner
boundary inequality  lam^2 v(eps,0) + (n-1)/eps c* + u*(eps) c*^3 <= 0,
which is what makes the linear barrier argument at r = eps work.  The
cubic nonlinearity is smoothly cut off outside [-c*, c*] and vanishes
beyond 2 c*; a-posteriori gradient bounds confirm it never activates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import analytic
from .analytic import ModelParams, RadialProfile
from .report import CheckResult, VerificationReport

__all__ = [
    "InitialDataError",
    "InitialDatum",
    "CutoffCubic",
    "EpsilonProblem",
    "make_initial_datum",
    "validate_initial_datum",
    "choose_amplitude_C",
    "c_star_eps",
    "make_u0eps",
    "cutoff_apply",
    "make_epsilon_problem",
]

_FAMILIES = ("mode_deficit", "polynomial_blend")
_REL_TOL = 1e-12


class InitialDataError(ValueError):
    """Raised when a constructed profile violates one of the admissibility
    conditions; the message names the condition."""


@dataclass(frozen=True)
class InitialDatum:
    """A radial initial profile with its admissibility certificates.

    ``value`` and ``slope`` are exact closures usable on any grid;
    ``profile`` carries dense reference samples (several decades near 0).
    ``derivative_bound_C`` witnesses 0 >= u0' >= -C r^(-2/3);
    ``closeness_bound`` is the measured supremum of
    r^(3/2 - n - nu) (u* - u0) over the finest resolved decade.
    """

    profile: RadialProfile
    derivative_bound_C: float
    closeness_bound: float
    value: Callable = field(repr=False)
    slope: Callable = field(repr=False)
    family: str = "custom"
    family_params: dict = field(default_factory=dict)


def _datum_grid(params: ModelParams, n_nodes: int = 1200) -> np.ndarray:
    # four decades of radii; condition checks need >= 3 near the origin
    return np.geomspace(1e-4 * params.R, params.R, n_nodes)


def _family_closures(params: ModelParams, family: str, k: float, amplitude: float):
    R, n, nu = params.R, params.n, params.nu

    # k = 0 means no taper: the deficit keeps its full size at R (and the
    # profile then fails the outer boundary condition, deliberately so)
    def blend(r):
        return 1.0 - (r / R) ** k if k > 0 else np.ones_like(np.asarray(r, float))

    def blend_slope(r):
        return -k * r ** (k - 1.0) / R ** k if k > 0 else np.zeros_like(
            np.asarray(r, float)
        )

    if family == "mode_deficit":
        def deficit(r):
            return amplitude * analytic.psi(params, r) * blend(r)

        def deficit_slope(r):
            return amplitude * (
                analytic.psi_prime(params, r) * blend(r)
                + analytic.psi(params, r) * blend_slope(r)
            )
    elif family == "polynomial_blend":
        q = n - 1.5 + nu

        def deficit(r):
            return amplitude * r ** q * blend(r)

        def deficit_slope(r):
            return amplitude * (
                q * r ** (q - 1.0) * blend(r) + r ** q * blend_slope(r)
            )
    else:
        raise ValueError(f"unknown family {family!r}; choose from {_FAMILIES}")

    def value(r):
        return analytic.u_star(params, r) - deficit(np.asarray(r, dtype=float))

    def slope(r):
        return analytic.u_star_r(params, r) - deficit_slope(np.asarray(r, dtype=float))

    return value, slope


def make_initial_datum(
    params: ModelParams,
    family: str = "mode_deficit",
    k: float = 2.0,
    amplitude: float | None = None,
    n_nodes: int = 1200,
) -> InitialDatum:
    """Construct and validate a member of one of the datum families.

    mode_deficit:      u0 = u* - a * psi(r) (1 - (r/R)^k)  with a = params.C
    polynomial_blend:  u0 = u* - a * r^(n-3/2+nu) (1 - (r/R)^k)

    ``amplitude`` defaults to ``params.C`` for mode_deficit and must be given
    for polynomial_blend.  Raises :class:`InitialDataError` naming the first
    violated condition if the resulting profile is not admissible (possible
    for aggressive amplitudes or exponents, where the deficit recovers
    faster near R than the stationary slope allows).
    """
    if family == "mode_deficit" and amplitude is None:
        amplitude = params.C
    if amplitude is None:
        raise ValueError("polynomial_blend requires an explicit amplitude")
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    value, slope = _family_closures(params, family, float(k), float(amplitude))
    grid = _datum_grid(params, n_nodes)
    profile = RadialProfile(grid=grid, values=value(grid), derivative=slope(grid))
    datum = InitialDatum(
        profile=profile,
        derivative_bound_C=0.0,
        closeness_bound=0.0,
        value=value,
        slope=slope,
        family=family,
        family_params={"k": float(k), "amplitude": float(amplitude)},
    )
    report = validate_initial_datum(params, datum)
    bad = report.failures()
    if bad:
        raise InitialDataError(
            "constructed profile fails condition(s) "
            + ", ".join(c.name for c in bad)
        )
    return InitialDatum(
        profile=profile,
        derivative_bound_C=report["slope_envelope"].extra["bound_C"],
        closeness_bound=report["origin_closeness"].measured,
        value=value,
        slope=slope,
        family=family,
        family_params=datum.family_params,
    )


def _second_derivative_estimate(r: np.ndarray, u: np.ndarray) -> np.ndarray:
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    return 2.0 * (
        u[:-2] / (hm * (hm + hp))
        - u[1:-1] / (hm * hp)
        + u[2:] / (hp * (hm + hp))
    )


def validate_initial_datum(
    params: ModelParams, datum: InitialDatum
) -> VerificationReport:
    """One named check per admissibility condition; failures are recorded,
    not raised."""
    r = datum.profile.grid
    u0 = datum.profile.values
    u0r = datum.profile.derivative
    us = analytic.u_star(params, r)
    report = VerificationReport(context={"family": datum.family})
    scale = max(1.0, float(np.max(np.abs(us))))
    tol = _REL_TOL * scale

    # (a) interior C^2 regularity, proxied by second differences staying
    # stable when the grid is coarsened by 2 (a slope kink grows ~2x)
    mask = r >= 0.05 * params.R
    d2_fine = np.abs(_second_derivative_estimate(r, u0))[mask[1:-1]]
    rc, uc = r[::2], u0[::2]
    maskc = rc >= 0.05 * params.R
    d2_coarse = np.abs(_second_derivative_estimate(rc, uc))[maskc[1:-1]]
    m_fine = float(np.max(d2_fine)) if d2_fine.size else 0.0
    m_coarse = float(np.max(d2_coarse)) if d2_coarse.size else 0.0
    growth = m_fine / max(m_coarse, 1e-30)
    report.add(CheckResult(
        name="interior_regularity",
        claim="second differences stable under grid coarsening (C2 proxy)",
        measured=growth, tolerance=1.8, passed=growth <= 1.8,
    ))

    # (b) radial symmetry holds by construction of 1-D profiles
    report.add(CheckResult(
        name="radial_symmetry",
        claim="profile is a function of radius alone",
        measured=0.0, tolerance=0.0, passed=True, status="exact",
    ))

    # (c) datum below the stationary profile
    worst_above = float(np.max(u0 - us))
    report.add(CheckResult(
        name="below_stationary",
        claim="stationary profile dominates the datum nodewise",
        measured=worst_above, tolerance=tol, passed=worst_above <= tol,
    ))

    # (d) weighted closeness near the origin: the functional on the finest
    # decade must not grow compared with the next decade
    w = r ** (1.5 - params.n - params.nu) * (us - u0)
    dec1 = np.abs(w[r <= 10.0 * r[0]])
    dec2 = np.abs(w[(r > 10.0 * r[0]) & (r <= 100.0 * r[0])])
    bound = float(np.max(dec1))
    ratio = bound / max(float(np.max(dec2)), 1e-30) if dec2.size else 1.0
    finite = np.all(np.isfinite(w))
    report.add(CheckResult(
        name="origin_closeness",
        claim="r^(3/2-n-nu) (u* - u0) bounded on the finest resolved decade",
        measured=bound, tolerance=2.0, passed=bool(finite and ratio <= 2.0),
        extra={"decade_growth": ratio},
    ))

    # (e) exact match at the outer boundary
    mismatch = abs(float(u0[-1] - us[-1]))
    report.add(CheckResult(
        name="outer_boundary_match",
        claim="datum equals the stationary profile at r = R",
        measured=mismatch, tolerance=tol, passed=mismatch <= tol,
    ))

    # (f) slope squeeze 0 >= u0' >= -C r^(-2/3)
    worst_pos = float(np.max(u0r))
    weighted = -u0r * r ** (2.0 / 3.0)
    bound_C = 1.05 * max(float(np.max(weighted)), params.alpha / 3.0)
    report.add(CheckResult(
        name="slope_envelope",
        claim="datum nonincreasing with slope within -C r^(-2/3)",
        measured=worst_pos, tolerance=tol,
        passed=worst_pos <= tol and np.all(np.isfinite(weighted)),
        extra={"bound_C": bound_C},
    ))
    return report


def choose_amplitude_C(params: ModelParams, datum: InitialDatum) -> float:
    """Smallest safe mode amplitude dominating the datum's deficit.

    Returns 1.05 times the grid supremum of (u* - u0) / psi; the margin
    guarantees u0 >= u* - C psi nodewise, which is re-checked.  Returns 0
    for the degenerate datum u0 = u* (callers clamp to their own floor
    when a nontrivial mode is needed).
    """
    r = datum.profile.grid
    deficit = analytic.u_star(params, r) - datum.profile.values
    ratios = deficit / analytic.psi(params, r)
    sup = float(np.max(ratios))
    if not np.isfinite(sup):
        raise InitialDataError(
            "deficit / mode ratio unbounded on the grid "
            "(origin_closeness condition violated)"
        )
    if sup <= 0.0:
        return 0.0
    C = 1.05 * sup
    if np.any(deficit - C * analytic.psi(params, r) > _REL_TOL):
        raise InitialDataError("amplitude fit failed the nodewise re-check")
    return C


# -- gradient ceiling ---------------------------------------------------------


def _ceiling_conditions(params: ModelParams, eps: float,
                        u0eps: RadialProfile):
    """The three slope bounds and the cubic inner-boundary predicate."""
    r = u0eps.grid
    b_stationary = (params.alpha / 3.0) * eps ** (-2.0 / 3.0)
    sub_slope = analytic.u_star_r(params, r) - analytic.v_mode_r(params, r, 0.0)
    b_subsolution = float(np.max(np.abs(sub_slope)))
    b_datum = float(np.max(np.abs(u0eps.derivative)))
    # lam^2 v(eps, 0) is the constant that e^(lam^2 t)-weighting of the inner
    # boundary motion -v_t(eps, t) produces
    c_v = params.lam ** 2 * analytic.v_mode(params, eps, 0.0)
    u_eps = analytic.u_star(params, eps)

    def cubic_ok(c: float) -> bool:
        return c_v + (params.n - 1) / eps * c + u_eps * c ** 3 <= 0.0

    return (b_stationary, b_subsolution, b_datum), cubic_ok


def c_star_eps(params: ModelParams, eps: float, u0eps: RadialProfile) -> float:
    """Gradient ceiling: smallest value > 1 satisfying all four conditions,
    found by bisection and then inflated by 1%.

    Feasibility for large c is automatic: u*(eps) < 0 makes the cubic term
    dominate.  The ceiling grows like eps^(-2/3) as eps -> 0 because it must
    exceed the stationary slope at the inner boundary.
    """
    if not 0.0 < eps < params.R:
        raise ValueError("need 0 < eps < R")
    bounds, cubic_ok = _ceiling_conditions(params, eps, u0eps)
    floor = max(1.0, *bounds)

    def feasible(c: float) -> bool:
        return c > bounds[0] and c > bounds[1] and c > bounds[2] and cubic_ok(c)

    hi = max(2.0 * floor, 10.0)
    for _ in range(60):
        if feasible(hi):
            break
        hi *= 2.0
    else:
        raise RuntimeError("no feasible gradient ceiling below 2^60 * floor")

    lo = min(1.0, floor)
    for _ in range(6):  # re-bisect if the 1% inflation left a feasible gap
        a, b = lo, hi
        for _ in range(200):
            if b - a <= 1e-9 * max(1.0, b):
                break
            m = 0.5 * (a + b)
            if feasible(m):
                b = m
            else:
                a = m
        candidate = 1.01 * b
        if feasible(candidate):
            return candidate
        lo = candidate
    raise RuntimeError("gradient ceiling search failed to stabilize")


# -- cutoff nonlinearity ------------------------------------------------------


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (6.0 * s * s - 15.0 * s + 10.0)


def _smoothstep_prime(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30.0 * s * s * (s - 1.0) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffCubic:
    """s^3 on [-c*, c*], tapered smoothly to 0 on c* < |s| < support_radius.

    The taper multiplies s^3 by 1 - smoothstep, so the function stays odd,
    keeps the sign of s, and joins the cube and the zero tail with two
    vanishing derivatives (C^2 numerically; the model idealizes C-infinity).
    """

    c_star: float
    support_radius: float
    taper: str = "quintic_smoothstep"

    def __post_init__(self):
        if not self.c_star > 1.0:
            raise ValueError("cutoff plateau must exceed 1")
        if not self.support_radius > self.c_star:
            raise ValueError("support must extend beyond the exact-cube range")

    def apply(self, s):
        s = np.asarray(s, dtype=float)
        sigma = (np.abs(s) - self.c_star) / (self.support_radius - self.c_star)
        return s ** 3 * (1.0 - _smoothstep(sigma))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        w = self.support_radius - self.c_star
        sigma = (np.abs(s) - self.c_star) / w
        return 3.0 * s ** 2 * (1.0 - _smoothstep(sigma)) \
            - np.abs(s) ** 3 * _smoothstep_prime(sigma) / w


def cutoff_apply(cutoff: CutoffCubic, s):
    """Value of the cutoff nonlinearity at s (scalar or array)."""
    out = cutoff.apply(s)
    return float(out) if np.ndim(s) == 0 else out


# -- annulus initial data -----------------------------------------------------


def make_u0eps(
    params: ModelParams, eps: float, datum: InitialDatum, nodes: np.ndarray
) -> RadialProfile:
    """Bridge the datum to the inner boundary value on the annulus grid.

    Equals the datum wherever it lies below u*(eps) - v(eps,0) - eps, takes
    the exact value u*(eps) - v(eps,0) at the inner node, and in between
    follows the datum reparameterized through a quintic smoothstep.  The
    bridge slope is the datum slope scaled by a factor in [0, 1], so the
    squeeze  u0' <= u0eps' <= 0  holds pointwise.
    """
    nodes = np.asarray(nodes, dtype=float)
    if abs(nodes[0] - eps) > 1e-14 * max(1.0, eps) or abs(nodes[-1] - params.R) > 1e-14:
        raise ValueError("annulus grid must span [eps, R]")
    A = analytic.u_star(params, eps) - analytic.v_mode(params, eps, 0.0)
    u0 = datum.value(nodes)
    u0r = datum.slope(nodes)
    h0 = float(u0[0] - A)
    if h0 < -_REL_TOL * max(1.0, abs(A)):
        raise InitialDataError(
            "datum lies below the inner boundary value at eps; "
            "the mode amplitude does not dominate the deficit"
        )
    h0 = max(h0, 0.0)
    if h0 > eps / 0.875:
        raise InitialDataError(
            "bridge cannot satisfy the derivative squeeze: inner gap "
            f"{h0:.3e} exceeds {eps / 0.875:.3e}; refine the grid near eps "
            "or decrease eps"
        )
    if float(u0[-1]) >= A - eps:
        raise InitialDataError(
            "matching set is empty: the datum never falls below "
            "u*(eps) - v(eps,0) - eps; eps is too large for this datum"
        )
    s = (u0[0] - u0) / (h0 + eps)
    phi = 1.0 - _smoothstep(s)
    factor = 1.0 - _smoothstep_prime(s) * h0 / (h0 + eps)
    bridge = s < 1.0
    values = np.where(bridge, u0 - h0 * phi, u0)
    slopes = np.where(bridge, u0r * factor, u0r)
    values[0] = A  # exact, regardless of rounding in h0
    profile = RadialProfile(grid=nodes, values=values, derivative=slopes)
    _assert_u0eps_conditions(params, eps, datum, profile, A)
    return profile


def _assert_u0eps_conditions(params, eps, datum, profile, A):
    nodes, values, slopes = profile.grid, profile.values, profile.derivative
    scale = max(1.0, float(np.max(np.abs(values))))
    tol = _REL_TOL * scale
    if abs(values[0] - A) > tol:
        raise InitialDataError("inner boundary value not met exactly")
    u0 = datum.value(nodes)
    u0r = datum.slope(nodes)
    if np.any(slopes > tol) or np.any(slopes < u0r - tol):
        raise InitialDataError("derivative squeeze u0' <= u0eps' <= 0 violated")
    upper = analytic.u_star(params, nodes)
    lower = upper - analytic.v_mode(params, nodes, 0.0)
    if np.any(values > upper + tol) or np.any(values < lower - tol):
        raise InitialDataError("annulus datum leaves the comparison envelope")
    matching = u0 < A - eps
    if not np.array_equal(values[matching], u0[matching]):
        raise InitialDataError("datum not reproduced exactly on the matching set")


@dataclass(frozen=True)
class EpsilonProblem:
    """One regularized annulus problem: geometry, ceiling, cutoff, data.

    Immutable after construction; safe to share across parallel solver runs.
    ``inner_bc`` follows the subsolution's trace u*(eps) - v(eps, t); the
    outer value is pinned to the stationary profile.
    """

    params: ModelParams
    epsilon: float
    c_star_eps: float
    cutoff: CutoffCubic
    u0eps: RadialProfile

    def inner_bc(self, t) -> float:
        return analytic.u_star(self.params, self.epsilon) - analytic.v_mode(
            self.params, self.epsilon, t
        )

    def outer_bc(self, t=None) -> float:
        return float(analytic.u_star(self.params, self.params.R))

    @property
    def nodes(self) -> np.ndarray:
        return self.u0eps.grid


def make_epsilon_problem(
    params: ModelParams,
    datum: InitialDatum,
    eps: float,
    nodes: np.ndarray,
    support_factor: float = 2.0,
) -> EpsilonProblem:
    """Assemble and cross-check a full annulus problem instance."""
    u0eps = make_u0eps(params, eps, datum, nodes)
    ceiling = c_star_eps(params, eps, u0eps)
    cutoff = CutoffCubic(c_star=ceiling, support_radius=support_factor * ceiling)
    problem = EpsilonProblem(
        params=params, epsilon=float(eps), c_star_eps=ceiling,
        cutoff=cutoff, u0eps=u0eps,
    )
    _assert_ceiling_conditions(params, eps, u0eps, ceiling)
    return problem


def _assert_ceiling_conditions(params, eps, u0eps, ceiling):
    bounds, cubic_ok = _ceiling_conditions(params, eps, u0eps)
    if not (ceiling > max(bounds) and ceiling > 1.0 and cubic_ok(ceiling)):
        raise RuntimeError("gradient ceiling lost a condition after the fact")
