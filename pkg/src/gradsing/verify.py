"""Property suite: every structural claim about the solution fields is a
numerical check with an explicit tolerance.

The checks are pure functions of immutable fields and return
:class:`CheckResult` records; orchestration and serialization live in the
pipeline.  Derivative reconstruction always reuses the solver stencil so
that the asserted quantities are the ones actually computed.

Default tolerances: comparisons against the closed-form envelopes use
5 (h^2 + dt) (spatial truncation plus one power of the step), gradient
sign checks use 1e-6 + 10 h^2; both can be overridden per call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from . import analytic
from .report import CheckResult, VerificationReport
from .solver import SpacetimeField, compact_difference

__all__ = [
    "CheckResult",
    "VerificationReport",
    "ExponentFit",
    "TestFunction",
    "default_test_functions",
    "tol_sandwich",
    "tol_grad",
    "check_sandwich",
    "check_monotone",
    "check_gradient_box",
    "check_cutoff_inactive",
    "check_boundary_bands",
    "check_weighted_bernstein",
    "check_pointwise_gradient",
    "check_pointwise_stability",
    "fit_singularity",
    "check_singularity_shape",
    "check_shape_functional",
    "fit_decay",
    "check_decay_envelope",
    "check_decay_rate",
    "weak_form_residual",
    "check_weak_identity",
    "inner_mass_integral",
    "check_inner_mass",
    "check_uniqueness_surrogate",
    "check_continuation_cauchy",
]


@dataclass(frozen=True)
class ExponentFit:
    """Log-log (or log-linear) least-squares fit over a stated window."""

    exponent: float
    prefactor: float
    r_squared: float
    window: tuple

    def __post_init__(self):
        if not 0.0 <= self.r_squared <= 1.0 + 1e-12:
            raise ValueError("r_squared must lie in [0, 1]")


def tol_sandwich(field: SpacetimeField) -> float:
    dt = float(field.times[1] - field.times[0])
    h = field.grid.h_max
    return 5.0 * (h * h + dt)


def tol_grad(field: SpacetimeField) -> float:
    h = field.grid.h_max
    return 1e-6 + 10.0 * h * h


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), max(0.0, min(1.0, r2))


# -- envelope and sign checks -------------------------------------------------

def check_sandwich(field: SpacetimeField, tol: float | None = None) -> CheckResult:
    """Max violation of  u* >= u >= u* - v  over all stored (r, t)."""
    tol = tol_sandwich(field) if tol is None else tol
    us = field.u_star_row()
    v = field.mode_matrix()
    upper = float(np.max(field.values - us[None, :]))
    lower = float(np.max((us[None, :] - v) - field.values))
    worst = max(upper, lower, 0.0)
    return CheckResult(
        name="sandwich",
        claim="stationary profile above, stationary-minus-mode below, everywhere",
        measured=worst, tolerance=tol, passed=worst <= tol,
        extra={"upper_violation": upper, "lower_violation": lower},
    )


def check_monotone(field: SpacetimeField, tol: float | None = None) -> CheckResult:
    """Positive part of the reconstructed radial derivative."""
    tol = tol_grad(field) if tol is None else tol
    worst = max(float(np.max(field.gradient_matrix())), 0.0)
    return CheckResult(
        name="monotone_gradient",
        claim="radial derivative nonpositive over the whole field",
        measured=worst, tolerance=tol, passed=worst <= tol,
    )


def check_gradient_box(field: SpacetimeField, rel: float = 1e-6) -> CheckResult:
    """sup |u_r| stays below the gradient ceiling of the problem."""
    ceiling = field.problem.c_star_eps
    sup = field.max_abs_gradient
    ok = sup <= ceiling * (1.0 + rel) and not field.cutoff_active
    return CheckResult(
        name="gradient_box",
        claim="gradient ceiling never exceeded, so the cutoff stayed inert",
        measured=sup, tolerance=ceiling * (1.0 + rel), passed=ok,
        extra={"ceiling": ceiling, "cutoff_active": field.cutoff_active},
    )


def check_cutoff_inactive(field: SpacetimeField, field_wide: SpacetimeField,
                          tol: float = 1e-10) -> CheckResult:
    """Doubling the cutoff support must not change the field."""
    if field.values.shape != field_wide.values.shape:
        raise ValueError("fields must share grid and time lattice")
    diff = float(np.max(np.abs(field.values - field_wide.values)))
    return CheckResult(
        name="cutoff_inactive_rerun",
        claim="field invariant under widening the cutoff support",
        measured=diff, tolerance=tol, passed=diff <= tol,
    )


def check_boundary_bands(field: SpacetimeField,
                         tol: float | None = None) -> CheckResult:
    """Derivative bands at both boundaries:
    u*_r(R) - tol <= u_r(R, t) <= tol  and  -c* - tol <= u_r(eps, t) <= tol."""
    tol = tol_grad(field) if tol is None else tol
    p = field.problem.params
    grad = field.gradient_matrix()
    outer_lo = float(analytic.u_star_r(p, p.R))
    worst = 0.0
    worst = max(worst, float(np.max(grad[:, -1])) - 0.0)
    worst = max(worst, outer_lo - float(np.min(grad[:, -1])))
    worst = max(worst, float(np.max(grad[:, 0])))
    worst = max(worst, -field.problem.c_star_eps - float(np.min(grad[:, 0])))
    worst = max(worst, 0.0)
    return CheckResult(
        name="boundary_derivative_bands",
        claim="boundary slopes inside the stationary and ceiling bands",
        measured=worst, tolerance=tol, passed=worst <= tol,
    )


# -- weighted gradient bounds -------------------------------------------------

def check_weighted_bernstein(field: SpacetimeField, p: int,
                             delta_fraction: float = 0.05,
                             rel_tol: float = 0.05) -> CheckResult:
    """Affine majorant for W(t) = max_r (r - delta)_+^(p+3) u_r^p.

    W saturates from its datum value toward the stationary level, so the
    affine fit is taken on the late half of the window, where the claimed
    at-most-linear growth is the binding content; the intercept is then
    lifted to majorize the whole record.  Requires an even p >= 4.
    """
    if p < 4 or p % 2 != 0:
        raise ValueError("weight exponent must be an even integer >= 4")
    delta = delta_fraction * field.problem.params.R
    w_nodes = np.clip(field.grid.nodes - delta, 0.0, None) ** (p + 3)
    W = np.max(w_nodes[None, :] * field.gradient_matrix() ** p, axis=1)
    t = field.times
    late = t >= 0.5 * t[-1]
    slope, intercept, _ = _linear_fit(t[late], W[late])
    slope = max(slope, 0.0)
    fit_late = slope * t[late] + intercept
    rel = float(np.max(np.abs(W[late] - fit_late)) / np.max(np.abs(fit_late)))
    lift = max(0.0, float(np.max(W - (slope * t + intercept))))
    return CheckResult(
        name=f"weighted_gradient_majorant_p{p}",
        claim="weighted gradient power admits an affine-in-time majorant",
        measured=rel, tolerance=rel_tol, passed=rel <= rel_tol,
        extra={
            "slope": slope,
            "intercept": intercept + lift,
            "datum_level": float(W[0]),
            "steady_level": float(W[-1]),
        },
    )


def check_pointwise_gradient(field: SpacetimeField, p: int = 28) -> CheckResult:
    """Uniform bound for |u_r| r^((p+3)/p) on (2 eps, R) x [0, T]."""
    if p < 4 or p % 2 != 0:
        raise ValueError("weight exponent must be an even integer >= 4")
    eps = field.eps
    q = (p + 3.0) / p
    window = (field.grid.nodes > 2.0 * eps) & (field.grid.nodes < field.problem.params.R)
    if not np.any(window):
        return CheckResult(
            name=f"pointwise_gradient_p{p}",
            claim="weighted slope bounded between twice eps and R",
            measured=float("nan"), tolerance=float("inf"),
            passed=False, status="inconclusive",
        )
    weighted = np.abs(field.gradient_matrix()[:, window]) * \
        field.grid.nodes[window][None, :] ** q
    bound = float(np.max(weighted))
    return CheckResult(
        name=f"pointwise_gradient_p{p}",
        claim="weighted slope bounded between twice eps and R",
        measured=bound, tolerance=float("inf"),
        passed=bool(np.isfinite(bound)),
        extra={"exponent": q},
    )


def check_pointwise_stability(result_a: CheckResult, result_b: CheckResult,
                              rel: float = 0.2) -> CheckResult:
    """The weighted-slope bound must be stable (default 20%) under
    halving the inner radius."""
    a, b = result_a.measured, result_b.measured
    drift = abs(a - b) / max(abs(a), abs(b))
    return CheckResult(
        name="pointwise_gradient_stability",
        claim="weighted slope bound stable under halving the inner radius",
        measured=drift, tolerance=rel, passed=drift <= rel,
        extra={"bound_coarse": a, "bound_fine": b},
    )


# -- singularity shape --------------------------------------------------------

def fit_singularity(field: SpacetimeField, t_probe: float) -> ExponentFit:
    """Log-log fit of |u_r| against r on [2 eps, 20 eps] at one time."""
    eps = field.eps
    r = field.grid.nodes
    window = (r >= 2.0 * eps) & (r <= 20.0 * eps)
    if np.count_nonzero(window) < 8:
        raise ValueError("singularity window under-resolved on this grid")
    k = int(np.argmin(np.abs(field.times - t_probe)))
    grad = np.abs(field.gradient_matrix()[k, window])
    slope, logc, r2 = _linear_fit(np.log(r[window]), np.log(grad))
    return ExponentFit(
        exponent=slope, prefactor=float(np.exp(logc)), r_squared=r2,
        window=(2.0 * eps, 20.0 * eps),
    )


def check_singularity_shape(field: SpacetimeField,
                            t_probes: Sequence[float] | None = None,
                            exponent_range=(-0.70, -0.63),
                            min_r2: float = 0.99) -> CheckResult:
    """Slope blow-up exponent close to the stationary -2/3 at late times."""
    p = field.problem.params
    if t_probes is None:
        t_probes = [c / p.decay_rate for c in (1.0, 2.0, 5.0)]
    t_probes = [min(t, field.times[-1]) for t in t_probes]
    try:
        fits = [fit_singularity(field, t) for t in t_probes]
    except ValueError:
        return CheckResult(
            name="singularity_exponent",
            claim="slope blow-up exponent matches the stationary cube-root",
            measured=float("nan"), tolerance=float("nan"),
            passed=False, status="inconclusive",
        )
    exponents = [f.exponent for f in fits]
    r2s = [f.r_squared for f in fits]
    ok = all(exponent_range[0] <= e <= exponent_range[1] for e in exponents) \
        and all(r2 >= min_r2 for r2 in r2s)
    worst = max(exponents, key=lambda e: abs(e + 2.0 / 3.0))
    return CheckResult(
        name="singularity_exponent",
        claim="slope blow-up exponent matches the stationary cube-root",
        measured=worst, tolerance=exponent_range[1], passed=ok,
        extra={
            "exponents": exponents,
            "r_squared": r2s,
            "prefactors": [f.prefactor for f in fits],
            "times": list(t_probes),
        },
    )


def check_shape_functional(field: SpacetimeField,
                           t_probes: Sequence[float] | None = None,
                           margin: float = 1.05) -> CheckResult:
    """max_r r^(3/2 - n - nu) (u* - u) stays below margin * C at the probes.

    Taken over r >= 2 eps: the weight blows up like eps^(3/2 - n - nu) at
    the regularization boundary and would amplify the inner discretization
    floor (the true deficit there is the exactly-enforced mode trace, but
    its neighbors carry truncation error far above the mode size once
    n - 3/2 + nu is large).  Boundedness is checked on the resolved radii,
    matching the slope-window convention of the other inner-limited checks.
    """
    p = field.problem.params
    if t_probes is None:
        t_probes = [c / p.decay_rate for c in (1.0, 2.0, 5.0)]
    t_probes = [min(t, field.times[-1]) for t in t_probes]
    r = field.grid.nodes
    sel = r >= 2.0 * field.eps
    us = analytic.u_star(p, r[sel])
    worst = 0.0
    for t in t_probes:
        k = int(np.argmin(np.abs(field.times - t)))
        fun = r[sel] ** (1.5 - p.n - p.nu) * (us - field.values[k, sel])
        worst = max(worst, float(np.max(fun)))
    tol = margin * p.C if p.C > 0 else margin
    return CheckResult(
        name="shape_functional",
        claim="origin-weighted deficit stays below the mode amplitude",
        measured=worst, tolerance=tol, passed=worst <= tol,
        extra={"window": (2.0 * field.eps, p.R)},
    )


# -- large-time convergence ---------------------------------------------------

def fit_decay(field: SpacetimeField) -> ExponentFit:
    """Log-linear fit of sup_r |u - u*| on the late half of the run.

    The fitted ``exponent`` is the decay rate (positive for decay).
    """
    us = field.u_star_row()
    D = np.max(np.abs(field.values - us[None, :]), axis=1)
    t = field.times
    late = t >= 0.5 * t[-1]
    if np.max(D) == 0.0:
        return ExponentFit(exponent=float("inf"), prefactor=0.0, r_squared=1.0,
                           window=(float(t[-1]) / 2.0, float(t[-1])))
    slope, logc, r2 = _linear_fit(t[late], np.log(D[late]))
    return ExponentFit(
        exponent=-slope, prefactor=float(np.exp(logc)), r_squared=r2,
        window=(float(t[-1]) / 2.0, float(t[-1])),
    )


def check_decay_envelope(field: SpacetimeField,
                         tol: float | None = None) -> CheckResult:
    """sup_r |u - u*| <= exp(-lam^2 t) sup_r v(., 0) + tol at every stored t."""
    tol = tol_sandwich(field) if tol is None else tol
    p = field.problem.params
    us = field.u_star_row()
    D = np.max(np.abs(field.values - us[None, :]), axis=1)
    env = np.exp(-p.decay_rate * field.times) * float(np.max(field.mode_matrix()[0]))
    worst = float(np.max(D - env))
    if p.C == 0.0:
        return CheckResult(
            name="decay_envelope",
            claim="difference to the stationary profile under the mode envelope",
            measured=float(np.max(D)), tolerance=tol,
            passed=float(np.max(D)) <= tol, status="exact",
        )
    return CheckResult(
        name="decay_envelope",
        claim="difference to the stationary profile under the mode envelope",
        measured=max(worst, 0.0), tolerance=tol, passed=worst <= tol,
    )


def check_decay_rate(field: SpacetimeField,
                     min_fraction: float = 0.9) -> CheckResult:
    """Fitted convergence rate at least min_fraction of the mode rate.

    Only the lower bound is asserted; the analytical guarantee is the upper
    envelope, so a faster measured rate is recorded, not judged.
    """
    p = field.problem.params
    if p.C == 0.0:
        return CheckResult(
            name="decay_rate",
            claim="uniform convergence to the stationary profile at mode rate",
            measured=float("inf"), tolerance=min_fraction * p.decay_rate,
            passed=True, status="exact",
        )
    fit = fit_decay(field)
    us = field.u_star_row()
    D = np.max(np.abs(field.values - us[None, :]), axis=1)
    need = min_fraction * p.decay_rate
    floor = float(np.min(D))
    window_peak = float(np.max(D[field.times >= 0.5 * field.times[-1]]))
    if window_peak <= 10.0 * floor:
        # the difference already collapsed to its numerical floor before the
        # fit window: decay outran measurability, so no rate can be fitted
        return CheckResult(
            name="decay_rate",
            claim="uniform convergence to the stationary profile at mode rate",
            measured=fit.exponent, tolerance=need, passed=True,
            status="inconclusive",
            extra={"mode_rate": p.decay_rate, "plateau": floor,
                   "reason": "difference at the discretization floor"},
        )
    return CheckResult(
        name="decay_rate",
        claim="uniform convergence to the stationary profile at mode rate",
        measured=fit.exponent, tolerance=need, passed=fit.exponent >= need,
        extra={
            "mode_rate": p.decay_rate,
            "r_squared": fit.r_squared,
            "plateau": floor,
        },
    )


# -- distributional identity --------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Radial bump with exact derivative, compactly supported in (0, R)."""

    name: str
    value: Callable
    derivative: Callable


def default_test_functions(params) -> list[TestFunction]:
    """Two origin-centered bumps plus one shell kept away from both
    boundaries; all are cubes of parabolic profiles, so two continuous
    derivatives vanish at the support edge."""
    R = params.R

    def bump(rho):
        def s(r):
            return np.clip(1.0 - (r / rho) ** 2, 0.0, None) ** 3

        def sp(r):
            return -6.0 * r / rho ** 2 * np.clip(1.0 - (r / rho) ** 2, 0.0, None) ** 2

        return s, sp

    def shell(center, width):
        def s(r):
            return np.clip(1.0 - ((r - center) / width) ** 2, 0.0, None) ** 3

        def sp(r):
            z = (r - center) / width
            return -6.0 * z / width * np.clip(1.0 - z ** 2, 0.0, None) ** 2

        return s, sp

    out = []
    for label, rho in (("origin_bump_narrow", 0.35 * R), ("origin_bump_wide", 0.7 * R)):
        s, sp = bump(rho)
        out.append(TestFunction(label, s, sp))
    s, sp = shell(0.45 * R, 0.25 * R)
    out.append(TestFunction("interior_shell", s, sp))
    return out


def weak_form_residual(field: SpacetimeField, tf: TestFunction) -> tuple[float, float]:
    """|LHS - RHS| of the distributional identity for one test function.

    Both sides are integrated against the radial measure r^(n-1) dr with
    dual-cell (midpoint) weights on the graded mesh and the trapezoid rule
    in time; the time window (t (T-t))^2 supplies the compact support in t.
    Returns (residual, scale) with scale the sum of the term magnitudes.
    """
    p = field.problem.params
    r = field.grid.nodes
    t = field.times
    T = float(t[-1])
    u = field.values
    ur = field.gradient_matrix()
    wt = (t * (T - t) / (T * T / 4.0)) ** 2
    wtp = 2.0 * (t * (T - t)) * (T - 2.0 * t) / (T * T / 4.0) ** 2
    mid = np.concatenate(([r[0]], 0.5 * (r[1:] + r[:-1]), [r[-1]]))
    wr = (mid[1:] ** p.n - mid[:-1] ** p.n) / p.n
    s = tf.value(r)
    sp = tf.derivative(r)
    lhs = -np.trapezoid(wtp * ((u * s[None, :]) @ wr), t)
    rhs_flux = -np.trapezoid(wt * ((ur * sp[None, :]) @ wr), t)
    rhs_react = np.trapezoid(wt * ((u * ur ** 3 * s[None, :]) @ wr), t)
    residual = abs(float(lhs - rhs_flux - rhs_react))
    scale = abs(float(lhs)) + abs(float(rhs_flux)) + abs(float(rhs_react))
    return residual, scale


def check_weak_identity(field: SpacetimeField,
                        test_functions: Sequence[TestFunction] | None = None,
                        ) -> list[CheckResult]:
    """Residual of the distributional identity per test function.

    Needs n >= 3 (for n = 2 the reaction term is not integrable across the
    origin and the checks report skipped).  Each residual must stay below
    a tenth of the combined term magnitudes; the sharper statement (the
    residual vanishes under refinement) is asserted by the refinement and
    continuation studies, not here.
    """
    p = field.problem.params
    if test_functions is None:
        test_functions = default_test_functions(p)
    out = []
    for tf in test_functions:
        if not p.weak_form_ok:
            out.append(CheckResult(
                name=f"weak_identity_{tf.name}",
                claim="distributional identity across the origin",
                measured=float("nan"), tolerance=float("nan"),
                passed=True, status="skipped",
                extra={"reason": "needs dimension >= 3"},
            ))
            continue
        residual, scale = weak_form_residual(field, tf)
        out.append(CheckResult(
            name=f"weak_identity_{tf.name}",
            claim="distributional identity across the origin",
            measured=residual, tolerance=0.1 * scale,
            passed=residual <= 0.1 * scale,
            extra={"scale": scale},
        ))
    return out


def inner_mass_integral(field: SpacetimeField, eps_tilde: float) -> float:
    """(1 / e) int_0^T int_0^e r^(n-1) |u_r| dr dt  at e = eps_tilde."""
    p = field.problem.params
    r = field.grid.nodes
    mid = np.concatenate(([r[0]], 0.5 * (r[1:] + r[:-1]), [r[-1]]))
    wr = (np.minimum(mid[1:], eps_tilde) ** p.n
          - np.minimum(mid[:-1], eps_tilde) ** p.n) / p.n
    ur = np.abs(field.gradient_matrix())
    return float(np.trapezoid(ur @ wr, field.times) / eps_tilde)


def check_inner_mass(field: SpacetimeField,
                     eps_values: Sequence[float]) -> CheckResult:
    """The averaged inner slope mass must decrease toward 0 along the
    given decreasing inner radii."""
    values = [inner_mass_integral(field, e) for e in eps_values]
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    return CheckResult(
        name="inner_slope_mass",
        claim="averaged slope mass near the origin vanishes in the limit",
        measured=values[-1], tolerance=values[0],
        passed=bool(decreasing and values[-1] > 0.0),
        extra={"values": values, "eps_values": list(eps_values)},
    )


# -- scheme comparison and continuation ---------------------------------------

compact_window_difference = compact_difference


def check_uniqueness_surrogate(field_a: SpacetimeField, field_b: SpacetimeField,
                               tol: float = 1e-3,
                               r_fraction: float = 0.1,
                               t_start: float = 0.5) -> CheckResult:
    """Fields from two distinct schemes agree on the compact window."""
    R = field_a.problem.params.R
    T = float(field_a.times[-1])
    diff = compact_window_difference(
        field_a, field_b, (r_fraction * R, R), (min(t_start, 0.5 * T), T)
    )
    return CheckResult(
        name="uniqueness_surrogate",
        claim="independent schemes converge to the same monotone solution",
        measured=diff, tolerance=tol, passed=diff <= tol,
        extra={"schemes": (field_a.scheme_name, field_b.scheme_name)},
    )


def check_continuation_cauchy(diffs: Sequence[float]) -> CheckResult:
    """Consecutive compact-window differences strictly decreasing."""
    diffs = [float(d) for d in diffs]
    ok = len(diffs) >= 2 and all(b < a for a, b in zip(diffs, diffs[1:]))
    return CheckResult(
        name="continuation_cauchy",
        claim="shrinking-annulus fields form a Cauchy sequence in sup norm",
        measured=diffs[-1] if diffs else float("nan"),
        tolerance=diffs[0] if diffs else float("nan"),
        passed=bool(ok),
        extra={"diffs": diffs},
    )
