"""Time integration of the regularized annulus problem and the
shrinking-annulus continuation.

Space: second-order finite differences on a graded mesh
r_i = eps + (R - eps) (i/M)^gamma, which clusters nodes at the inner
boundary where the solution inherits the r^(-2/3) slope growth of the
stationary profile.  The radial Laplacian u_rr + (n-1)/r u_r uses the
compact nonuniform three-point stencil; the gradient entering the
nonlinearity uses the matching central stencil inside and one-sided
second-order stencils at the boundary nodes.

Time: a theta-scheme solved by damped Newton with a tridiagonal banded
Jacobian.  theta = 1 is implicit Euler (the robust default), theta = 1/2
the trapezoidal rule (config name ``imex_cn``; the gradient nonlinearity
is solved implicitly here too, because treating it explicitly is
advectively unstable on the graded mesh, whose smallest cell scales like
(R - eps)/M^2).  Newton failure halves the step and retries to a depth
cap before aborting.

The continuation solves a decreasing sequence of inner radii, reports
sup-norm differences of consecutive fields on a common compact window,
and appends the origin value 0 to the finest field as the limit estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from . import initdata as idata
from .analytic import ModelParams, u_star
from .initdata import EpsilonProblem, InitialDatum

__all__ = [
    "RadialGrid",
    "SchemeConfig",
    "GridPolicy",
    "SpacetimeField",
    "ContinuationResult",
    "SolverAbort",
    "discretize_operator",
    "step",
    "solve_annulus",
    "continuation",
]

_STEPPER_THETA = {
    "implicit_euler": 1.0,
    "imex_cn": 0.5,          # config token; trapezoidal stage, see module docstring
    "crank_nicolson": 0.5,   # honest alias
}


class SolverAbort(RuntimeError):
    """Newton failed to converge after exhausting the step-halving budget."""

    def __init__(self, message, eps=None, step_index=None, time=None):
        super().__init__(message)
        self.eps = eps
        self.step_index = step_index
        self.time = time


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radial nodes with power-law clustering."""

    nodes: np.ndarray
    grading_exponent: float = 2.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 4:
            raise ValueError("grid needs at least 4 nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def make(cls, eps: float, R: float, num_nodes: int = 400,
             grading_exponent: float = 2.0) -> "RadialGrid":
        if not 0 <= eps < R:
            raise ValueError("need 0 <= eps < R")
        i = np.arange(num_nodes + 1) / num_nodes
        nodes = eps + (R - eps) * i ** grading_exponent
        nodes[0], nodes[-1] = eps, R  # exact endpoints
        return cls(nodes=nodes, grading_exponent=grading_exponent)

    @property
    def h_max(self) -> float:
        return float(np.max(np.diff(self.nodes)))

    @property
    def nodes_per_inner_decade(self) -> int:
        """Node count in [r_0, 10 r_0); large when the full decade lies
        outside the grid."""
        r0 = self.nodes[0]
        if r0 <= 0 or 10.0 * r0 >= self.nodes[-1]:
            return self.nodes.size
        return int(np.count_nonzero(self.nodes < 10.0 * r0))

    def _central_weights(self):
        r = self.nodes
        hm = r[1:-1] - r[:-2]
        hp = r[2:] - r[1:-1]
        return hm, hp

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """First derivative: central nonuniform inside, one-sided second
        order at the two boundary nodes."""
        r = self.nodes
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u, dtype=float)
        hm, hp = self._central_weights()
        out[..., 1:-1] = (
            -hp / (hm * (hm + hp)) * u[..., :-2]
            + (hp - hm) / (hm * hp) * u[..., 1:-1]
            + hm / (hp * (hm + hp)) * u[..., 2:]
        )
        for pos, (i0, i1, i2) in (("L", (0, 1, 2)), ("R", (-1, -2, -3))):
            x0, x1, x2 = r[i0], r[i1], r[i2]
            w0 = (2 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
            w1 = (x0 - x2) / ((x1 - x0) * (x1 - x2))
            w2 = (x0 - x1) / ((x2 - x0) * (x2 - x1))
            out[..., i0] = w0 * u[..., i0] + w1 * u[..., i1] + w2 * u[..., i2]
        return out


@dataclass(frozen=True)
class LaplacianOperator:
    """Interior stencil of u_rr + (n-1)/r u_r with Dirichlet identity rows."""

    grid: RadialGrid
    n: int
    sub: np.ndarray    # coefficient of u[i-1] in row i (interior rows)
    diag: np.ndarray   # coefficient of u[i]
    sup: np.ndarray    # coefficient of u[i+1]
    dsub: np.ndarray   # same decomposition for the first-derivative stencil
    ddiag: np.ndarray
    dsup: np.ndarray

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Lap(u) at interior nodes, 0 at the Dirichlet rows."""
        out = np.zeros_like(np.asarray(u, dtype=float))
        out[..., 1:-1] = (
            self.sub * u[..., :-2] + self.diag * u[..., 1:-1] + self.sup * u[..., 2:]
        )
        return out


def discretize_operator(grid: RadialGrid, n: int) -> LaplacianOperator:
    """Assemble the radial Laplacian stencil on a nonuniform grid.

    Exact for quadratics (both the second-derivative and the gradient
    pieces are three-point Lagrange derivatives), hence second-order on
    smoothly graded meshes.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    r = grid.nodes
    hm, hp = grid._central_weights()
    c_m = 2.0 / (hm * (hm + hp))
    c_0 = -2.0 / (hm * hp)
    c_p = 2.0 / (hp * (hm + hp))
    d_m = -hp / (hm * (hm + hp))
    d_0 = (hp - hm) / (hm * hp)
    d_p = hm / (hp * (hm + hp))
    coef = (n - 1) / r[1:-1]
    return LaplacianOperator(
        grid=grid, n=n,
        sub=c_m + coef * d_m, diag=c_0 + coef * d_0, sup=c_p + coef * d_p,
        dsub=d_m, ddiag=d_0, dsup=d_p,
    )


@dataclass(frozen=True)
class SchemeConfig:
    """Time-stepping controls.

    ``dt_control`` caps the number of emergency step halvings after a
    Newton failure before the run aborts.
    """

    time_stepper: str = "implicit_euler"
    dt_initial: float = 1e-3
    dt_control: int = 6
    newton_tol: float = 1e-11
    newton_max_iter: int = 14

    def __post_init__(self):
        if self.time_stepper not in _STEPPER_THETA:
            raise ValueError(
                f"unknown stepper {self.time_stepper!r}; choose from "
                f"{sorted(_STEPPER_THETA)}"
            )
        if self.dt_initial <= 0 or self.newton_tol <= 0:
            raise ValueError("tolerances and steps must be positive")

    @property
    def theta(self) -> float:
        return _STEPPER_THETA[self.time_stepper]

    @property
    def order(self) -> int:
        return 2 if self.theta == 0.5 else 1


@dataclass(frozen=True)
class GridPolicy:
    num_nodes: int = 400
    grading_exponent: float = 2.0

    def build(self, eps: float, R: float) -> RadialGrid:
        return RadialGrid.make(eps, R, self.num_nodes, self.grading_exponent)


class _Stepper:
    """Newton machinery shared by all steps of one annulus run."""

    def __init__(self, problem: EpsilonProblem, grid: RadialGrid,
                 scheme: SchemeConfig):
        self.problem = problem
        self.grid = grid
        self.scheme = scheme
        self.op = discretize_operator(grid, problem.params.n)
        self.outer = problem.outer_bc()

    def rhs(self, u: np.ndarray) -> np.ndarray:
        """Lap(u) + u f(u_r) at interior nodes (boundary rows zero)."""
        du = self.grid.gradient(u)
        out = self.op.apply(u)
        out[1:-1] += u[1:-1] * self.problem.cutoff.apply(du[1:-1])
        return out

    def _residual(self, u, u_old, rhs_old, t_new, dt):
        th = self.scheme.theta
        g = u - u_old - dt * (th * self.rhs(u) + (1.0 - th) * rhs_old)
        g[0] = u[0] - self.problem.inner_bc(t_new)
        g[-1] = u[-1] - self.outer
        return g

    def _jacobian_banded(self, u, dt):
        th = self.scheme.theta
        npts = u.size
        du = self.grid.gradient(u)
        f = self.problem.cutoff.apply(du[1:-1])
        fp = self.problem.cutoff.derivative(du[1:-1])
        ui = u[1:-1]
        row_sub = self.op.sub + ui * fp * self.op.dsub
        row_diag = self.op.diag + f + ui * fp * self.op.ddiag
        row_sup = self.op.sup + ui * fp * self.op.dsup
        ab = np.zeros((3, npts))
        ab[1, 0] = ab[1, -1] = 1.0  # Dirichlet identity rows
        ab[1, 1:-1] = 1.0 - dt * th * row_diag
        ab[0, 2:] = -dt * th * row_sup          # superdiagonal, columns 2..
        ab[2, :-2] = -dt * th * row_sub         # subdiagonal, columns 0..
        return ab

    def newton_step(self, u_old, t_old, t_new):
        dt = t_new - t_old
        th = self.scheme.theta
        rhs_old = self.rhs(u_old) if th < 1.0 else np.zeros_like(u_old)
        u = u_old.copy()
        u[0] = self.problem.inner_bc(t_new)
        u[-1] = self.outer
        # Convergence is judged by the Newton increment: the residual itself
        # carries dt/h_min^2-amplified rounding on the graded mesh and never
        # reaches newton_tol in absolute terms.
        for _ in range(self.scheme.newton_max_iter):
            g = self._residual(u, u_old, rhs_old, t_new, dt)
            ab = self._jacobian_banded(u, dt)
            delta = solve_banded((1, 1), ab, -g)
            scale = 1.0 + float(np.max(np.abs(u)))
            if float(np.max(np.abs(delta))) <= self.scheme.newton_tol * scale:
                return u + delta
            norm = float(np.max(np.abs(g)))
            s = 1.0
            while s >= 1.0 / 256.0:
                trial = u + s * delta
                g_trial = self._residual(trial, u_old, rhs_old, t_new, dt)
                if float(np.max(np.abs(g_trial))) <= (1.0 - 0.25 * s) * norm:
                    u = trial
                    break
                s *= 0.5
            else:
                if float(np.max(np.abs(delta))) <= 1e4 * self.scheme.newton_tol * scale:
                    return u + delta  # stagnated at the rounding floor
                raise _NewtonFailure
        raise _NewtonFailure

    def advance(self, u_old, t_old, t_new, depth=0):
        try:
            return self.newton_step(u_old, t_old, t_new)
        except _NewtonFailure:
            if depth >= self.scheme.dt_control:
                raise SolverAbort(
                    f"Newton stalled at t={t_new:.6g} after "
                    f"{self.scheme.dt_control} step halvings",
                    eps=self.problem.epsilon, time=t_new,
                )
            t_mid = 0.5 * (t_old + t_new)
            u_mid = self.advance(u_old, t_old, t_mid, depth + 1)
            return self.advance(u_mid, t_mid, t_new, depth + 1)


class _NewtonFailure(Exception):
    pass


def step(u, t, dt, problem: EpsilonProblem, grid: RadialGrid,
         scheme: SchemeConfig) -> np.ndarray:
    """Advance one state by dt (standalone convenience wrapper)."""
    return _Stepper(problem, grid, scheme).advance(
        np.asarray(u, dtype=float), float(t), float(t) + float(dt)
    )


@dataclass
class SpacetimeField:
    """Stored solution of one annulus run.

    Boundary columns reproduce the Dirichlet closures exactly at every
    stored time; ``cutoff_active`` records whether any reconstructed
    gradient ever left the exact-cube range of the nonlinearity.
    """

    grid: RadialGrid
    times: np.ndarray
    values: np.ndarray
    problem: EpsilonProblem
    scheme_name: str
    max_abs_gradient: float = 0.0
    cutoff_active: bool = False
    origin_appended: bool = False
    _gradient: np.ndarray | None = field(default=None, repr=False)

    @property
    def eps(self) -> float:
        return self.problem.epsilon

    def gradient_matrix(self) -> np.ndarray:
        """u_r reconstructed with the solver stencil, one row per time."""
        if self._gradient is None:
            self._gradient = self.grid.gradient(self.values)
        return self._gradient

    def u_star_row(self) -> np.ndarray:
        return u_star(self.problem.params, self.grid.nodes)

    def mode_matrix(self) -> np.ndarray:
        from .analytic import v_mode  # local import to keep module load light

        return v_mode(
            self.problem.params,
            self.grid.nodes[None, :],
            self.times[:, None],
        )


def solve_annulus(problem: EpsilonProblem, grid: RadialGrid, T: float,
                  scheme: SchemeConfig) -> SpacetimeField:
    """Integrate the annulus problem on [0, T] from its bridged datum.

    The step count is the nearest integer to T/dt; the effective uniform
    step is T divided by that count, so the final time is hit exactly and
    identical configurations reproduce identical fields bit for bit.
    """
    if not np.array_equal(grid.nodes, problem.nodes):
        raise ValueError("grid does not match the problem's datum grid")
    if scheme.dt_initial > T:
        raise ValueError("step exceeds the integration horizon")
    if grid.nodes_per_inner_decade < 3:
        raise ValueError(
            "grid resolves fewer than 3 nodes in the first radial decade; "
            "increase the node count or the grading exponent"
        )
    n_steps = max(1, int(round(T / scheme.dt_initial)))
    times = np.linspace(0.0, T, n_steps + 1)
    values = np.empty((n_steps + 1, grid.nodes.size))
    values[0] = problem.u0eps.values
    stepper = _Stepper(problem, grid, scheme)
    u = values[0].copy()
    max_grad = float(np.max(np.abs(grid.gradient(u))))
    for k in range(n_steps):
        try:
            u = stepper.advance(u, times[k], times[k + 1])
        except SolverAbort as abort:
            raise SolverAbort(
                str(abort), eps=problem.epsilon, step_index=k, time=times[k + 1]
            ) from None
        values[k + 1] = u
        g = float(np.max(np.abs(grid.gradient(u))))
        if g > max_grad:
            max_grad = g
    field_out = SpacetimeField(
        grid=grid, times=times, values=values, problem=problem,
        scheme_name=scheme.time_stepper,
        max_abs_gradient=max_grad,
        cutoff_active=bool(max_grad > problem.c_star_eps),
    )
    _check_apriori_box(field_out)
    return field_out


def _check_apriori_box(field_out: SpacetimeField) -> None:
    p = field_out.problem.params
    bound = abs(u_star(p, p.R)) + float(np.max(field_out.mode_matrix()[0])) + 1e-9
    worst = float(np.max(np.abs(field_out.values)))
    if worst > bound * (1.0 + 1e-6):
        raise SolverAbort(
            f"solution left the a-priori box: max|u|={worst:.3g} > {bound:.3g}",
            eps=field_out.problem.epsilon,
        )


@dataclass
class ContinuationResult:
    """Fields of the shrinking-annulus sequence plus the limit estimate.

    ``aborted`` carries the abort of a later run when earlier inner radii
    completed; the fields solved so far are retained either way.
    """

    fields: list
    consecutive_diffs: list
    limit: SpacetimeField
    compact_window: tuple
    aborted: SolverAbort | None = None

    @property
    def finest(self) -> SpacetimeField:
        return self.fields[-1]


def _append_origin(field_in: SpacetimeField) -> SpacetimeField:
    """Limit-estimate convention: prepend r = 0 with value 0."""
    nodes = np.concatenate(([0.0], field_in.grid.nodes))
    grid = RadialGrid(nodes=nodes,
                      grading_exponent=field_in.grid.grading_exponent)
    values = np.concatenate(
        (np.zeros((field_in.values.shape[0], 1)), field_in.values), axis=1
    )
    return SpacetimeField(
        grid=grid, times=field_in.times, values=values,
        problem=field_in.problem, scheme_name=field_in.scheme_name,
        max_abs_gradient=field_in.max_abs_gradient,
        cutoff_active=field_in.cutoff_active,
        origin_appended=True,
    )


def compact_difference(a: SpacetimeField, b: SpacetimeField,
                       r_window: tuple, t_window: tuple,
                       num_radii: int = 201) -> float:
    """Sup-norm difference of two fields on a shared compact window.

    Radial sampling is cubic-spline interpolation: the fields live on
    different graded grids and linear interpolation would contribute
    O(h^2) noise comparable to the smallest genuine differences.
    """
    radii = np.linspace(r_window[0], r_window[1], num_radii)
    mask_a = (a.times >= t_window[0] - 1e-12) & (a.times <= t_window[1] + 1e-12)
    mask_b = (b.times >= t_window[0] - 1e-12) & (b.times <= t_window[1] + 1e-12)
    common = np.intersect1d(a.times[mask_a], b.times[mask_b])
    if common.size == 0:
        raise ValueError("fields share no stored times in the window")
    va = CubicSpline(a.grid.nodes, a.values[np.isin(a.times, common)], axis=1)(radii)
    vb = CubicSpline(b.grid.nodes, b.values[np.isin(b.times, common)], axis=1)(radii)
    return float(np.max(np.abs(va - vb)))


def continuation(
    params: ModelParams,
    datum: InitialDatum,
    eps_sequence,
    policy: GridPolicy,
    T: float,
    scheme: SchemeConfig,
    compact_r_fraction: float = 0.1,
    compact_t_start: float = 0.5,
    progress: Callable | None = None,
) -> ContinuationResult:
    """Solve the annulus problems for a decreasing eps sequence.

    Consecutive fields are compared in sup norm on the compact window
    [compact_r_fraction * R, R] x [compact_t_start, T]; partial results
    are kept if a later run aborts.
    """
    eps_sequence = [float(e) for e in eps_sequence]
    if any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise ValueError("eps sequence must be strictly decreasing")
    if eps_sequence[0] >= compact_r_fraction * params.R:
        raise ValueError(
            "largest eps reaches into the compact comparison window; "
            "shrink eps or widen the window"
        )
    fields = []
    aborted = None
    for eps in eps_sequence:
        grid = policy.build(eps, params.R)
        problem = idata.make_epsilon_problem(params, datum, eps, grid.nodes)
        try:
            fields.append(solve_annulus(problem, grid, T, scheme))
        except SolverAbort as abort:
            aborted = abort
            break
        if progress is not None:
            progress(eps)
    if not fields:
        raise aborted
    r_window = (compact_r_fraction * params.R, params.R)
    t_window = (min(compact_t_start, 0.5 * T), T)
    diffs = [
        compact_difference(a, b, r_window, t_window)
        for a, b in zip(fields, fields[1:])
    ]
    return ContinuationResult(
        fields=fields,
        consecutive_diffs=diffs,
        limit=_append_origin(fields[-1]),
        compact_window=(r_window, t_window),
        aborted=aborted,
    )
