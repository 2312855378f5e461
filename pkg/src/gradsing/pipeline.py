"""Run orchestration: model derivation, annulus continuation, property
suite, artifact persistence, and plot-data emission.

Stages run in dependency order: derived constants and closed-form
residual gates first, then initial data, then the shrinking-annulus
solves, then every enabled check against the stored fields.  All
artifacts are deterministic (no timestamps, fixed float formatting), so
re-running an unchanged configuration reproduces identical bytes; the
manifest records the configuration hash and per-file checksums.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import analytic, initdata, solver, verify
from .analytic import ModelParams
from .config import RunConfig
from .report import CheckResult, VerificationReport

__all__ = [
    "PipelineResult",
    "build_model",
    "analytic_checks",
    "run_pipeline",
    "emit_plotdata",
    "resolve_output_dir",
]

_FLOAT_FMT = "%.17g"


@dataclass
class PipelineResult:
    config: RunConfig
    params: ModelParams
    datum: object
    report: VerificationReport
    continuation: solver.ContinuationResult | None = None
    reference_field: solver.SpacetimeField | None = None
    artifacts: dict = dc_field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 0 if self.report.all_passed() else 1


def resolve_output_dir(config: RunConfig) -> Path:
    root = os.environ.get("GRADSING_OUTPUT_ROOT", ".")
    return Path(root) / config.output.directory


def build_model(config: RunConfig):
    """Derive admissible parameters and a validated initial datum.

    The mode amplitude is fitted from the datum unless the policy fixes
    it; a fitted zero (degenerate datum) is clamped to the configured
    floor so that downstream envelopes stay nontrivial.
    """
    m = config.model
    params0 = analytic.make_params(
        m.n, R=m.R, lam=m.lam, C=config.initdata.deficit_amplitude,
        lambda_fraction=m.lambda_fraction, R_fraction=m.R_fraction,
    )
    datum = initdata.make_initial_datum(
        params0,
        family=config.initdata.family,
        k=config.initdata.blend_exponent,
        amplitude=config.initdata.deficit_amplitude,
    )
    if m.amplitude_policy == "fixed":
        C = m.amplitude
    else:
        C = initdata.choose_amplitude_C(params0, datum)
        if C == 0.0:
            C = m.amplitude_floor
    return params0.replace(C=C), datum


def analytic_checks(params: ModelParams) -> list[CheckResult]:
    """Closed-form residual gates on the probe lattice."""
    r, t = analytic.probe_lattice(params)
    res_s = analytic.residual_stationary(params, r[0])
    scale_s = analytic.stationary_residual_scale(params, r[0])
    worst_s = float(np.max(np.abs(res_s) / scale_s))
    out = [CheckResult(
        name="stationary_residual",
        claim="cube-root profile annihilates the flow, relative to its scale",
        measured=worst_s, tolerance=1e-12, passed=worst_s <= 1e-12,
    )]
    if params.C > 0:
        res_l = analytic.residual_linearized(params, r, t)
        v = analytic.v_mode(params, r, t)
        worst_l = float(np.max(np.abs(res_l) / np.maximum(1.0, np.abs(v))))
        defect = float(np.max(analytic.subsolution_defect(params, r, t)))
    else:
        worst_l = 0.0
        defect = float(np.max(analytic.subsolution_defect(params, r, t)))
    out.append(CheckResult(
        name="linearized_residual",
        claim="separated mode solves the linearized flow",
        measured=worst_l, tolerance=1e-8, passed=worst_l <= 1e-8,
    ))
    out.append(CheckResult(
        name="subsolution_sign",
        claim="stationary-minus-mode stays a subsolution on the lattice",
        measured=defect, tolerance=1e-8, passed=defect <= 1e-8,
    ))
    return out


def _find_field(fields, eps):
    for f in fields:
        if abs(f.eps - eps) <= 1e-12 * max(1.0, eps):
            return f
    return None


def run_pipeline(config: RunConfig, only: str | None = None,
                 write: bool = True) -> PipelineResult:
    """Execute the full pipeline for one configuration.

    ``only='analytic'`` stops after the closed-form residual gates
    (seconds instead of minutes).  With ``write`` the fields, report and
    manifest are persisted under the resolved output directory.
    """
    config.validate()
    params, datum = build_model(config)
    report = VerificationReport(context={
        "name": config.name,
        "config_sha256": config.content_hash(),
    })
    enabled = config.verify.checks()

    if "analytic_residuals" in enabled:
        for c in analytic_checks(params):
            report.add(c)
    result = PipelineResult(config=config, params=params, datum=datum,
                            report=report)
    if only == "analytic":
        if write:
            _persist(result, fields=False)
        return result

    cont_cfg = config.continuation
    policy = solver.GridPolicy(cont_cfg.num_nodes, cont_cfg.grading_exponent)
    T = cont_cfg.horizon_efolds / params.decay_rate
    cont = solver.continuation(
        params, datum, cont_cfg.eps_sequence, policy, T, config.scheme,
        compact_r_fraction=cont_cfg.compact_r_fraction,
        compact_t_start=cont_cfg.compact_t_start,
    )
    result.continuation = cont
    reference = _find_field(cont.fields, cont_cfg.reference_eps)
    result.reference_field = reference
    finest = cont.finest

    ver = config.verify
    ts = ver.tol_sandwich
    tg = ver.tol_grad
    if "sandwich" in enabled:
        report.add(verify.check_sandwich(reference, tol=ts))
    if "monotone" in enabled:
        report.add(verify.check_monotone(reference, tol=tg))
    if "gradient_box" in enabled:
        report.add(verify.check_gradient_box(reference))
    if "boundary_bands" in enabled:
        report.add(verify.check_boundary_bands(reference, tol=tg))
    if "cutoff_inactive" in enabled:
        grid = reference.grid
        wide_problem = initdata.make_epsilon_problem(
            params, datum, reference.eps, grid.nodes, support_factor=4.0,
        )
        wide = solver.solve_annulus(wide_problem, grid, T, config.scheme)
        report.add(verify.check_cutoff_inactive(reference, wide))
    if "bernstein" in enabled:
        for p in ver.bernstein_powers:
            report.add(verify.check_weighted_bernstein(
                reference, p=p, delta_fraction=ver.bernstein_delta_fraction,
            ))
    if "pointwise_gradient" in enabled:
        res_ref = verify.check_pointwise_gradient(reference, p=ver.pointwise_power)
        report.add(res_ref)
        half = _find_field(cont.fields, reference.eps / 2.0)
        if half is not None:
            res_half = verify.check_pointwise_gradient(half, p=ver.pointwise_power)
            report.add(verify.check_pointwise_stability(res_ref, res_half))
    if "singularity" in enabled:
        report.add(verify.check_singularity_shape(finest))
    if "shape_functional" in enabled:
        report.add(verify.check_shape_functional(finest))
    if "decay" in enabled:
        report.add(verify.check_decay_envelope(reference, tol=ts))
        report.add(verify.check_decay_rate(reference))
    if "weak_identity" in enabled:
        for c in verify.check_weak_identity(cont.limit):
            report.add(c)
    if "inner_mass" in enabled:
        if params.weak_form_ok:
            report.add(verify.check_inner_mass(cont.limit,
                                               cont_cfg.eps_sequence[:3]))
        else:
            report.add(CheckResult(
                name="inner_slope_mass",
                claim="averaged slope mass near the origin vanishes in the limit",
                measured=float("nan"), tolerance=float("nan"),
                passed=True, status="skipped",
                extra={"reason": "needs dimension >= 3"},
            ))
    if "uniqueness" in enabled:
        other_name = ("imex_cn" if config.scheme.time_stepper == "implicit_euler"
                      else "implicit_euler")
        other_scheme = solver.SchemeConfig(
            other_name, dt_initial=config.scheme.dt_initial,
            dt_control=config.scheme.dt_control,
            newton_tol=config.scheme.newton_tol,
            newton_max_iter=config.scheme.newton_max_iter,
        )
        grid = finest.grid
        problem = finest.problem
        other_field = solver.solve_annulus(problem, grid, T, other_scheme)
        report.add(verify.check_uniqueness_surrogate(
            finest, other_field, tol=ver.uniqueness_tol,
            r_fraction=cont_cfg.compact_r_fraction,
            t_start=cont_cfg.compact_t_start,
        ))
    if "continuation_cauchy" in enabled:
        if len(cont.consecutive_diffs) >= 2:
            report.add(verify.check_continuation_cauchy(cont.consecutive_diffs))
        else:
            report.add(CheckResult(
                name="continuation_cauchy",
                claim="shrinking-annulus fields form a Cauchy sequence in sup norm",
                measured=float("nan"), tolerance=float("nan"),
                passed=True, status="skipped",
                extra={"reason": "needs at least 3 inner radii"},
            ))

    if write:
        _persist(result, fields=True)
    return result


# -- artifacts ----------------------------------------------------------------

def _write_field_csv(path: Path, fld: solver.SpacetimeField, save_every: int):
    grad = fld.gradient_matrix()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "r", "u", "u_r"])
        for k in range(0, fld.times.size, max(1, save_every)):
            t = fld.times[k]
            for j, r in enumerate(fld.grid.nodes):
                writer.writerow([
                    _FLOAT_FMT % t, _FLOAT_FMT % r,
                    _FLOAT_FMT % fld.values[k, j], _FLOAT_FMT % grad[k, j],
                ])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _persist(result: PipelineResult, fields: bool) -> None:
    out_dir = resolve_output_dir(result.config)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = {}
    if fields and result.continuation is not None:
        for fld in result.continuation.fields:
            name = f"field_eps{fld.eps:.6g}.csv"
            _write_field_csv(out_dir / name, fld, result.config.output.save_every)
            artifacts[name] = _sha256(out_dir / name)
        _write_field_csv(out_dir / "field_limit.csv", result.continuation.limit,
                         result.config.output.save_every)
        artifacts["field_limit.csv"] = _sha256(out_dir / "field_limit.csv")
    result.report.write_csv(out_dir / "report.csv")
    artifacts["report.csv"] = _sha256(out_dir / "report.csv")
    p = result.params
    manifest = {
        "name": result.config.name,
        "config_sha256": result.config.content_hash(),
        "config": result.config.canonical_text(),
        "params": {
            "n": p.n, "R": p.R, "lambda": p.lam, "C": p.C,
            "alpha": p.alpha, "nu": p.nu, "x0": p.x0, "x1": p.x1,
            "decay_rate": p.decay_rate,
        },
        "continuation_diffs": (
            list(result.continuation.consecutive_diffs)
            if result.continuation else []
        ),
        "artifacts": artifacts,
        "all_checks_passed": result.report.all_passed(),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts["manifest.json"] = str(out_dir / "manifest.json")
    result.artifacts = {k: str(out_dir / k) for k in artifacts}


# -- plot data ----------------------------------------------------------------

def _read_field_csv(path: Path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    times = np.unique(data["t"])
    radii = np.unique(data["r"])
    nt, nr = times.size, radii.size
    u = data["u"].reshape(nt, nr)
    ur = data["u_r"].reshape(nt, nr)
    return times, radii, u, ur


def _params_from_manifest(run_dir: Path) -> ModelParams:
    meta = json.loads((run_dir / "manifest.json").read_text())["params"]
    return ModelParams(
        n=int(meta["n"]), R=meta["R"], lam=meta["lambda"], C=meta["C"],
        alpha=meta["alpha"], nu=meta["nu"], x0=meta["x0"], x1=meta["x1"],
    )


def emit_plotdata(run_dir, times=(), radius_fractions=(0.1,),
                  source: str = "field_limit.csv") -> list[str]:
    """Columnar text for external plotting, from persisted field files.

    Writes one profile file per requested time (columns r, u, u_r, and the
    stationary and subsolution overlays) and one time-series file per
    requested radius fraction (columns t, u, difference to the stationary
    profile, and the decaying mode envelope).  An empty time selection
    produces just the header.
    """
    run_dir = Path(run_dir)
    src = run_dir / source
    if not src.exists():
        raise FileNotFoundError(f"field file missing: {src}")
    params = _params_from_manifest(run_dir)
    stored_t, radii, u, ur = _read_field_csv(src)
    written = []

    pos = radii > 0
    us = np.zeros_like(radii)
    us[pos] = analytic.u_star(params, radii[pos])
    for i, t_req in enumerate(times if times else [None]):
        path = run_dir / f"profile_{i}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "u", "u_r", "u_star", "u_star_minus_v"])
            if t_req is not None:
                k = int(np.argmin(np.abs(stored_t - t_req)))
                v = np.zeros_like(radii)
                v[pos] = analytic.v_mode(params, radii[pos], stored_t[k])
                for j in range(radii.size):
                    writer.writerow([
                        _FLOAT_FMT % radii[j], _FLOAT_FMT % u[k, j],
                        _FLOAT_FMT % ur[k, j], _FLOAT_FMT % us[j],
                        _FLOAT_FMT % (us[j] - v[j]),
                    ])
        written.append(str(path))
        if not times:
            break

    sup_v0 = float(np.max(analytic.v_mode(params, radii[pos], 0.0))) \
        if params.C > 0 else 0.0
    for frac in radius_fractions:
        r_req = frac * params.R
        j = int(np.argmin(np.abs(radii - r_req)))
        path = run_dir / f"series_r{frac:g}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "u", "u_minus_u_star", "mode_envelope"])
            for k in range(stored_t.size):
                env = np.exp(-params.decay_rate * stored_t[k]) * sup_v0
                writer.writerow([
                    _FLOAT_FMT % stored_t[k], _FLOAT_FMT % u[k, j],
                    _FLOAT_FMT % (u[k, j] - us[j]), _FLOAT_FMT % env,
                ])
        written.append(str(path))
    return written
