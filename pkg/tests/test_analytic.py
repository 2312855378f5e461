"""Closed-form layer: stationary profile, linear mode, subsolution, gate."""

import numpy as np
import pytest
import scipy.special

from gradsing import analytic
from gradsing.analytic import AdmissibilityError, make_params


@pytest.fixture(scope="module")
def params_n2():
    return make_params(2, R=0.6, C=1.0)


@pytest.fixture(scope="module")
def params_by_n():
    return {
        n: make_params(n, R=min(0.6, 0.9 * analytic.radius_bound(n)), C=1.0)
        for n in range(2, 7)
    }


class TestStationaryProfile:
    def test_values(self, params_n2):
        assert analytic.u_star(params_n2, 1.0) == pytest.approx(
            -1.4422495703074084, abs=1e-12
        )
        p3 = make_params(3, R=0.6, C=0.0)
        assert analytic.u_star(p3, 0.5) == pytest.approx(
            -1.8171205928321397, abs=1e-12
        )

    def test_origin_value_and_limit(self, params_n2):
        assert analytic.u_star(params_n2, 0.0) == 0.0
        assert abs(analytic.u_star(params_n2, 1e-30)) < 1e-9

    def test_rejects_negative_radius(self, params_n2):
        with pytest.raises(ValueError):
            analytic.u_star(params_n2, -1.0)

    def test_derivative_matches_finite_difference(self, params_n2):
        for r in (0.05, 0.3, 0.55):
            h = 1e-6 * r
            fd = (
                analytic.u_star(params_n2, r + h) - analytic.u_star(params_n2, r - h)
            ) / (2 * h)
            assert analytic.u_star_r(params_n2, r) == pytest.approx(fd, rel=1e-8)


class TestStationaryResidual:
    @pytest.mark.parametrize("n", range(2, 7))
    def test_residual_zero_relative_to_scale(self, n, params_by_n):
        p = params_by_n[n]
        r = np.geomspace(1e-6, 0.99 * p.R, 300)
        res = analytic.residual_stationary(p, r)
        scale = analytic.stationary_residual_scale(p, r)
        assert np.max(np.abs(res) / scale) < 1e-12

    def test_tiny_radius_amplification_is_harmless(self, params_n2):
        r = 1e-6
        res = analytic.residual_stationary(params_n2, r)
        scale = analytic.stationary_residual_scale(params_n2, r)
        assert abs(res) < 1e-12 * scale


class TestMode:
    def test_time_decay_factor(self, params_n2):
        v0 = analytic.v_mode(params_n2, 0.3, 0.0)
        v1 = analytic.v_mode(params_n2, 0.3, 1.0)
        assert v1 == pytest.approx(v0 * np.exp(-params_n2.lam ** 2), rel=1e-12)
        assert analytic.v_mode(params_n2, 0.3, 500.0) == pytest.approx(0.0, abs=1e-300)

    def test_vanishes_at_mode_root(self, params_n2):
        r_root = params_n2.x0 / params_n2.lam
        p_wide = params_n2  # r_root > R here; evaluate psi directly instead
        val = analytic.psi(p_wide, r_root)
        assert abs(val) < 1e-10

    def test_against_independent_series_evaluation(self, params_n2):
        # scipy's jv as the independent evaluator of the Bessel factor
        for r, t in [(0.1, 0.0), (0.35, 0.7), (0.59, 2.0)]:
            ref = (
                params_n2.C
                * np.exp(-params_n2.lam ** 2 * t)
                * r ** (params_n2.n - 1.5)
                * scipy.special.jv(params_n2.nu, params_n2.lam * r)
            )
            assert analytic.v_mode(params_n2, r, t) == pytest.approx(ref, abs=1e-10)

    def test_positive_inside_domain(self, params_n2):
        r = np.linspace(1e-6, params_n2.R * 0.999999, 1500)
        for t in (0.0, 0.5, 3.0):
            assert np.all(analytic.v_mode(params_n2, r, t) > 0.0)

    def test_zero_amplitude_mode_vanishes(self):
        p = make_params(2, R=0.6, C=0.0)
        assert analytic.v_mode(p, 0.3, 1.0) == 0.0

    def test_closed_form_derivatives_vs_central_differences(self, params_n2):
        # halving h must show ~second-order error decay for v_r and v_t
        r, t = 0.31, 0.4
        exact_r = analytic.v_mode_r(params_n2, r, t)
        exact_t = analytic.v_mode_t(params_n2, r, t)
        errs_r, errs_t = [], []
        for h in (1e-3, 5e-4):
            fd_r = (
                analytic.v_mode(params_n2, r + h, t)
                - analytic.v_mode(params_n2, r - h, t)
            ) / (2 * h)
            fd_t = (
                analytic.v_mode(params_n2, r, t + h)
                - analytic.v_mode(params_n2, r, t - h)
            ) / (2 * h)
            errs_r.append(abs(fd_r - exact_r))
            errs_t.append(abs(fd_t - exact_t))
        assert np.log2(errs_r[0] / errs_r[1]) > 1.9
        assert np.log2(errs_t[0] / errs_t[1]) > 1.9


class TestLinearizedResidual:
    @pytest.mark.parametrize("n", range(2, 7))
    def test_residual_on_probe_lattice(self, n, params_by_n):
        p = params_by_n[n]
        r, t = analytic.probe_lattice(p)
        res = analytic.residual_linearized(p, r, t)
        v = analytic.v_mode(p, r, t)
        assert np.max(np.abs(res) / np.maximum(1.0, np.abs(v))) < 1e-8

    def test_spot_configs(self):
        p = make_params(2, lam=1.0, C=1.0, R_fraction=0.9)
        assert abs(analytic.residual_linearized(p, 0.3, 0.1)) < 1e-8
        p = make_params(3, lam=0.5, C=2.0, R_fraction=0.9)
        r_probe = min(1.0, 0.9 * p.R)
        assert abs(analytic.residual_linearized(p, r_probe, 1.0)) < 1e-8

    def test_zero_amplitude_identically_zero(self):
        p = make_params(2, R=0.6, C=0.0)
        assert analytic.residual_linearized(p, 0.2, 0.3) == 0.0


class TestSubsolution:
    @pytest.mark.parametrize("n", range(2, 7))
    def test_defect_nonpositive_on_probe_lattice(self, n, params_by_n):
        p = params_by_n[n]
        r, t = analytic.probe_lattice(p)
        assert np.max(analytic.subsolution_defect(p, r, t)) <= 1e-8

    def test_zero_amplitude_defect_zero(self):
        # with C = 0 the subsolution is the stationary profile; the assembled
        # defect is pure rounding of the r^(-5/3)-amplified cancellation
        p = make_params(2, R=0.6, C=0.0)
        r = np.geomspace(1e-4 * p.R, 0.999 * p.R, 50)
        assert np.max(np.abs(analytic.subsolution_defect(p, r, 0.0))) < 1e-10

    def test_gate_rejects_before_evaluation(self, params_n2):
        bloated = params_n2.replace(R=0.9 * params_n2.x1 / params_n2.lam * 2.0)
        with pytest.raises(AdmissibilityError):
            analytic.subsolution_defect(bloated, 0.1, 0.0)


class TestAdmissibility:
    def test_second_bound_values(self):
        assert analytic.radius_bound(2) == pytest.approx(0.6123724356957945, abs=1e-14)
        assert analytic.radius_bound(3) == pytest.approx(6.363961030678928, abs=1e-13)

    def test_min_of_two_bounds(self):
        # large lam: the x1/lam branch dominates and shrinks like 1/lam
        val = analytic.max_admissible_R(2, 1e4)
        assert val == pytest.approx(1.3099793251198123e-4, rel=1e-8)
        # small lam: the dimension-only branch dominates
        assert analytic.max_admissible_R(2, 1e-3) == pytest.approx(
            analytic.radius_bound(2), abs=1e-14
        )

    def test_make_params_requires_one_of_R_lam(self):
        with pytest.raises(ValueError):
            make_params(2)

    def test_make_params_rejects_inadmissible_pair(self):
        with pytest.raises(AdmissibilityError):
            make_params(2, R=0.62, lam=1e-6)  # R above the n=2 radius bound

    def test_weak_form_flag(self):
        assert not make_params(2, R=0.6).weak_form_ok
        assert make_params(3, R=0.6).weak_form_ok


class TestModeMonotonicity:
    def test_psi_prime_nonnegative_under_gate(self, params_n2):
        r = np.linspace(params_n2.R / 2000.0, params_n2.R, 2000)
        assert np.min(analytic.psi_prime(params_n2, r)) >= 0.0

    def test_mode_lower_bound_positive(self, params_n2):
        c1 = analytic.mode_lower_bound_c1(params_n2)
        assert c1 > 0.0
        # supremum of J_nu(lam r) / r^nu is its r -> 0 limit
        lead = (params_n2.lam / 2.0) ** params_n2.nu / scipy.special.gamma(
            params_n2.nu + 1.0
        )
        assert c1 < lead
