import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core.exceptions import PreconditionError
from src.models.models import Compensator, SeriesKind
from src.services import semistable
from src.services.stp_core import p_max


class TestClosedForms:
    def test_u_gamma_at_one(self):
        assert semistable.u_gamma(1.0) == pytest.approx(-0.5, abs=1e-15)

    def test_u_gamma_rejects_gamma_out_of_range(self):
        with pytest.raises(PreconditionError):
            semistable.u_gamma(0.4)

    @pytest.mark.parametrize("j, gamma, expected", [(0, 1.0, (1.0, 3.0)), (2, 1.0, (6.0, 12.0)), (0, 0.5, (3.0, 6.0))])
    def test_moments(self, j, gamma, expected):
        assert semistable.moments_Wj(j, gamma) == pytest.approx(expected)

    @pytest.mark.parametrize("gamma", [0.5, 0.6, 0.75, 0.9, 1.0])
    def test_tail_functionals(self, gamma):
        assert semistable.semistable_tail_functionals(gamma) == (1.0, 2.0)

    def test_levy_tail_identity_on_first_period(self):
        for x in np.linspace(1.0, 2.0, 9, endpoint=False):
            assert x * semistable.levy_tail_W(1.0, float(x)) == pytest.approx(x)

    def test_levy_tail_rejects_non_positive(self):
        with pytest.raises(PreconditionError):
            semistable.levy_tail_W(1.0, 0.0)

    def test_tail_bound(self):
        assert semistable.tail_bound_W(64.0) == 0.5
        with pytest.raises(PreconditionError):
            semistable.tail_bound_W(3.0)

    def test_density_bound(self):
        assert semistable.density_bound_Wj(0) == pytest.approx(math.sqrt(math.pi) / 4 + 0.5)
        assert semistable.density_bound_Wj(4) < semistable.density_bound_Wj(0)


class TestLevySeries:
    def test_conditional_atoms(self):
        series = semistable.levy_series(SeriesKind.CONDITIONAL, 1.0, j=0)
        assert series.atoms[-1] == (1.0, 2.0)
        assert dict(series.atoms)[0.5] == 2.0
        assert series.compensator is Compensator.FULL
        assert series.drift == pytest.approx(1.0)

    def test_unconditional_atoms(self):
        series = semistable.levy_series(SeriesKind.UNCONDITIONAL, 1.0, k_lo=-3, k_hi=5)
        assert dict(series.atoms)[2.0] == 0.5
        assert series.compensator is Compensator.BOUNDED
        assert np.all(np.diff(series.locations()) > 0)
        assert np.all(series.masses() > 0)

    def test_unconditional_needs_range(self):
        with pytest.raises(PreconditionError):
            semistable.levy_series(SeriesKind.UNCONDITIONAL, 1.0)

    @pytest.mark.parametrize("j", [-3, 0, 4])
    def test_half_gamma_relabels_level(self, j):
        half = semistable.levy_series(SeriesKind.CONDITIONAL, 0.5, j=j)
        whole = semistable.levy_series(SeriesKind.CONDITIONAL, 1.0, j=j + 1)
        assert half.locations() == pytest.approx(whole.locations())
        assert half.masses() == pytest.approx(whole.masses())
        assert half.drift == pytest.approx(whole.drift)


class TestCharacteristicFunctions:
    def test_value_at_zero(self):
        assert semistable.charfn_W(1.0, 0.0, 1e-8) == 1.0
        assert semistable.charfn_Wj(0, 1.0, 0.0, 1e-8) == 1.0

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.5, max_value=1.0), st.floats(min_value=0.01, max_value=50.0))
    def test_hermitian_and_bounded(self, gamma, t):
        tol = 1e-8
        phi = semistable.charfn_W(gamma, t, tol)
        assert abs(phi) <= 1.0 + tol
        assert semistable.charfn_W(gamma, -t, tol) == pytest.approx(phi.conjugate(), abs=1e-12)
        phi_j = semistable.charfn_Wj(1, gamma, t, tol)
        assert abs(phi_j) <= 1.0 + tol
        assert semistable.charfn_Wj(1, gamma, -t, tol) == pytest.approx(phi_j.conjugate(), abs=1e-12)

    def test_real_part_bound_examples(self):
        assert semistable.real_part_bound(0, 1.0, 0.0) == 0.0
        assert semistable.real_part_bound(0, 1.0, math.pi) == pytest.approx(-2.0)
        assert semistable.real_part_bound(0, 1.0, 1.0) == pytest.approx(-12.0 / math.pi ** 2)

    @pytest.mark.parametrize("j, gamma", [(-2, 1.0), (0, 1.0), (0, 0.5), (3, 0.75)])
    def test_real_part_bound_dominates(self, j, gamma):
        tol = 1e-10
        for t in np.logspace(-2, 2, 40):
            phi = semistable.charfn_Wj(j, gamma, float(t), tol)
            assert abs(phi) <= math.exp(semistable.real_part_bound(j, gamma, float(t))) * (1.0 + 1e-9) + tol


class TestInversion:
    def test_far_left_cdf_is_negligible(self):
        tol = 1e-4
        assert semistable.cdf_Wj(0, 1.0, -1e6, tol).value <= tol
        assert semistable.cdf_W_mixture(1.0, -1e6, tol).value <= tol
        assert semistable.cdf_W_direct(1.0, -1e6, tol).value <= tol

    def test_cdf_range_and_right_tail(self):
        grid = semistable.cdf_Wj_grid(0, 1.0, np.linspace(-3.0, 30.0, 12), 1e-4)
        assert grid.quad_err >= 0
        assert np.all(grid.value >= -grid.quad_err)
        assert np.all(grid.value <= 1.0 + grid.quad_err)
        # Cantelli at 29 above the mean
        assert grid.value[-1] >= 1.0 - 3.0 / (3.0 + 29.0 ** 2) - grid.quad_err

    def test_cdf_derivative_matches_density(self):
        tol, h = 1e-6, 1e-3
        xs = np.linspace(-1.0, 8.0, 10)
        upper = semistable.cdf_Wj_grid(0, 1.0, xs + h, tol)
        lower = semistable.cdf_Wj_grid(0, 1.0, xs - h, tol)
        density = semistable.pdf_Wj_grid(0, 1.0, xs, tol)
        slope = (upper.value - lower.value) / (2.0 * h)
        allowance = 10.0 * max(upper.quad_err, density.quad_err)
        assert np.max(np.abs(slope - density.value)) <= allowance

    def test_density_below_bound(self):
        lo, hi = semistable.certified_window(0, 1.0, 4.0)
        density = semistable.pdf_Wj_grid(0, 1.0, np.linspace(lo, hi, 80), 1e-6)
        assert np.max(density.value) <= semistable.density_bound_Wj(0) + density.quad_err

    def test_rejects_tolerance_below_floor(self):
        with pytest.raises(PreconditionError):
            semistable.cdf_Wj(0, 1.0, 0.0, 1e-12)

    @pytest.mark.slow
    def test_moments_by_quadrature(self):
        mass, mean, var = semistable.moments_by_quadrature(0, 1.0)
        assert mass == pytest.approx(1.0, abs=1e-4)
        assert mean == pytest.approx(1.0, rel=1e-3)
        assert var == pytest.approx(3.0, rel=1e-3)

    @pytest.mark.slow
    def test_mixture_climbs_from_zero_to_one(self):
        xs = np.array([-10.0, -2.0, 0.0, 2.0, 8.0, 32.0, 256.0, 1024.0])
        grid = semistable.cdf_W_mixture_grid(1.0, xs, 1e-4)
        assert grid.value[0] <= 1e-3
        assert np.all(np.diff(grid.value) >= -2.0 * grid.quad_err)
        assert grid.value[-1] >= 1.0 - 32.0 / 1024.0 - grid.quad_err

    def test_export_rows(self):
        grid = semistable.cdf_Wj_grid(0, 1.0, np.array([0.0, 1.0]), 1e-4)
        rows = semistable.export_rows(grid)
        assert [r[0] for r in rows] == [0.0, 1.0]
        assert all(r[2] == grid.quad_err for r in rows)


class TestTopLevelMixture:
    def test_weighted_top_level_laws_rebuild_phi(self):
        tol = 1e-10
        mixed = sum(p_max(j, 1.0) * semistable.charfn_Vj(j, 1.0, 1.0, tol) for j in range(-40, 60))
        assert abs(mixed - semistable.charfn_W(1.0, 1.0, tol)) <= 1e-6

    def test_top_level_moments(self):
        q = -math.expm1(-1.0)
        mean, var = semistable.moments_Vj(0, 1.0)
        assert mean == pytest.approx(1.0 / q - 1.0)
        assert var == pytest.approx(1.0 + 2.0 / q - (1.0 / q) ** 2)

    def test_top_level_cdf_tails(self):
        tol = 1e-4
        mean, var = semistable.moments_Vj(1, 1.0)
        assert semistable.cdf_Vj(1, 1.0, -50.0, tol).value <= tol
        far = mean + 20.0 * math.sqrt(var)
        result = semistable.cdf_Vj(1, 1.0, far, tol)
        assert result.value >= 1.0 - 1.0 / 401.0 - result.quad_err

    @pytest.mark.parametrize("j", [-1, 0, 2])
    def test_halving_gamma_shifts_level(self, j):
        xs = np.linspace(-2.0, 12.0, 8)
        half = semistable.cdf_Wj_grid(j, 0.5, xs, 1e-6)
        one = semistable.cdf_Wj_grid(j + 1, 1.0, xs, 1e-6)
        assert np.allclose(half.value, one.value, rtol=0.0, atol=1e-12)
        half_top = semistable.cdf_Vj_grid(j, 0.5, xs, 1e-6)
        one_top = semistable.cdf_Vj_grid(j + 1, 1.0, xs, 1e-6)
        assert np.allclose(half_top.value, one_top.value, rtol=0.0, atol=1e-12)

    def test_mixture_matches_direct_inversion(self):
        tol = 1e-3
        xs = np.array([-1.0, 0.0, 1.0, 2.0, 4.0, 8.0])
        mixture = semistable.cdf_W_mixture_grid(1.0, xs, tol)
        direct = semistable.cdf_W_direct_grid(1.0, xs, tol)
        assert np.max(np.abs(mixture.value - direct.value)) <= 2.0 * tol

    @pytest.mark.slow
    def test_mixture_increments_carry_unit_mass(self):
        xs = np.concatenate((np.linspace(-20.0, 20.0, 21), np.geomspace(25.0, 1e6, 19)))
        grid = semistable.cdf_W_mixture_grid(1.0, xs, 1e-5)
        variation = float(np.sum(np.abs(np.diff(grid.value))))
        assert variation == pytest.approx(1.0, abs=1e-3)
