import logging
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ndtr

from src.core.config import get_config
from src.core.exceptions import FeasibilityError, PreconditionError
from src.models.models import InversionGrid, LatticeLaw
from src.services import asymptotics


class TestRatesAndBounds:
    def test_h_fn_at_four(self):
        assert asymptotics.h_fn(4.0) == pytest.approx(8 * math.log(2) - 4)
        assert asymptotics.h_fn(0.0) == 0.0

    def test_h_fn_rejects_negative(self):
        with pytest.raises(PreconditionError):
            asymptotics.h_fn(-1.0)

    @given(st.floats(min_value=0.0, max_value=1e3))
    def test_h_fn_sandwich(self, x):
        h = asymptotics.h_fn(x)
        slack = 1e-12 * (1.0 + x * x)
        assert 3 * x * x / (24 + 2 * x) - slack <= h <= x * x / 8 + slack

    def test_eta(self):
        assert asymptotics.eta(2, 0.5) == 8.0
        with pytest.raises(PreconditionError):
            asymptotics.eta(0, 0.0)

    def test_chernoff_bound(self):
        assert asymptotics.chernoff_bound(8, 0, 0.0) == 1.0
        assert asymptotics.chernoff_bound(8, 0, -3.0) == 1.0
        assert asymptotics.chernoff_bound(8, 0, 4.0) == pytest.approx(math.exp(4) / 256)

    def test_chernoff_rejects_empty_level(self):
        with pytest.raises(PreconditionError):
            asymptotics.chernoff_bound(8, -3, 1.0)

    def test_cantelli_bound(self):
        assert asymptotics.cantelli_bound(8, 0, 2.0) == pytest.approx(1 / 3)
        with pytest.raises(PreconditionError):
            asymptotics.cantelli_bound(8, 0, 0.0)

    def test_a_nj(self):
        assert asymptotics.a_nj(2, 0) == pytest.approx(2.0)
        assert asymptotics.a_nj(1, 3) == pytest.approx(8.0)

    @pytest.mark.parametrize("n", [8, 100, 1 << 10, 5000])
    def test_a_nj_gap_within_bound(self, n):
        gap, bound = asymptotics.a_nj_gap(n)
        assert gap <= bound


class TestConditionalRegimes:
    def test_cond_tail_point_mass(self):
        pair = asymptotics.cond_tail_exact(2, 0, 0.0)
        assert pair.upper == 1.0
        assert pair.lower == 1.0

    def test_cond_tail_rejects_negative_x(self):
        with pytest.raises(PreconditionError):
            asymptotics.cond_tail_exact(4, 0, -0.5)

    def test_bounds_dominate_exact_tails(self):
        report = asymptotics.bound_domination_scan(8, 0, points=20)
        assert report.meta["violations"] == 0
        assert len(report.points) == 20

    def test_clt_distance_is_a_probability_gap(self):
        d = asymptotics.clt_distance(16, 6)
        assert 0.0 <= d <= 1.0

    def test_clt_distance_preconditions(self):
        with pytest.raises(PreconditionError):
            asymptotics.clt_distance(1, 4)
        with pytest.raises(FeasibilityError):
            asymptotics.clt_distance(1 << 12, 12)

    def test_largemax_single_game(self):
        report = asymptotics.largemax_check(1, 3, 0.5)
        assert report.exact == 0.0
        assert report.bound == pytest.approx(8 / (0.25 * 8))

    def test_largemax_below_bound(self):
        report = asymptotics.largemax_check(128, 20, 0.5)
        assert report.bound == pytest.approx(3.906e-3, abs=1e-6)
        assert report.exact <= report.bound
        assert report.one_sided <= report.bound

    def test_largemax_needs_large_maximum(self):
        with pytest.raises(PreconditionError):
            asymptotics.largemax_check(128, 8, 0.5)

    def test_largemax_center(self):
        assert asymptotics.largemax_center(4, 0) == pytest.approx(1.0)
        assert asymptotics.largemax_center(4, 1) == pytest.approx(0.5)


class TestTailRatios:
    def test_single_game_ratio_is_flat(self):
        report = asymptotics.tail_ratio_scan(1, 5, 0.1)
        assert report.meta["max_abs_dev"] == 0.0
        assert report.sup_val == report.inf_val == 1.0

    def test_full_period_single_game(self):
        report = asymptotics.full_period_scan(1, 5)
        assert report.inf_val == pytest.approx(1.0)
        assert report.sup_val == pytest.approx(1.0)

    def test_tail_ratio_preconditions(self):
        with pytest.raises(PreconditionError):
            asymptotics.tail_ratio_scan(4, 5, 0.0)
        with pytest.raises(PreconditionError):
            asymptotics.tail_ratio_scan(4, 0, 0.1)

    def test_finer_limit(self):
        assert asymptotics.finer_limit(2, 2.0) == 1.25
        assert asymptotics.finer_limit(2, 3.0) == 1.25
        assert asymptotics.finer_limit(1, 5.0) == 1.0

    def test_finer_sup_near_limit(self):
        sup_val, limit = asymptotics.finer_sup(2, 10, 2.0)
        assert limit == 1.25
        assert sup_val == pytest.approx(limit, abs=1e-2)

    def test_max_ratio_sup_near_limit(self):
        sup_val, limit = asymptotics.max_ratio_sup(2, 10, 2.0)
        assert sup_val == pytest.approx(limit, abs=1e-2)

    def test_finer_sup_preconditions(self):
        with pytest.raises(PreconditionError):
            asymptotics.finer_sup(2, 10, 1.0)
        with pytest.raises(PreconditionError):
            asymptotics.finer_sup(2, 1, 3.0)

    def test_subexp_ratio_single_game(self):
        for x in (2, 3, 100, 1 << 20):
            assert asymptotics.subexp_ratio(1, x) == 1.0

    def test_subexp_ratio_limits_for_two_games(self):
        assert asymptotics.subexp_ratio(2, 1 << 16) == pytest.approx(4.0, abs=1e-3)
        assert asymptotics.subexp_ratio(2, 3 << 15) == pytest.approx(2.0, abs=1e-3)

    def test_subexp_ratio_rejects_small_x(self):
        with pytest.raises(PreconditionError):
            asymptotics.subexp_ratio(2, 1.5)

    def test_subexp_scan_stays_between_limits(self):
        report = asymptotics.subexp_scan(2, 14)
        assert report.inf_val >= 1.0
        assert report.sup_val <= 4.0

    def test_oscillation_single_game(self):
        report = asymptotics.oscillation_scan(1, 4)
        assert report.inf_val == pytest.approx(1.0)
        assert report.sup_val < 2.0
        assert report.meta["limsup"] == 2


class TestMerging:
    def test_max_merge_distance_range(self):
        assert 0.0 <= asymptotics.merge_distance_max(1) <= 1.0

    def test_max_merge_distance_small_for_large_n(self):
        assert asymptotics.merge_distance_max(1 << 10) < 1e-2

    def test_truncated_weight(self):
        assert 0.0 <= asymptotics.truncated_weight(128, -2, 11) < 1e-2
        assert asymptotics.truncated_weight(128, 0, 0) > 0.5

    def test_bound_curve_decays(self):
        near = asymptotics.fig8_bound_curve(128, 0.0, -2, 11)
        far = asymptotics.fig8_bound_curve(128, 40.0, -2, 11)
        assert far < near <= 1.0

    def test_bound_curve_rejects_empty_range(self):
        with pytest.raises(PreconditionError):
            asymptotics.fig8_bound_curve(128, 0.0, 3, 2)

    def test_bound_curve_dominates_exact_tail(self):
        report = asymptotics.fig8_domination(128, -2, 11, np.linspace(-1, 15, 9))
        assert report.meta["violations"] == 0

    @pytest.mark.slow
    def test_conditional_merge_allowance(self):
        report = asymptotics.merge_distance_cond(256, 0)
        assert 0.0 <= report.distance <= 1.0
        assert report.allowance > 0.0


class TestLimitOnWindow:
    @pytest.fixture
    def law(self):
        atoms = {v: 1.0 / 64 for v in range(2, 66)}
        return LatticeLaw(atoms=atoms, cap=80)

    @staticmethod
    def evaluate(xs):
        xs = np.asarray(xs, dtype=float)
        return InversionGrid(x=xs, value=ndtr(xs - 1.0), quad_err=1e-6)

    def test_atoms_are_exact_nodes(self, law):
        G, interp_err, quad_err = asymptotics._limit_on_window(
            law, 16.0, 32.0, -1.5, 1.5, self.evaluate, lambda: pytest.fail("grid path taken"))
        assert interp_err == 0.0
        assert quad_err == 1e-6
        atoms = (np.arange(2, 66) - 32.0) / 16.0
        inside = atoms[(atoms >= -1.5) & (atoms <= 1.5)]
        assert np.array_equal(G(inside), ndtr(inside - 1.0))
        assert G(np.array([-1.5, 1.5])) == pytest.approx(ndtr(np.array([-2.5, 0.5])), abs=0.0)

    def test_interpolation_error_joins_the_allowance(self, law, monkeypatch):
        monkeypatch.setattr(get_config().merge, "max_direct_points", 1)
        xs = np.linspace(-1.5, 1.5, 7)
        G, interp_err, quad_err = asymptotics._limit_on_window(
            law, 16.0, 32.0, -1.5, 1.5, lambda _: pytest.fail("atom path taken"), lambda: self.evaluate(xs))
        assert interp_err == pytest.approx(float(np.max(np.diff(ndtr(xs - 1.0)))) + 2e-6)
        atoms = np.linspace(-1.5, 1.5, 49)
        assert np.max(np.abs(G(atoms) - ndtr(atoms - 1.0))) <= interp_err

    def test_merge_sum_logs_distance_as_a_measurement(self, monkeypatch, caplog):
        monkeypatch.setattr(asymptotics.semistable, "cdf_W_mixture_grid", lambda gamma, xs, tol: self.evaluate(xs))
        with caplog.at_level(logging.INFO, logger="src.services.asymptotics"):
            report = asymptotics.merge_distance_sum(1)
        assert "📊 Merging n=1" in caplog.text
        assert "✅" not in caplog.text
        assert report.allowance >= 1e-6
