import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from src.core.exceptions import PreconditionError
from src.models.models import OVERFLOW
from src.services import stp_core


class TestGainLaw:
    @pytest.mark.parametrize("x, expected", [(1.9, 0), (2, Fraction(1, 2)), (5, Fraction(3, 4))])
    def test_stp_cdf_examples(self, x, expected):
        assert stp_core.stp_cdf(x).value == expected

    def test_stp_cdf_rejects_nan(self):
        with pytest.raises(PreconditionError):
            stp_core.stp_cdf(float("nan"))

    @given(st.integers(min_value=1, max_value=60))
    def test_jump_at_each_power_of_two(self, i):
        at = stp_core.stp_cdf(1 << i).value
        below = stp_core.stp_cdf((1 << i) - Fraction(1, 2)).value
        assert at - below == Fraction(1, 1 << i)

    @given(st.integers(min_value=0, max_value=1 << 20), st.integers(min_value=0, max_value=1 << 20))
    def test_stp_cdf_non_decreasing(self, a, b):
        lo, hi = sorted((a, b))
        assert stp_core.stp_cdf(lo).value <= stp_core.stp_cdf(hi).value

    def test_tail_complements_cdf(self):
        for x in (1, 2, 3, 5, 1024, 1025):
            assert stp_core.stp_tail(x).value + stp_core.stp_cdf(x).value == 1

    @pytest.mark.parametrize("n, gamma", [(8, 1.0), (6, 0.75), (5, 0.625), (1, 1.0), (1025, 1025 / 2048)])
    def test_gamma_of(self, n, gamma):
        assert stp_core.gamma_of(n) == gamma

    def test_gamma_of_rejects_zero(self):
        with pytest.raises(PreconditionError):
            stp_core.gamma_of(0)


class TestTruncatedLaw:
    @pytest.mark.parametrize("k, x, expected", [(1, 2, 1), (2, 2, Fraction(2, 3)), (3, 8, 1)])
    def test_truncated_cdf_examples(self, k, x, expected):
        assert stp_core.truncated_cdf(k, x).value == expected

    def test_truncated_cdf_is_rescaled_cdf(self):
        k = 6
        for x in range(2, 1 << k):
            expected = stp_core.stp_cdf(x).value / (1 - Fraction(1, 1 << k))
            assert stp_core.truncated_cdf(k, x).value == expected

    @pytest.mark.parametrize("k, ell, expected", [(2, 1, Fraction(8, 3)), (3, 2, 16), (1, 5, 32)])
    def test_truncated_moment_examples(self, k, ell, expected):
        assert stp_core.truncated_moment(k, ell) == expected

    def test_truncated_moment_overflow_marker(self):
        assert stp_core.truncated_moment(1000, 200) is OVERFLOW

    def test_truncated_moment_rejects_zero_order(self):
        with pytest.raises(PreconditionError):
            stp_core.truncated_moment(3, 0)


class TestMaximum:
    @pytest.mark.parametrize("j, expected", [(0, 0.233), (1, 0.239), (-2, 0.018)])
    def test_p_max_table_values(self, j, expected):
        assert stp_core.p_max(j, 1.0) == pytest.approx(expected, abs=1e-3)

    @pytest.mark.parametrize("j", range(-5, 12))
    def test_half_gamma_shifts_level(self, j):
        assert stp_core.p_max(j, 0.5) == pytest.approx(stp_core.p_max(j + 1, 1.0), rel=1e-14)

    def test_p_max_rejects_gamma_out_of_range(self):
        with pytest.raises(PreconditionError):
            stp_core.p_max(0, 0.3)

    def test_table1_rows_and_sum(self):
        rows, total = stp_core.table1()
        assert [j for j, _ in rows] == list(range(-2, 6))
        assert total == pytest.approx(0.9689, abs=1e-3)

    def test_max_cdf_examples(self):
        assert stp_core.max_cdf_exact(1, 3).value == Fraction(7, 8)
        assert stp_core.max_cdf_exact(2, 1).value == Fraction(1, 4)
        assert float(stp_core.max_cdf_exact(4, 30).value) == pytest.approx(1 - 4 * 2.0 ** -30, abs=1e-15)

    @pytest.mark.parametrize("n, j, expected", [(1, 3, Fraction(1, 8)), (2, 0, Fraction(1, 4)), (2, 1, Fraction(5, 16))])
    def test_q_max_examples(self, n, j, expected):
        assert stp_core.q_max_exact(n, j).value == expected

    def test_q_max_rejects_empty_level(self):
        with pytest.raises(PreconditionError):
            stp_core.q_max_exact(8, -3)

    @pytest.mark.parametrize("n", [1, 3, 8, 100, 1 << 10, 1 << 14])
    def test_q_max_sums_to_one(self, n):
        c = (n - 1).bit_length()
        total = math.fsum(float(stp_core.q_max_exact(n, j).value) for j in range(1 - c, 90))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_q_max_ratio_tends_to_one(self):
        n = 6
        ratios = [float(stp_core.q_max_exact(n, j).value) / (stp_core.gamma_of(n) * 2.0 ** -j) for j in (5, 10, 20)]
        assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
        assert ratios[-1] == pytest.approx(1.0, abs=1e-5)

    def test_max_tail(self):
        assert stp_core.max_tail(1, 5).value == Fraction(1, 4)
        assert stp_core.max_tail(2, 3).value == Fraction(3, 4)

    def test_h_gamma_cdf_examples(self):
        assert stp_core.h_gamma_cdf(1.0, 1) == pytest.approx(math.exp(-1.0))
        assert stp_core.h_gamma_cdf(1.0, math.inf) == 1.0
        assert stp_core.h_gamma_cdf(0.5, 2) == pytest.approx(math.exp(-0.5))
        assert stp_core.h_gamma_cdf(1.0, -1.0) == 0.0


class TestTwoFold:
    @pytest.mark.parametrize("k, ell, expected", [(1, 1, Fraction(3, 4)), (1, 2, Fraction(1, 2)), (2, 3, Fraction(1, 4))])
    def test_examples(self, k, ell, expected):
        assert stp_core.two_fold_tail(k, ell).value == expected

    def test_rejects_unordered_arguments(self):
        with pytest.raises(PreconditionError):
            stp_core.two_fold_tail(3, 2)

    @pytest.mark.parametrize("k, ell", [(1, 3), (2, 2), (2, 5), (4, 4)])
    def test_matches_brute_force(self, k, ell):
        y = (1 << k) + (1 << ell)
        top = ell + 2
        p = {1 << i: Fraction(1, 1 << i) for i in range(1, top + 1)}
        inside = sum(pa * pb for a, pa in p.items() for b, pb in p.items() if a + b > y)
        # pairs with a gain above 2^top always exceed y
        beyond = 1 - (1 - Fraction(1, 1 << top)) ** 2
        assert stp_core.two_fold_tail(k, ell).value == inside + beyond

    def test_subexponential_limits(self):
        ell = 20
        at_power = stp_core.two_fold_tail(ell - 1, ell - 1).value / stp_core.stp_tail(1 << ell).value
        assert float(at_power) == pytest.approx(4.0, abs=1e-5)


class TestConditionalMoments:
    @pytest.mark.parametrize("n, k, expected", [(1, 5, 32), (2, 1, 4), (2, 2, 4 + Fraction(8, 3))])
    def test_cond_sum_mean_examples(self, n, k, expected):
        assert stp_core.cond_sum_mean(n, k) == expected

    def test_cond_sum_variance(self):
        assert stp_core.cond_sum_variance(2, 1) == 0
        assert stp_core.cond_sum_variance(2, 2) == Fraction(8, 9)
        assert stp_core.cond_sum_variance(1, 7) == 0
