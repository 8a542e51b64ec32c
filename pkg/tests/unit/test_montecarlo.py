import math

import numpy as np
import pytest

from src.core.config import get_config
from src.core.exceptions import PreconditionError
from src.models.models import SimConfig
from src.services import exact_engine, montecarlo


@pytest.fixture(scope="module")
def table():
    return montecarlo.simulate(SimConfig(n=16, reps=20_000, seed=7))


class TestSimulate:
    def test_shapes_and_support(self, table):
        assert table.sums.shape == table.maxima.shape == (20_000,)
        assert np.all(table.sums >= 2 * 16)
        assert np.all(table.maxima <= table.sums)
        exponents = np.log2(table.maxima)
        assert np.all(exponents == np.round(exponents))

    def test_same_seed_same_samples(self, table):
        again = montecarlo.simulate(SimConfig(n=16, reps=20_000, seed=7))
        assert np.array_equal(again.sums, table.sums)
        assert np.array_equal(again.maxima, table.maxima)

    def test_thread_count_does_not_change_samples(self, monkeypatch):
        cfg = SimConfig(n=4, reps=25_000, seed=11)
        monkeypatch.setattr(get_config().simulation, "threads", 1)
        single = montecarlo.simulate(cfg)
        monkeypatch.setattr(get_config().simulation, "threads", 4)
        pooled = montecarlo.simulate(cfg)
        assert np.array_equal(single.sums, pooled.sums)

    def test_other_seed_differs(self, table):
        other = montecarlo.simulate(SimConfig(n=16, reps=20_000, seed=8))
        assert not np.array_equal(other.sums, table.sums)

    def test_single_game_law(self):
        single = montecarlo.simulate(SimConfig(n=1, reps=40_000, seed=3))
        assert np.mean(single.sums == 2) == pytest.approx(0.5, abs=0.02)
        assert np.mean(single.sums == 4) == pytest.approx(0.25, abs=0.02)

    def test_sample_game_is_a_payout(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = montecarlo.sample_game(rng)
            assert x >= 2
            assert x & (x - 1) == 0

    @pytest.mark.slow
    def test_sample_game_half_are_two(self):
        rng = np.random.default_rng(2024)
        draws = np.array([montecarlo.sample_game(rng) for _ in range(1_000_000)])
        assert np.mean(draws == 2) == pytest.approx(0.5, abs=2.5e-3)

    def test_sums_are_exact_integers(self, table):
        assert table.sums.dtype == np.uint64
        assert table.maxima.dtype == np.uint64
        rows = table.csv_rows()
        assert all(isinstance(s, int) and isinstance(m, int) for _, s, m in rows[:100])

    def test_sums_above_float_precision_stay_exact(self, monkeypatch):
        exponents = np.array([60, 3, 1, 1], dtype=np.int64)
        monkeypatch.setattr(montecarlo, "_exponents", lambda rng, size: (np.resize(exponents, size), 0))
        table = montecarlo.simulate(SimConfig(n=4, reps=2, seed=1))
        assert table.csv_rows()[0][1] == (1 << 60) + 8 + 2 + 2
        assert table.overflow_count == 0

    def test_wrapped_sums_saturate(self, monkeypatch):
        monkeypatch.setattr(montecarlo, "_exponents",
                            lambda rng, size: (np.full(size, montecarlo.MAX_EXPONENT, dtype=np.int64), 0))
        table = montecarlo.simulate(SimConfig(n=4, reps=3, seed=1))
        assert np.all(table.sums == np.iinfo(np.uint64).max)
        assert table.overflow_count == 3


class TestHistograms:
    def test_histogram_density_has_unit_area(self):
        bins = montecarlo.histogram([1.0, 2.0, 2.5, 3.0, 7.0], 4)
        assert sum(b.count for b in bins) == 5
        area = sum(b.density * (b.bin_right - b.bin_left) for b in bins)
        assert area == pytest.approx(1.0)

    def test_histogram_of_constant_data(self):
        bins = montecarlo.histogram([3.0, 3.0], 2)
        assert sum(b.count for b in bins) == 2

    def test_histogram_rejects_empty_input(self):
        with pytest.raises(PreconditionError):
            montecarlo.histogram([], 10)

    def test_histogram_rejects_zero_bins(self):
        with pytest.raises(PreconditionError):
            montecarlo.histogram([1.0], 0)

    def test_log2_histogram_range(self, table):
        bins = montecarlo.log2_sum_histogram(table, 32)
        assert bins[0].bin_left == pytest.approx(math.log2(float(np.min(table.sums))))

    def test_conditional_partitions(self, table):
        waves = montecarlo.conditional_histograms(table, [5, 6, 40], bins=16)
        assert [w.k for w in waves] == [5, 6, 40]
        assert not waves[0].flagged
        assert waves[0].bins
        assert waves[0].empirical_mean == pytest.approx(waves[0].gaussian_mean, rel=0.05)
        assert waves[2].flagged
        assert waves[2].count == 0
        assert waves[2].bins == []

    def test_conditional_rejects_k_zero(self, table):
        with pytest.raises(PreconditionError):
            montecarlo.conditional_histograms(table, [0])


class TestSummaries:
    def test_offset_frequencies_sum_to_one(self, table):
        freqs = montecarlo.max_offset_frequencies(table)
        assert sum(freqs.values()) == pytest.approx(1.0)
        assert min(freqs) >= 1 - 4

    def test_offset_report_within_band(self, table):
        rows = montecarlo.max_offset_report(table)
        assert all(r["within"] for r in rows)
        assert all(r["band"] > 0 for r in rows)

    def test_empirical_ks_against_exact_law(self):
        single = montecarlo.simulate(SimConfig(n=1, reps=20_000, seed=13))
        law = exact_engine.sum_law(1, 1 << 20)
        report = montecarlo.empirical_ks(single, law)
        assert report.distance <= 0.02
        assert report.overflow == pytest.approx(2.0 ** -20)

    def test_summarize(self, table):
        summary = montecarlo.summarize(table)
        assert summary.n == 16
        assert summary.reps == 20_000
        assert summary.seed == 7
        assert summary.mean_log2_sum > math.log2(32)
        assert summary.overflow_count == 0
