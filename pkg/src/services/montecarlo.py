"""Seeded Monte Carlo of St. Petersburg games.

Each game draws one uniform 64-bit word; the payout exponent is one plus its
number of trailing zero bits. Sums and maxima are exact uint64 values.
Replications are cut into fixed chunks, each with its own child stream of the
run seed, so results do not depend on the number of worker threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import skew

from src.core.config import get_config
from src.core.exceptions import FeasibilityError, PreconditionError
from src.models.models import (
    ConditionalWave, HistogramBin, KsReport, LatticeLaw, SampleTable, SimConfig, SimulateSummary,
)
from src.services.stp_core import cond_sum_mean, cond_sum_variance, gamma_of, p_max, q_max_exact
from src.utils.numerics import ceil_log2

logger = logging.getLogger(__name__)

MAX_EXPONENT = 63
# games generated per block inside one chunk
BLOCK_GAMES = 1 << 21

_ONE = np.uint64(1)
_SUM_MAX = np.iinfo(np.uint64).max
# float row sums at or above this may have wrapped in uint64
SUM_SATURATION = math.ldexp(1.0, 64) * (1.0 - 1e-9)


def _generator(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_seq))


def _exponents(rng: np.random.Generator, size: int) -> Tuple[np.ndarray, int]:
    """Geometric(1/2) exponents from trailing zeros of uniform words, capped at 63."""
    words = rng.bit_generator.random_raw(size)
    zero = words == 0
    while np.any(zero):
        words[zero] = rng.bit_generator.random_raw(int(np.count_nonzero(zero)))
        zero = words == 0
    lowbit = words & (~words + _ONE)
    exponents = np.log2(lowbit.astype(np.float64)).astype(np.int64) + 1
    over = exponents > MAX_EXPONENT
    overflow = int(np.count_nonzero(over))
    exponents[over] = MAX_EXPONENT
    return exponents, overflow


def sample_game(rng: np.random.Generator) -> int:
    """One payout 2^K with P{K = k} = 2^-k."""
    exponents, _ = _exponents(rng, 1)
    return 1 << int(exponents[0])


def _simulate_chunk(n: int, reps: int, seed_seq: np.random.SeedSequence) -> Tuple[np.ndarray, np.ndarray, int]:
    rng = _generator(seed_seq)
    rows = max(1, BLOCK_GAMES // n)
    sums = np.empty(reps, dtype=np.uint64)
    maxima = np.empty(reps, dtype=np.uint64)
    overflow = 0
    for start in range(0, reps, rows):
        count = min(rows, reps - start)
        exponents, over = _exponents(rng, count * n)
        overflow += over
        payouts = np.left_shift(_ONE, exponents.reshape(count, n).astype(np.uint64))
        block = payouts.sum(axis=1, dtype=np.uint64)
        # uint64 sums wrap past 2^64; such rows saturate and count as overflow
        wrapped = payouts.sum(axis=1, dtype=np.float64) >= SUM_SATURATION
        if np.any(wrapped):
            block[wrapped] = _SUM_MAX
            overflow += int(np.count_nonzero(wrapped))
        sums[start: start + count] = block
        maxima[start: start + count] = payouts.max(axis=1)
    return sums, maxima, overflow


def simulate(cfg: SimConfig) -> SampleTable:
    """reps replications of (S_n, X_n*), deterministic in cfg.seed."""
    settings = get_config().simulation
    chunk = settings.chunk_size
    sizes = [min(chunk, cfg.reps - start) for start in range(0, cfg.reps, chunk)]
    children = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    workers = max(1, min(settings.threads, len(sizes)))
    logger.info(f"Simulating n={cfg.n}, reps={cfg.reps}, seed={cfg.seed} on {workers} worker(s)")

    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda args: _simulate_chunk(cfg.n, *args), zip(sizes, children)))
    except MemoryError as e:
        raise FeasibilityError(f"simulation n={cfg.n}, reps={cfg.reps} ran out of memory") from e

    sums = np.concatenate([p[0] for p in parts])
    maxima = np.concatenate([p[1] for p in parts])
    overflow = sum(p[2] for p in parts)
    if overflow:
        logger.warning(f"{overflow} game(s) or row sum(s) hit the 64-bit cap")
    return SampleTable(n=cfg.n, seed=cfg.seed, sums=sums, maxima=maxima, overflow_count=overflow)


def histogram(values: Sequence[float], bins: int, value_range: Optional[Tuple[float, float]] = None) -> List[HistogramBin]:
    """Equal-width bins with counts and densities normalised to unit area."""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise PreconditionError("histogram", "non-empty input")
    if bins < 1:
        raise PreconditionError("histogram", "bins >= 1", f"bins={bins}")
    if value_range is None:
        lo, hi = float(np.min(data)), float(np.max(data))
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        value_range = (lo, hi)
    if not all(math.isfinite(v) for v in value_range) or value_range[0] >= value_range[1]:
        raise PreconditionError("histogram", "finite increasing range", f"range={value_range}")
    counts, edges = np.histogram(data, bins=bins, range=value_range)
    total = int(counts.sum())
    width = edges[1] - edges[0]
    return [
        HistogramBin(bin_left=float(edges[i]), bin_right=float(edges[i + 1]), count=int(c),
                     density=float(c) / (total * width) if total else 0.0)
        for i, c in enumerate(counts)
    ]


def log2_sum_histogram(table: SampleTable, bins: int, value_range: Optional[Tuple[float, float]] = None) -> List[HistogramBin]:
    return histogram(np.log2(table.sums), bins, value_range)


def conditional_histograms(table: SampleTable, k_list: Sequence[int], bins: int = 64) -> List[ConditionalWave]:
    """Replications split by X_n* = 2^k: log2 S_n histograms with matched Gaussian parameters."""
    min_partition = get_config().simulation.min_partition
    n = table.n
    reps = table.sums.size
    log_max = np.log2(table.maxima).astype(np.int64)
    waves = []
    for k in k_list:
        if k < 1:
            raise PreconditionError("conditional_histograms", "k >= 1", f"k={k}")
        part = table.sums[log_max == k]
        count = int(part.size)
        wave = dict(
            k=k, count=count, frequency=count / reps, flagged=count < min_partition,
            gaussian_mean=float(cond_sum_mean(n, k)), gaussian_var=float(cond_sum_variance(n, k)),
        )
        if count < min_partition:
            logger.warning(f"Partition k={k} has {count} samples (< {min_partition}); not emitted")
            waves.append(ConditionalWave(**wave))
            continue
        wave.update(
            bins=histogram(np.log2(part), bins),
            empirical_mean=float(np.mean(part)),
            empirical_var=float(np.var(part)),
            skewness=float(skew(part)) if count > 2 else None,
            support_frequency=float(np.mean(part < math.ldexp(1.0, k + 1))),
        )
        waves.append(ConditionalWave(**wave))
    return waves


def max_offset_frequencies(table: SampleTable) -> Dict[int, float]:
    """Empirical law of log2 X_n* - ceil(log2 n)."""
    offsets = np.log2(table.maxima).astype(np.int64) - ceil_log2(table.n)
    values, counts = np.unique(offsets, return_counts=True)
    return {int(j): float(c) / offsets.size for j, c in zip(values, counts)}


def max_offset_report(table: SampleTable) -> List[Dict[str, float]]:
    """Frequencies per offset j against the exact and limit weights with a 4 sigma band."""
    reps = table.sums.size
    gamma = gamma_of(table.n)
    c = ceil_log2(table.n)
    rows = []
    for j, freq in sorted(max_offset_frequencies(table).items()):
        q = float(q_max_exact(table.n, j).value) if c + j >= 1 else 0.0
        band = 4.0 * math.sqrt(max(q * (1.0 - q), 1.0 / reps) / reps)
        rows.append(dict(j=j, frequency=freq, q_exact=q, p_limit=p_max(j, gamma),
                         band=band, within=abs(freq - q) <= band))
    return rows


def empirical_ks(table: SampleTable, law: LatticeLaw) -> KsReport:
    """KS distance between the empirical law of S_n/n - log2 n and an exact lattice law."""
    if table.sums.size == 0:
        raise PreconditionError("empirical_ks", "non-empty sample")
    n = table.n
    values, probs = law.arrays()
    exact_right = np.cumsum(probs)
    ordered = np.sort(table.sums)
    emp_right = np.searchsorted(ordered, values.astype(float), side="right") / ordered.size
    gaps = np.abs(emp_right - exact_right)
    i = int(np.argmax(gaps))
    at = float(values[i]) / n - math.log2(n)
    return KsReport(distance=float(gaps[i]), at=at, allowance=float(law.overflow), overflow=float(law.overflow))


def summarize(table: SampleTable) -> SimulateSummary:
    n = table.n
    normed = table.sums / n - math.log2(n)
    return SimulateSummary(
        n=n, reps=int(table.sums.size), seed=table.seed,
        mean_log2_sum=float(np.mean(np.log2(table.sums))),
        median_normed_sum=float(np.median(normed)),
        max_offset_frequencies=max_offset_frequencies(table),
        overflow_count=table.overflow_count,
    )
