"""Limit theorems and bounds of St. Petersburg sums as finite computations.

Every statement is checked against the exact lattice laws of exact_engine:
merging distances to the semistable families, the conditional Gaussian and
large-maximum regimes, Chernoff/Cantelli domination, and the tail-ratio scans
over one dyadic period.
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import ndtr

from src.core.config import get_config
from src.core.exceptions import FeasibilityError, PreconditionError
from src.models.models import InversionGrid, KsReport, LargeMaxReport, LatticeLaw, ScanReport, TailPair
from src.services import exact_engine, semistable
from src.services.stp_core import (
    cond_sum_variance, gamma_of, max_tail, p_max, q_max_exact, stp_tail,
)
from src.utils.numerics import ceil_log2

logger = logging.getLogger(__name__)

# Chernoff exponent whose bound exp(-23) sits below 1e-10
DOMINATION_EXPONENT = 23.0
CLT_SUPPORT_LIMIT = 1 << 22
NEGLIGIBLE = 1e-15


def _dyadic_level(operation: str, n: int, j: int) -> int:
    if n < 1:
        raise PreconditionError(operation, "n >= 1", f"n={n}")
    K = ceil_log2(n) + j
    if K < 1:
        raise PreconditionError(operation, "ceil(log2 n) + j >= 1", f"n={n}, j={j}")
    return K


def h_fn(x: float) -> float:
    """Chernoff rate (4 + x) ln(1 + x/4) - x."""
    if x < 0:
        raise PreconditionError("h_fn", "x >= 0", f"x={x}")
    return (4.0 + x) * math.log1p(x / 4.0) - x


def eta(j: int, gamma: float) -> float:
    if not 0.0 < gamma <= 1.0:
        raise PreconditionError("eta", "gamma in (0, 1]", f"gamma={gamma}")
    return math.ldexp(1.0, j) / gamma


def chernoff_bound(n: int, j: int, x: float) -> float:
    """exp(-h(x+)/eta_{j,gamma_n}), both tails of the centred conditional sum over n."""
    _dyadic_level("chernoff_bound", n, j)
    return math.exp(-h_fn(max(x, 0.0)) / eta(j, gamma_of(n)))


def cantelli_bound(n: int, j: int, x: float) -> float:
    if x <= 0:
        raise PreconditionError("cantelli_bound", "x > 0", f"x={x}")
    e = eta(j, gamma_of(n))
    return 2.0 * e / (2.0 * e + x * x)


def a_nj(n: int, j: int) -> float:
    """E[S_n | X_n* = 2^K]/n with K = ceil(log2 n) + j."""
    K = _dyadic_level("a_nj", n, j)
    return eta(j, gamma_of(n)) + (n - 1) / n * K / -math.expm1(-K * math.log(2.0))


def a_nj_gap(n: int) -> Tuple[float, float]:
    """max |a_nj - log2 n - mu_1(j, gamma_n)| over -log2 log2 n < j < log2 n, and 2 (log2 n)^2/n."""
    if n < 3:
        raise PreconditionError("a_nj_gap", "n >= 3", f"n={n}")
    L = math.log2(n)
    LL = math.log2(L)
    gamma = gamma_of(n)
    js = [j for j in range(math.floor(-LL), math.ceil(L) + 1) if -LL < j < L]
    gap = max(abs(a_nj(n, j) - L - semistable.mu1(j, gamma)) for j in js)
    return gap, 2.0 * L * L / n


def _rest_centre(n: int, K: int) -> Fraction:
    return (n - 1) * Fraction(K) / (1 - Fraction(1, 1 << K))


def _two_sided(law: LatticeLaw, centre: Fraction, dev: Fraction) -> Tuple[float, float]:
    """P{S >= centre + dev} (overflow included) and P{S <= centre - dev}."""
    hi = math.ceil(centre + dev)
    lo = math.floor(centre - dev)
    if law.exact:
        upper = sum((p for v, p in law.atoms.items() if v >= hi), Fraction(0)) + law.overflow
        lower = sum((p for v, p in law.atoms.items() if v <= lo), Fraction(0))
        return float(upper), float(lower)
    values, probs = law.arrays()
    upper = float(law.overflow) + float(np.sum(probs[values >= hi]))
    lower = float(np.sum(probs[values <= lo]))
    return min(upper, 1.0), min(lower, 1.0)


def cond_tail_exact(n: int, j: int, x: float, law: Optional[LatticeLaw] = None) -> TailPair:
    """Exact tails of (S_{n-1}^{(K)} - E S_{n-1}^{(K)})/n at x >= 0 on both sides."""
    K = _dyadic_level("cond_tail_exact", n, j)
    if x < 0:
        raise PreconditionError("cond_tail_exact", "x >= 0", f"x={x}")
    centre = _rest_centre(n, K)
    dev = n * Fraction(x)
    if law is None:
        law = exact_engine.cond_rest_law(n, K, cap=max(math.ceil(centre + dev), 2 * (n - 1)))
    upper, lower = _two_sided(law, centre, dev)
    return TailPair(upper=upper, lower=lower, err=law.err)


def _domination_end(e: float) -> float:
    target = DOMINATION_EXPONENT * e
    hi = 1.0
    while h_fn(hi) < target:
        hi *= 2.0
    return brentq(lambda x: h_fn(x) - target, 0.0, hi)


def bound_domination_scan(n: int, j: int, points: int = 50) -> ScanReport:
    """max(upper, lower) exact tail minus min(Chernoff, Cantelli) on a grid of x > 0."""
    K = _dyadic_level("bound_domination_scan", n, j)
    if points < 1:
        raise PreconditionError("bound_domination_scan", "points >= 1", f"points={points}")
    x_end = _domination_end(eta(j, gamma_of(n)))
    centre = _rest_centre(n, K)
    cap = max(math.ceil(centre + n * Fraction(x_end)), 2 * (n - 1))
    law = exact_engine.cond_rest_law(n, K, cap=cap)
    scan: List[Tuple[float, float]] = []
    violations = 0
    for x in np.linspace(x_end / points, x_end, points):
        x = float(x)
        pair = cond_tail_exact(n, j, x, law=law)
        bound = min(chernoff_bound(n, j, x), cantelli_bound(n, j, x))
        statistic = max(pair.upper, pair.lower) - bound
        if statistic > law.err:
            violations += 1
            logger.warning(f"Bound violated at n={n}, j={j}, x={x:.6g}: excess {statistic:.3g}")
        scan.append((x, statistic))
    return ScanReport.from_points(scan, n=n, j=j, gamma=gamma_of(n), exact=law.exact,
                                  violations=violations, slack=law.err)


def clt_distance(n: int, k: int) -> float:
    """KS distance of the standardised conditional sum given X_n* = 2^k from N(0, 1)."""
    if n < 2 or k < 1:
        raise PreconditionError("clt_distance", "n >= 2 and k >= 1", f"n={n}, k={k}")
    support = (n - 1) << k
    if support > CLT_SUPPORT_LIMIT:
        raise FeasibilityError(f"clt_distance: conditional support {support} exceeds {CLT_SUPPORT_LIMIT}")
    law = exact_engine.cond_rest_law(n, k, cap=support)
    mean = float(_rest_centre(n, k))
    sd = math.sqrt(float(cond_sum_variance(n, k)))
    report = exact_engine.ks_distance(law, sd, mean, ndtr, tol=1e-12)
    logger.debug(f"clt_distance n={n}, k={k}: {report.distance:.5f} at {report.at:.3f}")
    return report.distance


def largemax_check(n: int, k: int, eps: float) -> LargeMaxReport:
    """P{|S_n/2^k - 1 - c/2^k| > eps | X_n* = 2^k} against 8n/(eps^2 2^k)."""
    if n < 1 or k < 1 or eps <= 0:
        raise PreconditionError("largemax_check", "n >= 1, k >= 1 and eps > 0", f"n={n}, k={k}, eps={eps}")
    if (1 << k) < 4 * n:
        raise PreconditionError("largemax_check", "2^k >= 4n", f"n={n}, k={k}")
    top = 1 << k
    threshold = Fraction(eps) * top
    centre = _rest_centre(n, k)
    bound = 8.0 * n / (eps * eps * top)
    report = dict(n=n, k=k, eps=eps, bound=bound, centre=float(centre), asymptotic_centre=n * k / top)
    if n == 1:
        return LargeMaxReport(exact=0.0, one_sided=0.0, **report)
    cap = max(math.ceil(centre + threshold), 2 * (n - 1))
    law = exact_engine.cond_rest_law(n, k, cap=cap)
    values, probs = law.arrays()
    hi = math.floor(centre + threshold)
    lo = math.ceil(centre - threshold)
    exact = float(law.overflow) + float(np.sum(probs[values > hi])) + float(np.sum(probs[values < lo]))
    one_sided = float(law.overflow) + float(np.sum(probs[values > math.floor(threshold)]))
    logger.info(f"Large-maximum check n={n}, k={k}, eps={eps}: exact {exact:.4g}, bound {bound:.4g}")
    return LargeMaxReport(exact=exact, one_sided=one_sided, **report)


def largemax_center(n: int, j: int, a: float = 1.0) -> float:
    """(log2 n)^{1-a} 2^{-j} 2^{{log2 n + a log2 log2 n}}."""
    if n < 2:
        raise PreconditionError("largemax_center", "n >= 2", f"n={n}")
    L = math.log2(n)
    shift = L + a * math.log2(L) if L > 1 else L
    frac = shift - math.floor(shift)
    return L ** (1.0 - a) * math.ldexp(1.0, -j) * 2.0 ** frac


def _check_small_n(operation: str, n: int) -> None:
    if not 1 <= n <= get_config().numerics.sparse_max_n:
        raise PreconditionError(operation, f"1 <= n <= {get_config().numerics.sparse_max_n}", f"n={n}")


def _sum_tail(n: int, y: int) -> float:
    return float(exact_engine.sum_tail_exact(n, y).value)


def _period_atoms(n: int, lo: float, hi: float) -> List[int]:
    """Lattice points v of S_n with the two largest gains dominant and v/n in [lo, hi)."""
    atoms = set()
    top = max(2, math.floor(math.log2(max(n * hi, 2.0))) + 1)
    for a in range(1, top + 1):
        atoms.add((1 << a) + 2 * (n - 1))
        if n >= 2:
            for b in range(1, a + 1):
                atoms.add((1 << a) + (1 << b) + 2 * (n - 2))
    return sorted(v for v in atoms if lo * n <= v < hi * n)


def _ratio_scan(n: int, m: int, lo_frac: float, points: int,
                statistic: Callable[[int], float]) -> List[Tuple[float, float]]:
    """statistic(y) with y = floor(n x), over x = 2^{m+f}/gamma_n for f in [lo_frac, 1).

    Atoms of S_n in the window are scanned at x = v/n and just left of it.
    """
    gamma = gamma_of(n)
    left = math.ldexp(1.0, m) / gamma
    scan: List[Tuple[float, float]] = []
    for i in range(points):
        f = lo_frac + (1.0 - lo_frac) * i / points
        x = left * 2.0 ** f
        scan.append((x, statistic(math.floor(n * x))))
    for v in _period_atoms(n, left, 2.0 * left):
        for x, y in ((v / n, v), (math.nextafter(v / n, 0.0), v - 1)):
            if math.log2(gamma * x) - m >= lo_frac:
                scan.append((x, statistic(y)))
    scan.sort()
    return scan


def tail_ratio_scan(n: int, m: int, delta: float, points: int = 64) -> ScanReport:
    """r(x) = P{S_n/n > x} x 2^{-{log2(gamma_n x)}} over one period with {log2(gamma_n x)} >= delta."""
    _check_small_n("tail_ratio_scan", n)
    if not 0.0 < delta < 1.0:
        raise PreconditionError("tail_ratio_scan", "delta in (0, 1)", f"delta={delta}")
    if not 1 <= m <= 24:
        raise PreconditionError("tail_ratio_scan", "1 <= m <= 24", f"m={m}")
    scale = math.ldexp(1.0, m) / gamma_of(n)
    scan = _ratio_scan(n, m, delta, points, lambda y: _sum_tail(n, y) * scale)
    deviation = max(abs(r - 1.0) for _, r in scan)
    return ScanReport.from_points(scan, n=n, m=m, delta=delta, gamma=gamma_of(n), max_abs_dev=deviation)


def full_period_scan(n: int, m: int, points: int = 64) -> ScanReport:
    """The r(x) statistic over the whole period, fractional part 0 included."""
    _check_small_n("full_period_scan", n)
    if not 1 <= m <= 24:
        raise PreconditionError("full_period_scan", "1 <= m <= 24", f"m={m}")
    scale = math.ldexp(1.0, m) / gamma_of(n)
    scan = _ratio_scan(n, m, 0.0, points, lambda y: _sum_tail(n, y) * scale)
    return ScanReport.from_points(scan, n=n, m=m, delta=0.0, gamma=gamma_of(n))


def _left_scan(left: float, c: float, points: int) -> Iterable[float]:
    span = left - c
    for i in range(points):
        yield left + c + span * (i / points) ** 2


def finer_limit(n: int, c: float) -> float:
    """1 + P{S_{n-1} > n c}."""
    if n == 1:
        return 1.0
    return 1.0 + float(exact_engine.sum_tail_exact(n - 1, n * c).value)


def finer_sup(n: int, m: int, c: float, points: int = 64) -> Tuple[float, float]:
    """sup of r(x) over [2^m/gamma_n + c, 2^{m+1}/gamma_n) and its limit in m."""
    _check_small_n("finer_sup", n)
    if c <= 1:
        raise PreconditionError("finer_sup", "c > 1", f"c={c}")
    left = math.ldexp(1.0, m) / gamma_of(n)
    if c >= left:
        raise PreconditionError("finer_sup", "c < 2^m/gamma_n", f"c={c}, m={m}")
    # r is non-increasing inside a period; the left end carries the sup
    sup_val = max(_sum_tail(n, math.floor(n * x)) * left for x in _left_scan(left, c, points))
    limit = finer_limit(n, c)
    logger.info(f"finer_sup n={n}, m={m}, c={c}: sup {sup_val:.5f}, limit {limit:.5f}")
    return sup_val, limit


def max_ratio_sup(n: int, m: int, c: float, points: int = 64) -> Tuple[float, float]:
    """sup of P{S_n > nx}/P{X_n* > nx} over [2^m/gamma_n + c, 2^{m+1}/gamma_n) and its limit."""
    _check_small_n("max_ratio_sup", n)
    if c <= 1:
        raise PreconditionError("max_ratio_sup", "c > 1", f"c={c}")
    left = math.ldexp(1.0, m) / gamma_of(n)
    if c >= left:
        raise PreconditionError("max_ratio_sup", "c < 2^m/gamma_n", f"c={c}, m={m}")
    xs = list(_left_scan(left, c, points))
    xs += [v / n for v in _period_atoms(n, left + c, 2.0 * left)]
    ratios = []
    for x in xs:
        y = math.floor(n * x)
        ratios.append(_sum_tail(n, y) / float(max_tail(n, y).value))
    return max(ratios), finer_limit(n, c)


def subexp_ratio(n: int, x: float) -> float:
    """P{S_n > x}/P{X > x}."""
    _check_small_n("subexp_ratio", n)
    if x < 2:
        raise PreconditionError("subexp_ratio", "x >= 2", f"x={x}")
    num = exact_engine.sum_tail_exact(n, x).value
    den = stp_tail(x).value
    if isinstance(num, Fraction):
        return float(num / den)
    return float(num) / float(den)


def subexp_scan(n: int, ell_max: int) -> ScanReport:
    """subexp_ratio at 2^l, 2^l - 1 and 3 2^{l-1} for 2 <= l <= ell_max."""
    _check_small_n("subexp_scan", n)
    if ell_max < 2:
        raise PreconditionError("subexp_scan", "ell_max >= 2", f"ell_max={ell_max}")
    xs = set()
    for ell in range(2, ell_max + 1):
        xs.update({(1 << ell) - 1, 1 << ell, 3 << (ell - 1)})
    scan = [(float(x), subexp_ratio(n, x)) for x in sorted(xs) if x <= (1 << ell_max)]
    return ScanReport.from_points(scan, n=n, ell_max=ell_max)


def oscillation_scan(n: int, m: int, points: int = 64) -> ScanReport:
    """x P{S_n > x} over [2^m, 2^{m+1}); liminf n and limsup 2n as m grows."""
    _check_small_n("oscillation_scan", n)
    if m < 1:
        raise PreconditionError("oscillation_scan", "m >= 1", f"m={m}")
    base = 1 << m
    xs = {math.floor(base * 2.0 ** (i / points)) for i in range(points)}
    xs.add(2 * base - 1)
    scan = [(float(x), x * _sum_tail(n, x)) for x in sorted(xs)]
    return ScanReport.from_points(scan, n=n, m=m, liminf=n, limsup=2 * n)


def merge_distance_max(n: int) -> float:
    """sup_j |P{X_n* = 2^{ceil(log2 n)+j}} - p_{j,gamma_n}|."""
    if n < 1:
        raise PreconditionError("merge_distance_max", "n >= 1", f"n={n}")
    gamma = gamma_of(n)
    c = ceil_log2(n)
    distance = 0.0
    j = -c
    # levels without a maximum carry only the limit weight
    while True:
        p = p_max(j, gamma)
        if p < NEGLIGIBLE:
            break
        distance = max(distance, p)
        j -= 1
    j = 1 - c
    while True:
        q = float(q_max_exact(n, j).value)
        p = p_max(j, gamma)
        distance = max(distance, abs(q - p))
        if j > 0 and q < NEGLIGIBLE and p < NEGLIGIBLE:
            break
        j += 1
    return distance


def _monotone(grid: InversionGrid) -> np.ndarray:
    return np.maximum.accumulate(np.clip(grid.value, 0.0, 1.0))


def _pchip(grid: InversionGrid) -> Callable[[np.ndarray], np.ndarray]:
    interpolant = PchipInterpolator(grid.x, _monotone(grid), extrapolate=True)
    return lambda x: np.clip(interpolant(np.asarray(x, dtype=float)), 0.0, 1.0)


def _grid_points(lo: float, hi: float, step: float) -> np.ndarray:
    return np.linspace(lo, hi, max(2, math.ceil((hi - lo) / step) + 1))


def _limit_on_window(law: LatticeLaw, scale: float, shift_by: float, x_lo: float, x_hi: float,
                     at_points: Callable[[np.ndarray], InversionGrid],
                     on_grid: Callable[[], InversionGrid],
                     ) -> Tuple[Callable[[np.ndarray], np.ndarray], float, float]:
    """Limit CDF for windowed_distance, with its interpolation and inversion errors.

    With at most ``max_direct_points`` lattice atoms in the window the limit is
    inverted at the atoms and both edges, so lookups are exact nodes. Otherwise
    a monotone PCHIP through the step grid stays between neighbouring grid
    values and is off by at most the largest grid increment plus twice the
    inversion error.
    """
    values, _ = law.arrays()
    x = (values.astype(float) - shift_by) / scale
    inside = x[(x >= x_lo) & (x <= x_hi)]
    if inside.size + 2 <= get_config().merge.max_direct_points:
        nodes = np.unique(np.concatenate(([x_lo], inside, [x_hi])))
        grid = at_points(nodes)
        cdf = _monotone(grid)
        return (lambda q: np.interp(np.asarray(q, dtype=float), nodes, cdf)), 0.0, grid.quad_err
    grid = on_grid()
    interp_err = float(np.max(np.diff(_monotone(grid)), initial=0.0)) + 2.0 * grid.quad_err
    return _pchip(grid), interp_err, grid.quad_err


def merge_distance_cond(n: int, j: int, tol: Optional[float] = None) -> KsReport:
    """Windowed KS distance of S_n/n - log2 n given X_n* = 2^{ceil(log2 n)+j} from G_{j,gamma_n}."""
    K = _dyadic_level("merge_distance_cond", n, j)
    settings = get_config()
    tol = settings.numerics.default_tol if tol is None else tol
    gamma = gamma_of(n)
    e = eta(j, gamma)
    L = math.log2(n)
    centre = a_nj(n, j) - L
    target = -math.log(settings.merge.cond_tail_eps) * e
    hi = 1.0
    while h_fn(hi) < target:
        hi *= 2.0
    d = brentq(lambda x: h_fn(x) - target, 0.0, hi)
    x_lo, x_hi = centre - d, centre + d
    cap = math.ceil(n * (x_hi + L))
    logger.info(f"Conditional merging n={n}, j={j}: window [{x_lo:.3f}, {x_hi:.3f}], cap {cap}")
    law = exact_engine.cond_sum_law(n, K, cap=cap)
    G, interp_err, quad_err = _limit_on_window(
        law, float(n), n * L, x_lo, x_hi,
        lambda xs: semistable.cdf_Wj_grid(j, gamma, xs, tol),
        lambda: semistable.cdf_Wj_grid(j, gamma, _grid_points(x_lo, x_hi, settings.merge.grid_step), tol),
    )
    report = exact_engine.windowed_distance(law, float(n), n * L, G, x_lo, x_hi)
    allowance = max(report.allowance, chernoff_bound(n, j, d)) + quad_err + interp_err
    logger.info(f"📊 Conditional merging n={n}, j={j}: distance {report.distance:.5f}, allowance {allowance:.2e}")
    return report.model_copy(update={"allowance": allowance})


@lru_cache(maxsize=32)
def mixture_grid(gamma: float, x_lo: float, x_hi: float, step: float, tol: float) -> InversionGrid:
    return semistable.cdf_W_mixture_grid(gamma, _grid_points(x_lo, x_hi, step), tol)


def merge_distance_sum(n: int, tol: Optional[float] = None) -> KsReport:
    """Windowed KS distance of S_n/n - log2 n from G_{gamma_n}."""
    if n < 1 or n > 1 << 10:
        raise PreconditionError("merge_distance_sum", "1 <= n <= 2^10", f"n={n}")
    settings = get_config()
    tol = settings.numerics.default_tol if tol is None else tol
    x_lo, x_hi = settings.merge.x_lo, settings.merge.x_hi
    gamma = gamma_of(n)
    L = math.log2(n)
    cap = math.ceil(n * (x_hi + L))
    law = exact_engine.sum_law(n, cap)
    G, interp_err, quad_err = _limit_on_window(
        law, float(n), n * L, x_lo, x_hi,
        lambda xs: semistable.cdf_W_mixture_grid(gamma, xs, tol),
        lambda: mixture_grid(gamma, x_lo, x_hi, settings.merge.grid_step, tol),
    )
    report = exact_engine.windowed_distance(law, float(n), n * L, G, x_lo, x_hi)
    limit_tail = 1.0 - float(G(np.array([x_hi]))[0]) + quad_err
    if x_hi > 3:
        limit_tail = min(limit_tail, semistable.tail_bound_W(x_hi))
    allowance = max(report.allowance, limit_tail) + quad_err + interp_err
    logger.info(f"📊 Merging n={n}: distance {report.distance:.5f}, allowance {allowance:.2e}")
    return report.model_copy(update={"allowance": allowance})


def fig8_bound_curve(n: int, x: float, j_lo: int, j_hi: int) -> float:
    """sum_j exp(-h((x - mu_1(j, gamma_n))+)/eta_{j,gamma_n}) p_{j,gamma_n}."""
    if j_lo > j_hi:
        raise PreconditionError("fig8_bound_curve", "j_lo <= j_hi", f"j_lo={j_lo}, j_hi={j_hi}")
    gamma = gamma_of(n)
    terms = (
        math.exp(-h_fn(max(x - semistable.mu1(j, gamma), 0.0)) / eta(j, gamma)) * p_max(j, gamma)
        for j in range(j_lo, j_hi + 1)
    )
    return math.fsum(terms)


def truncated_weight(n: int, j_lo: int, j_hi: int) -> float:
    gamma = gamma_of(n)
    return max(0.0, 1.0 - math.fsum(p_max(j, gamma) for j in range(j_lo, j_hi + 1)))


def fig8_rows(n: int, j_lo: int, j_hi: int, xs: Iterable[float]) -> List[Tuple[float, float, float]]:
    """(x, exact P{S_n/n - log2 n >= x}, bound curve) over an x grid."""
    xs = sorted(float(x) for x in xs)
    if not xs:
        raise PreconditionError("fig8_rows", "non-empty x grid")
    L = math.log2(n)
    cap = max(math.ceil(n * (xs[-1] + L)) + 1, 2 * n)
    law = exact_engine.sum_law(n, cap)
    rows = []
    for x in xs:
        exact = float(law.tail(math.ceil(n * (x + L)) - 1))
        rows.append((x, exact, fig8_bound_curve(n, x, j_lo, j_hi)))
    return rows


def fig8_domination(n: int, j_lo: int, j_hi: int, xs: Iterable[float]) -> ScanReport:
    """Exact tail minus the bound curve plus the truncated weight."""
    slack = truncated_weight(n, j_lo, j_hi)
    scan = [(x, exact - bound - slack) for x, exact, bound in fig8_rows(n, j_lo, j_hi, xs)]
    violations = sum(1 for _, s in scan if s > 1e-12)
    return ScanReport.from_points(scan, n=n, j_lo=j_lo, j_hi=j_hi, truncated_weight=slack, violations=violations)
