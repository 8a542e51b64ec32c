"""Closed-form primitives of the St. Petersburg game.

The gain X pays 2^k with probability 2^-k, k >= 1. Everything here is a pure
function of its arguments; dyadic quantities are returned as Fractions when
the configured exact budget allows it.
"""

import logging
import math
from fractions import Fraction
from typing import List, Tuple, Union

from src.core.exceptions import PreconditionError
from src.models.models import OVERFLOW, MomentOverflow, ProbValue
from src.utils.numerics import (
    EPS, Real, ceil_log2, floor_log2, one_minus_pow, pow2, use_exact,
)

logger = logging.getLogger(__name__)

ONE = Fraction(1)


def _check_gamma(operation: str, gamma: float) -> None:
    if not 0.5 <= gamma <= 1.0:
        raise PreconditionError(operation, "gamma in [1/2, 1]", f"gamma={gamma}")


def stp_cdf(x: Real) -> ProbValue:
    """P{X <= x} = 1 - 2^-floor(log2 x) for x >= 2."""
    if not math.isfinite(float(x)):
        raise PreconditionError("stp_cdf", "x finite", f"x={x}")
    if x < 2:
        return ProbValue(value=Fraction(0))
    return ProbValue(value=ONE - pow2(-floor_log2(x)))


def stp_tail(x: Real) -> ProbValue:
    """P{X > x}."""
    if x < 2:
        return ProbValue(value=ONE)
    return ProbValue(value=pow2(-floor_log2(x)))


def gamma_of(n: int) -> float:
    """Positional parameter n / 2^ceil(log2 n), in (1/2, 1]."""
    if n < 1:
        raise PreconditionError("gamma_of", "n >= 1", f"n={n}")
    return n / (1 << ceil_log2(n))


def truncated_cdf(k: int, x: Real) -> ProbValue:
    """CDF of X conditioned on X <= 2^k."""
    if k < 1:
        raise PreconditionError("truncated_cdf", "k >= 1", f"k={k}")
    if x < 2:
        return ProbValue(value=Fraction(0))
    if x >= (1 << k):
        return ProbValue(value=ONE)
    return ProbValue(value=(ONE - pow2(-floor_log2(x))) / (ONE - pow2(-k)))


def truncated_moment(k: int, ell: int) -> Union[Fraction, float, MomentOverflow]:
    """E[X^ell | X <= 2^k], or OVERFLOW when a double cannot hold it."""
    if k < 1 or ell < 1:
        raise PreconditionError("truncated_moment", "k >= 1 and ell >= 1", f"k={k}, ell={ell}")
    norm = ONE - pow2(-k)
    if ell == 1:
        value = Fraction(k) / norm
    else:
        base = 1 << (ell - 1)
        value = Fraction(base, base - 1) * ((1 << ((ell - 1) * k)) - 1) / norm
    if use_exact(ell, k):
        return value
    try:
        return float(value)
    except OverflowError:
        logger.warning(f"truncated_moment(k={k}, ell={ell}) exceeds the double range")
        return OVERFLOW


def p_max(j: int, gamma: float) -> float:
    """Limit weight e^{-g 2^-j}(1 - e^{-g 2^-j}) of the normed maximum."""
    _check_gamma("p_max", gamma)
    a = gamma * math.ldexp(1.0, -j)
    return math.exp(-a) * -math.expm1(-a)


def table1(gamma: float = 1.0, j_lo: int = -2, j_hi: int = 5) -> Tuple[List[Tuple[int, float]], float]:
    """Rows (j, p_max(j, gamma)) for j_lo..j_hi and their sum."""
    rows = [(j, p_max(j, gamma)) for j in range(j_lo, j_hi + 1)]
    return rows, math.fsum(p for _, p in rows)


def max_cdf_exact(n: int, k: int) -> ProbValue:
    """P{X_n* <= 2^k} = (1 - 2^-k)^n."""
    if n < 1 or k < 0:
        raise PreconditionError("max_cdf_exact", "n >= 1 and k >= 0", f"n={n}, k={k}")
    if k == 0:
        return ProbValue(value=Fraction(0))
    if use_exact(n, k):
        return ProbValue(value=(ONE - pow2(-k)) ** n)
    value = math.exp(n * math.log1p(-math.ldexp(1.0, -k)))
    return ProbValue(value=value, err=4.0 * EPS)


def max_tail(n: int, x: Real) -> ProbValue:
    """P{X_n* > x}."""
    if n < 1:
        raise PreconditionError("max_tail", "n >= 1", f"n={n}")
    if x < 2:
        return ProbValue(value=ONE)
    k = floor_log2(x)
    if use_exact(n, k):
        return ProbValue(value=ONE - (ONE - pow2(-k)) ** n)
    return ProbValue(value=one_minus_pow(math.ldexp(1.0, -k), n), err=4.0 * EPS)


def q_max_exact(n: int, j: int) -> ProbValue:
    """P{X_n* = 2^K} with K = ceil(log2 n) + j."""
    K = ceil_log2(n) + j
    if K <= 0:
        raise PreconditionError("q_max_exact", "ceil(log2 n) + j >= 1", f"n={n}, j={j}")
    if use_exact(n, K):
        return ProbValue(value=(ONE - pow2(-K)) ** n - (ONE - pow2(1 - K)) ** n)
    a = math.ldexp(1.0, -K)
    if K == 1:
        return ProbValue(value=math.ldexp(1.0, -n), err=EPS)
    # (1-a)^n - (1-2a)^n as a difference of two expm1 terms
    value = -math.expm1(n * math.log1p(-2.0 * a)) + math.expm1(n * math.log1p(-a))
    return ProbValue(value=max(value, 0.0), err=8.0 * EPS * max(value, EPS))


def h_gamma_cdf(gamma: float, x: Real) -> float:
    """Limit CDF of the normed maximum, exp(-g 2^-floor(log2(g x)))."""
    _check_gamma("h_gamma_cdf", gamma)
    if x <= 0:
        return 0.0
    if math.isinf(float(x)):
        return 1.0
    scaled = Fraction(gamma) * Fraction(x) if not isinstance(x, float) else gamma * x
    return math.exp(-gamma * math.ldexp(1.0, -floor_log2(scaled)))


def two_fold_tail(k: int, ell: int) -> ProbValue:
    """P{X1 + X2 > 2^k + 2^ell} for 1 <= k <= ell."""
    if k < 1 or k > ell:
        raise PreconditionError("two_fold_tail", "1 <= k <= ell", f"k={k}, ell={ell}")
    if ell > k:
        value = 2 * pow2(-ell) + 2 * pow2(-(ell + k)) - 4 * pow2(-2 * ell)
    else:
        value = 2 * pow2(-ell) - pow2(-2 * ell)
    return ProbValue(value=value)


def cond_sum_mean(n: int, k: int) -> Union[Fraction, float]:
    """E[S_n | X_n* = 2^k] = 2^k + (n-1) k / (1 - 2^-k)."""
    if n < 1 or k < 1:
        raise PreconditionError("cond_sum_mean", "n >= 1 and k >= 1", f"n={n}, k={k}")
    value = Fraction(1 << k) + (n - 1) * Fraction(k) / (ONE - pow2(-k))
    return value if use_exact(n, k) else float(value)


def cond_sum_variance(n: int, k: int) -> Union[Fraction, float]:
    """Var[S_n | X_n* = 2^k] = (n-1) Var(X | X <= 2^k)."""
    if n < 1 or k < 1:
        raise PreconditionError("cond_sum_variance", "n >= 1 and k >= 1", f"n={n}, k={k}")
    norm = ONE - pow2(-k)
    value = (n - 1) * (Fraction((1 << (k + 1)) - 2) / norm - Fraction(k * k) / norm ** 2)
    return value if use_exact(n, k) else float(value)
