"""Dyadic helpers and compensated summation.

floor(log2 x) is taken from the bit pattern, never from a floating
logarithm, so exact powers of two are classified correctly.
"""

import math
from fractions import Fraction
from typing import Iterable, Tuple, Union

from src.core.config import get_config

Real = Union[int, float, Fraction]

EPS = 2.0 ** -52


def use_exact(n: int, k: int) -> bool:
    """Exact rational arithmetic for n*k within the configured budget."""
    return n * k <= get_config().numerics.exact_budget


def ceil_log2(n: int) -> int:
    if n < 1:
        raise ValueError(f"ceil_log2 needs n >= 1, got {n}")
    return (n - 1).bit_length()


def floor_log2(x: Real) -> int:
    """floor(log2 x) for x > 0, exact for ints, Fractions and floats."""
    if x <= 0:
        raise ValueError(f"floor_log2 needs x > 0, got {x}")
    if isinstance(x, int):
        return x.bit_length() - 1
    if isinstance(x, Fraction):
        p, q = x.numerator, x.denominator
        k = p.bit_length() - q.bit_length()
        if k >= 0:
            if p < (q << k):
                k -= 1
        elif (p << -k) < q:
            k -= 1
        return k
    _, e = math.frexp(float(x))
    return e - 1


def pow2(e: int, exact: bool = True) -> Real:
    if exact:
        return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)
    return math.ldexp(1.0, e)


def neumaier_sum(values: Iterable[float]) -> Tuple[float, float]:
    """Compensated sum and a bound on its rounding error."""
    total = 0.0
    comp = 0.0
    abs_total = 0.0
    count = 0
    for v in values:
        v = float(v)
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        abs_total += abs(v)
        count += 1
    return total + comp, (2.0 + count * EPS) * EPS * abs_total


def one_minus_pow(a: float, n: int) -> float:
    """1 - (1 - a)^n without cancellation."""
    if a >= 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-a))
