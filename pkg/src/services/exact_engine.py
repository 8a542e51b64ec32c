"""Exact finite-n laws of St. Petersburg sums.

Sparse laws hold few-summand sums as value -> probability maps (Fractions in
exact mode). Dense laws hold float arrays indexed by value up to a cap, with
all mass above the cap kept in an overflow bucket. Positive summands never
bring overflow mass back below the cap.
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.signal import fftconvolve

from src.core.config import get_config
from src.core.exceptions import FeasibilityError, PreconditionError
from src.models.models import KsReport, LatticeLaw, LawForm, ProbValue
from src.services.stp_core import q_max_exact
from src.utils.numerics import EPS, ceil_log2, floor_log2, neumaier_sum, pow2, use_exact

logger = logging.getLogger(__name__)

ONE = Fraction(1)

# Largest dense array the engine will allocate
DENSE_LIMIT = 1 << 26

CdfFn = Callable[[np.ndarray], np.ndarray]


def _zero(exact: bool):
    return Fraction(0) if exact else 0.0


def _min_cap(*caps: Optional[int]) -> Optional[int]:
    present = [c for c in caps if c is not None]
    return min(present) if present else None


def _sparse_law(atoms: Dict[int, object], overflow, cap: Optional[int], err: float, exact: bool) -> LatticeLaw:
    return LatticeLaw(atoms=atoms, overflow=overflow, cap=cap, err=err, exact=exact)


def _dense_law(dense: np.ndarray, overflow: float, cap: Optional[int], err: float) -> LatticeLaw:
    return LatticeLaw(dense=dense, overflow=float(overflow), cap=cap, err=err, exact=False)


def truncated_atom_law(k: int, exact: bool = True) -> LatticeLaw:
    """Law of X given X <= 2^k: mass 2^-i / (1 - 2^-k) at 2^i, i = 1..k."""
    if k < 1:
        raise PreconditionError("truncated_atom_law", "k >= 1", f"k={k}")
    norm = ONE - pow2(-k)
    atoms = {1 << i: pow2(-i) / norm for i in range(1, k + 1)}
    if not exact:
        atoms = {v: float(p) for v, p in atoms.items()}
    return _sparse_law(atoms, _zero(exact), None, 0.0 if exact else k * EPS, exact)


def gain_law(cap: int, exact: bool = True) -> LatticeLaw:
    """Law of X itself with the atoms above cap moved into overflow."""
    if cap < 2:
        raise PreconditionError("gain_law", "cap >= 2", f"cap={cap}")
    K = floor_log2(cap)
    atoms = {1 << i: pow2(-i) for i in range(1, K + 1)}
    overflow = pow2(-K)
    if not exact:
        atoms = {v: float(p) for v, p in atoms.items()}
        overflow = float(overflow)
    return _sparse_law(atoms, overflow, cap, 0.0, exact)


def to_dense(law: LatticeLaw, cap: Optional[int] = None) -> LatticeLaw:
    """Dense copy of a law, truncated at cap when given."""
    cap = _min_cap(cap, law.cap)
    if law.form is LawForm.DENSE:
        if cap is None or cap >= law.dense.size - 1:
            return law
        kept = law.dense[: cap + 1]
        return _dense_law(kept.copy(), float(law.overflow) + float(np.sum(law.dense[cap + 1:])), cap, law.err)
    top = law.max_value if cap is None else min(cap, law.max_value)
    if top + 1 > DENSE_LIMIT:
        raise FeasibilityError(f"dense law up to {top} exceeds the engine limit {DENSE_LIMIT}")
    dense = np.zeros(top + 1, dtype=float)
    spill = 0.0
    for v, p in law.atoms.items():
        if v <= top:
            dense[v] += float(p)
        else:
            spill += float(p)
    return _dense_law(dense, float(law.overflow) + spill, cap, law.err)


def shift(law: LatticeLaw, offset: int) -> LatticeLaw:
    """Law of S + offset."""
    cap = None if law.cap is None else law.cap + offset
    if law.form is LawForm.DENSE:
        dense = np.concatenate([np.zeros(offset, dtype=float), law.dense])
        return _dense_law(dense, float(law.overflow), cap, law.err)
    atoms = {v + offset: p for v, p in law.atoms.items()}
    return _sparse_law(atoms, law.overflow, cap, law.err, law.exact)


def _convolve_sparse(a: LatticeLaw, b: LatticeLaw, cap: Optional[int]) -> LatticeLaw:
    exact = a.exact and b.exact
    out: Dict[int, object] = {}
    spilled = _zero(exact)
    # iterate the smaller support in the inner loop
    outer, inner = (a, b) if len(a.atoms) >= len(b.atoms) else (b, a)
    inner_items = list(inner.atoms.items())
    for v, p in outer.atoms.items():
        for w, q in inner_items:
            s = v + w
            if cap is not None and s > cap:
                spilled += p * q
            else:
                out[s] = out.get(s, _zero(exact)) + p * q
    overflow = a.overflow + a.mass() * b.overflow + spilled
    err = a.err + b.err + (0.0 if exact else EPS * len(out))
    return _sparse_law(out, overflow, cap, err, exact)


def _shift_add(values: np.ndarray, probs: np.ndarray, dense: np.ndarray, size: int) -> np.ndarray:
    """Convolve a dense array with a few-atom law by shifted accumulation."""
    out = np.zeros(size, dtype=float)
    for v, p in zip(values, probs):
        v = int(v)
        if v >= size:
            continue
        length = min(dense.size, size - v)
        out[v: v + length] += p * dense[:length]
    return out


def _convolve_dense(a: LatticeLaw, b: LatticeLaw, cap: Optional[int]) -> LatticeLaw:
    kernel_max = get_config().numerics.atom_kernel_max
    a_few = a.form is LawForm.SPARSE and len(a.atoms) <= kernel_max
    b_few = b.form is LawForm.SPARSE and len(b.atoms) <= kernel_max
    if a_few and not b_few:
        a, b = b, a
        a_few, b_few = b_few, a_few

    da = to_dense(a, cap)
    full_size = da.dense.size + b.max_value
    size = full_size if cap is None else min(cap + 1, full_size)
    if size > DENSE_LIMIT:
        raise FeasibilityError(f"dense convolution of size {size} exceeds the engine limit {DENSE_LIMIT}")

    err = a.err + b.err
    if b_few:
        values, probs = b.arrays()
        out = _shift_add(values, probs, da.dense, size)
        dropped = sum(p * float(np.sum(da.dense[max(size - int(v), 0):])) for v, p in zip(values, probs))
        err += EPS * len(values) * float(da.mass())
    else:
        db = to_dense(b, cap)
        product = fftconvolve(da.dense, db.dense)
        negative = float(-np.sum(product[product < 0.0]))
        np.clip(product, 0.0, None, out=product)
        out = product[:size].copy()
        dropped = float(np.sum(product[size:]))
        n_fft = product.size
        err += (negative + n_fft * EPS * math.log2(max(n_fft, 2))
                * float(np.linalg.norm(da.dense)) * float(np.linalg.norm(db.dense)))
    overflow = float(da.overflow) + float(da.mass()) * float(b.overflow) + dropped
    return _dense_law(out, overflow, cap, err)


def convolve(a: LatticeLaw, b: LatticeLaw, cap: Optional[int] = None) -> LatticeLaw:
    """Law of the independent sum, mass above cap moved into overflow."""
    cap = _min_cap(cap, a.cap, b.cap)
    if a.form is LawForm.SPARSE and b.form is LawForm.SPARSE:
        return _convolve_sparse(a, b, cap)
    return _convolve_dense(a, b, cap)


def power_convolve(base: LatticeLaw, m: int, cap: Optional[int] = None,
                   dense: Optional[bool] = None) -> LatticeLaw:
    """m-fold convolution power.

    Sparse results accumulate against the few-atom base one summand at a
    time; dense results use binary exponentiation with FFT squaring.
    """
    if m < 1:
        raise PreconditionError("power_convolve", "m >= 1", f"m={m}")
    cap = _min_cap(cap, base.cap)
    if dense is None:
        dense = base.form is LawForm.DENSE
    if not dense:
        result = base if cap is None else convolve(base, _unit_law(base.exact), cap)
        for _ in range(m - 1):
            result = convolve(result, base, cap)
        return result
    return _dense_power(base, m, cap)


def _unit_law(exact: bool) -> LatticeLaw:
    return _sparse_law({0: ONE if exact else 1.0}, _zero(exact), None, 0.0, exact)


def _dense_power(base: LatticeLaw, m: int, cap: Optional[int]) -> LatticeLaw:
    """Left-to-right binary exponentiation; the odd-step factor is the base."""
    start = to_dense(base, cap)
    result = start
    for bit in bin(m)[3:]:
        result = convolve(result, result, cap)
        if bit == "1":
            result = convolve(result, base, cap)
    return result


def _support_cap(summands: int, top: int) -> int:
    return max(summands * top, 0)


def cond_sum_law(n: int, k: int, cap: Optional[int] = None) -> LatticeLaw:
    """Law of S_n given X_n* = 2^k, i.e. 2^k + S_{n-1} truncated at 2^k."""
    if n < 1 or k < 1:
        raise PreconditionError("cond_sum_law", "n >= 1 and k >= 1", f"n={n}, k={k}")
    top = 1 << k
    if n == 1:
        return _sparse_law({top: ONE}, Fraction(0), cap, 0.0, True)
    rest_cap = None if cap is None else cap - top
    if rest_cap is not None and rest_cap < 2 * (n - 1):
        raise PreconditionError("cond_sum_law", "cap >= 2^k + 2(n-1)", f"cap={cap}")

    numerics = get_config().numerics
    if n <= numerics.sparse_max_n:
        base = truncated_atom_law(k, exact=use_exact(n, k))
        rest = power_convolve(base, n - 1, rest_cap)
    else:
        if rest_cap is None:
            rest_cap = _support_cap(n - 1, top)
        if rest_cap + 1 > DENSE_LIMIT:
            raise FeasibilityError(f"conditional law n={n}, k={k} needs cap {rest_cap}; "
                                   f"engine limit is {DENSE_LIMIT}")
        logger.debug(f"dense conditional law n={n}, k={k}, cap={rest_cap}")
        rest = power_convolve(truncated_atom_law(k, exact=False), n - 1, rest_cap, dense=True)
    return shift(rest, top)


def cond_rest_law(n: int, k: int, cap: Optional[int] = None) -> LatticeLaw:
    """Law of S_{n-1}^{(k)}, the sum of n-1 gains truncated at 2^k."""
    if n < 2:
        return _unit_law(True)
    numerics = get_config().numerics
    if n <= numerics.sparse_max_n:
        return power_convolve(truncated_atom_law(k, exact=use_exact(n, k)), n - 1, cap)
    if cap is None:
        cap = _support_cap(n - 1, 1 << k)
    return power_convolve(truncated_atom_law(k, exact=False), n - 1, cap, dense=True)


def sum_law(n: int, cap: int) -> LatticeLaw:
    """Law of S_n on [2n, cap], mass above cap in overflow."""
    if n < 1 or cap < 2 * n:
        raise PreconditionError("sum_law", "n >= 1 and cap >= 2n", f"n={n}, cap={cap}")
    numerics = get_config().numerics
    K = floor_log2(cap)
    if n <= numerics.sparse_max_n:
        return power_convolve(gain_law(cap, exact=use_exact(n, K)), n, cap)
    logger.info(f"Building dense law of S_n for n={n}, cap={cap}")
    return power_convolve(gain_law(cap, exact=False), n, cap, dense=True)


def sum_law_by_max(n: int, cap: int) -> LatticeLaw:
    """Law of S_n assembled from the conditional laws given the maximum."""
    if n < 1 or cap < 2 * n:
        raise PreconditionError("sum_law_by_max", "n >= 1 and cap >= 2n", f"n={n}, cap={cap}")
    K = floor_log2(cap)
    c = ceil_log2(n)
    exact = n <= get_config().numerics.sparse_max_n and use_exact(n, K)
    total: Dict[int, object] = {}
    overflow = _zero(exact)
    err = 0.0
    for k in range(1, K + 1):
        q = q_max_exact(n, k - c).value
        q = q if exact else float(q)
        if (1 << k) + 2 * (n - 1) > cap:
            overflow += q
            continue
        law = cond_sum_law(n, k, cap)
        for v, p in law.items():
            p = p if exact else float(p)
            total[v] = total.get(v, _zero(exact)) + q * p
        overflow += q * (law.overflow if exact else float(law.overflow))
        err += law.err
    # max above 2^K puts the sum above cap
    top_mass = (ONE - (ONE - pow2(-K)) ** n) if exact else -math.expm1(n * math.log1p(-math.ldexp(1.0, -K)))
    overflow += top_mass
    if n > get_config().numerics.sparse_max_n:
        return to_dense(_sparse_law(total, overflow, cap, err, exact), cap)
    return _sparse_law(total, overflow, cap, err, exact)


@lru_cache(maxsize=1 << 20)
def _sub_tail_exact(m: int, K: int, y: int) -> Fraction:
    """P{all m gains <= 2^K and their sum > y}, gains unnormalised."""
    if m == 0:
        return ONE if y < 0 else Fraction(0)
    if K <= 0:
        return Fraction(0)
    if y < 2 * m:
        return (ONE - pow2(-K)) ** m
    if y >= m << K:
        return Fraction(0)
    total = Fraction(0)
    p_top = pow2(-K)
    for c in range(m + 1):
        sub = _sub_tail_exact(m - c, K - 1, y - (c << K))
        if sub:
            total += math.comb(m, c) * p_top ** c * sub
    return total


@lru_cache(maxsize=1 << 20)
def _sub_tail_float(m: int, K: int, y: int) -> float:
    if m == 0:
        return 1.0 if y < 0 else 0.0
    if K <= 0:
        return 0.0
    if y < 2 * m:
        return math.exp(m * math.log1p(-math.ldexp(1.0, -K)))
    if y >= m << K:
        return 0.0
    terms = (
        math.comb(m, c) * math.ldexp(1.0, -K * c) * _sub_tail_float(m - c, K - 1, y - (c << K))
        for c in range(m + 1)
    )
    total, _ = neumaier_sum(terms)
    return total


def sum_tail_exact(n: int, y) -> ProbValue:
    """P{S_n > y}, split on whether some gain alone exceeds y."""
    if n < 1:
        raise PreconditionError("sum_tail_exact", "n >= 1", f"n={n}")
    y_int = math.floor(y)
    if y_int < 2 * n:
        return ProbValue(value=ONE)
    K = floor_log2(y_int)
    if use_exact(n, K):
        value = ONE - (ONE - pow2(-K)) ** n + _sub_tail_exact(n, K, y_int)
        return ProbValue(value=value)
    value = -math.expm1(n * math.log1p(-math.ldexp(1.0, -K))) + _sub_tail_float(n, K, y_int)
    return ProbValue(value=min(value, 1.0), err=16.0 * EPS * (K + 1) * n * value)


def _atom_gaps(x: np.ndarray, probs: np.ndarray, cdf_right: np.ndarray, g: np.ndarray) -> Tuple[float, float]:
    cdf_left = cdf_right - probs
    gaps = np.maximum(np.abs(cdf_right - g), np.abs(cdf_left - g))
    i = int(np.argmax(gaps))
    return float(gaps[i]), float(x[i])


def ks_distance(law: LatticeLaw, scale: float, shift_by: float, G: CdfFn,
                tail_bound: Optional[Callable[[float], float]] = None,
                tol: Optional[float] = None) -> KsReport:
    """sup_x |P{(S - shift)/scale <= x} - G(x)| over the materialised atoms.

    Mass above the cap is not seen by the scan; it is reported as the
    allowance together with the caller's tail bound for G.
    """
    tol = get_config().numerics.default_tol if tol is None else tol
    overflow = float(law.overflow)
    if overflow > tol:
        raise FeasibilityError(f"overflow mass {overflow:.3g} above cap exceeds precision {tol:g}")
    values, probs = law.arrays()
    x = (values.astype(float) - shift_by) / scale
    distance, at = _atom_gaps(x, probs, np.cumsum(probs), np.asarray(G(x), dtype=float))
    allowance = overflow
    if tail_bound is not None and law.cap is not None:
        allowance = max(allowance, tail_bound((law.cap - shift_by) / scale))
    return KsReport(distance=distance, at=at, allowance=allowance, overflow=overflow)


def windowed_distance(law: LatticeLaw, scale: float, shift_by: float, G: CdfFn,
                      x_lo: float, x_hi: float) -> KsReport:
    """sup over [x_lo, x_hi] of the CDF gap, plus the mass outside the window."""
    values, probs = law.arrays()
    x = (values.astype(float) - shift_by) / scale
    cdf_right = np.cumsum(probs)
    inside = (x >= x_lo) & (x <= x_hi)
    below = float(np.sum(probs[x < x_lo]))
    edges = np.array([x_lo, x_hi])
    g_edges = np.asarray(G(edges), dtype=float)
    if np.any(inside):
        distance, at = _atom_gaps(x[inside], probs[inside], cdf_right[inside], np.asarray(G(x[inside]), dtype=float))
        above_last = float(cdf_right[inside][-1])
    else:
        distance, at = 0.0, x_lo
        above_last = below
    left_gap = abs(below - g_edges[0])
    right_gap = abs(above_last - g_edges[1])
    if left_gap > distance:
        distance, at = left_gap, x_lo
    if right_gap > distance:
        distance, at = right_gap, x_hi
    upper_law = float(law.overflow) + float(np.sum(probs[x > x_hi]))
    allowance = max(below, float(g_edges[0]), upper_law, 1.0 - float(g_edges[1]))
    return KsReport(distance=distance, at=at, allowance=allowance, overflow=float(law.overflow))
