"""Semistable limit laws of St. Petersburg sums.

W_gamma is the merging limit of S_n/n - log2 n along gamma_n = gamma; W_{j,gamma}
is the limit given that the maximum sits j dyadic levels above ceil(log2 n).
Both are pure-jump infinitely divisible laws with atoms at 2^k/gamma. The
mixture over the level of the largest jump uses V_{j,gamma}, the law of
W_gamma given that this level is j, which is not infinitely divisible.
CDFs and densities come from sine/cosine-transform inversion of the
characteristic functions on Gauss-Legendre panels.
"""

import logging
import math
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq
from scipy.special import exp1

from src.core.config import get_config
from src.core.exceptions import PreconditionError, QuadratureError
from src.models.models import (
    Compensator, InversionGrid, InversionResult, LevyAtomSeries, SeriesKind,
)
from src.services.stp_core import p_max
from src.utils.numerics import floor_log2
from src.utils.quadrature import panel_mesh

logger = logging.getLogger(__name__)

SERIES_TERM_TOL = 1e-17
# x-values times t-nodes evaluated per block
BLOCK_ELEMENTS = 1 << 22

CharFn = Callable[[np.ndarray], np.ndarray]


def _check_gamma(operation: str, gamma: float) -> None:
    if not 0.5 <= gamma <= 1.0:
        raise PreconditionError(operation, "gamma in [1/2, 1]", f"gamma={gamma}")


def _check_tol(operation: str, tol: float, floor: float) -> None:
    if not tol >= floor:
        raise PreconditionError(operation, f"tol >= {floor:g}", f"tol={tol}")


def u_gamma(gamma: float) -> float:
    """Centring constant sum_{k>=1} g^2/(g^2+4^k) - sum_{k>=0} 1/(1+g^2 4^k)."""
    _check_gamma("u_gamma", gamma)
    g2 = gamma * gamma
    total = 0.0
    k = 0
    while True:
        neg = 1.0 / (1.0 + g2 * 4.0 ** k)
        pos = g2 / (g2 + 4.0 ** k) if k >= 1 else 0.0
        total += pos - neg
        if max(neg, pos) < SERIES_TERM_TOL:
            return total
        k += 1


def s_gamma(gamma: float) -> float:
    return -math.log2(gamma)


def mu1(j: int, gamma: float) -> float:
    """Mean of W_{j,gamma}: 2^j/gamma + log2(2^j/gamma)."""
    eta = math.ldexp(1.0, j) / gamma
    return eta + math.log2(eta)


def moments_Wj(j: int, gamma: float) -> Tuple[float, float]:
    eta = math.ldexp(1.0, j) / gamma
    return mu1(j, gamma), 3.0 * eta


def density_bound_Wj(j: int) -> float:
    """sup_x g_{j,gamma}(x) <= (sqrt(pi)/4) 2^{-j/2} + 1/2."""
    return math.sqrt(math.pi) / 4.0 * 2.0 ** (-j / 2.0) + 0.5


def tail_bound_W(x: float) -> float:
    """1 - G_gamma(x) <= 32/x for x > 3."""
    if x <= 3:
        raise PreconditionError("tail_bound_W", "x > 3", f"x={x}")
    return 32.0 / x


def levy_tail_W(gamma: float, x: float) -> float:
    """-R_gamma(x) = gamma 2^{-floor(log2(gamma x))}, x > 0."""
    if x <= 0:
        raise PreconditionError("levy_tail_W", "x > 0", f"x={x}")
    return gamma * math.ldexp(1.0, -floor_log2(gamma * x))


def semistable_tail_functionals(gamma: float) -> Tuple[float, float]:
    """inf and sup over one period of x (-R_gamma(x)), left limits for the sup.

    On [1/gamma, 2/gamma) the Levy tail is constant at gamma, so x(-R) = gamma x
    runs from its value at the left end to its left limit at the right end.
    """
    _check_gamma("semistable_tail_functionals", gamma)
    g = Fraction(gamma)
    left, right = 1 / g, 2 / g
    inf_val = left * g * Fraction(1, 1 << floor_log2(g * left))
    # left limit at 2/gamma still sees the tail level of [1/gamma, 2/gamma)
    sup_val = right * g * Fraction(2, 1 << floor_log2(g * right))
    return float(inf_val), float(sup_val)


def levy_series(kind: SeriesKind, gamma: float, j: Optional[int] = None,
                k_lo: Optional[int] = None, k_hi: Optional[int] = None) -> LevyAtomSeries:
    """Atoms (2^k/gamma, mass) of the Levy measure between k_lo and k_hi."""
    _check_gamma("levy_series", gamma)
    if kind is SeriesKind.CONDITIONAL:
        if j is None:
            raise PreconditionError("levy_series", "j given for the conditional kind")
        k_lo = j - 60 if k_lo is None else k_lo
        atoms = [(math.ldexp(1.0, k) / gamma, gamma * math.ldexp(1.0, -k)) for k in range(k_lo, j)]
        atoms.append((math.ldexp(1.0, j) / gamma, 2.0 * gamma * math.ldexp(1.0, -j)))
        return LevyAtomSeries(kind=kind, gamma=gamma, j=j, drift=mu1(j, gamma),
                              compensator=Compensator.FULL, atoms=atoms)
    if k_lo is None or k_hi is None:
        raise PreconditionError("levy_series", "k_lo and k_hi given for the unconditional kind")
    atoms = [(math.ldexp(1.0, k) / gamma, gamma * math.ldexp(1.0, -k)) for k in range(k_lo, k_hi + 1)]
    return LevyAtomSeries(kind=kind, gamma=gamma, drift=s_gamma(gamma) + u_gamma(gamma),
                          compensator=Compensator.BOUNDED, atoms=atoms)


def _log_cf(t: np.ndarray, drift: float, loc: np.ndarray, mass: np.ndarray,
            compensator: Compensator) -> np.ndarray:
    """sum_k (e^{itx}-1-it c(x)) m + it drift, evaluated term-wise stably."""
    theta = np.multiply.outer(t, loc)
    real = -2.0 * (np.sin(0.5 * theta) ** 2) @ mass
    comp = loc if compensator is Compensator.FULL else loc / (1.0 + loc * loc)
    imag = np.sin(theta) @ mass - t * float(np.dot(comp, mass)) + t * drift
    return real + 1j * imag


def _lower_drift_w(gamma: float, k_min: int) -> float:
    """Compensator drift x^2/(1+x^2) summed over the atoms below k_min."""
    total = 0.0
    k = k_min - 1
    while True:
        x2 = (math.ldexp(1.0, k) / gamma) ** 2
        term = x2 / (1.0 + x2)
        total += term
        if term < SERIES_TERM_TOL:
            return total
        k -= 1


def _upper_drift_w(gamma: float, k_max: int) -> float:
    """Compensator drift 1/(1+x^2) summed over the atoms above k_max."""
    total = 0.0
    k = k_max + 1
    while True:
        x2 = (math.ldexp(1.0, k) / gamma) ** 2
        term = 1.0 / (1.0 + x2)
        total += term
        if term < SERIES_TERM_TOL:
            return total
        k += 1


def _w_series(gamma: float, k_min: int, k_max: int) -> Tuple[float, np.ndarray, np.ndarray]:
    series = levy_series(SeriesKind.UNCONDITIONAL, gamma, k_lo=k_min, k_hi=k_max)
    drift = series.drift + _lower_drift_w(gamma, k_min) - _upper_drift_w(gamma, k_max)
    return drift, series.locations(), series.masses()


def _wj_series(j: int, gamma: float, k_min: int) -> Tuple[float, np.ndarray, np.ndarray]:
    series = levy_series(SeriesKind.CONDITIONAL, gamma, j=j, k_lo=min(k_min, j))
    return series.drift, series.locations(), series.masses()


def _k_below(bound_at: Callable[[int], float], target: float, start: int) -> int:
    k = start
    while bound_at(k) >= target:
        k -= 1
    return k


def _k_above(bound_at: Callable[[int], float], target: float, start: int) -> int:
    k = start
    while bound_at(k) >= target:
        k += 1
    return k


def charfn_W(gamma: float, t: float, tol: float) -> complex:
    """Characteristic function of W_gamma, truncated with certified residuals."""
    _check_gamma("charfn_W", gamma)
    if tol <= 0:
        raise PreconditionError("charfn_W", "tol > 0", f"tol={tol}")
    if t == 0:
        return 1.0 + 0.0j
    at = abs(t)
    k_min = _k_below(lambda k: 0.5 * t * t * math.ldexp(1.0, k) / gamma
                     + at * 4.0 ** k / (3.0 * gamma * gamma), tol / 2.0, 0)
    k_max = _k_above(lambda k: 2.0 * gamma * math.ldexp(1.0, -k)
                     + at * gamma * gamma * 4.0 ** (-k) / 3.0, tol / 2.0, 0)
    drift, loc, mass = _w_series(gamma, k_min, k_max)
    return complex(np.exp(_log_cf(np.array([t], dtype=float), drift, loc, mass, Compensator.BOUNDED))[0])


def charfn_Wj(j: int, gamma: float, t: float, tol: float) -> complex:
    """Characteristic function of W_{j,gamma}."""
    _check_gamma("charfn_Wj", gamma)
    if tol <= 0:
        raise PreconditionError("charfn_Wj", "tol > 0", f"tol={tol}")
    if t == 0:
        return 1.0 + 0.0j
    k_min = _k_below(lambda k: 0.5 * t * t * math.ldexp(1.0, k) / gamma, tol, j)
    drift, loc, mass = _wj_series(j, gamma, k_min)
    return complex(np.exp(_log_cf(np.array([t], dtype=float), drift, loc, mass, Compensator.FULL))[0])


def _top_level(j: int, gamma: float) -> Tuple[float, float]:
    """Location 2^j/gamma and Levy mass gamma 2^-j of level j."""
    return math.ldexp(1.0, j) / gamma, gamma * math.ldexp(1.0, -j)


def moments_Vj(j: int, gamma: float) -> Tuple[float, float]:
    """Mean and variance of W_gamma given that its largest jump sits at level j."""
    _check_gamma("moments_Vj", gamma)
    x_top, m = _top_level(j, gamma)
    q = -math.expm1(-m)
    mean = math.log2(x_top) - 1.0 + 1.0 / q
    # variance of a Poisson(m) count conditioned to be positive
    count_var = m * (1.0 + m) / q - (m / q) ** 2
    return mean, x_top + x_top * x_top * max(count_var, 0.0)


def _vj_series(j: int, gamma: float, k_min: int) -> Tuple[float, np.ndarray, np.ndarray]:
    """Offset and compensated levels below j of the top-level conditional law."""
    series = levy_series(SeriesKind.CONDITIONAL, gamma, j=j, k_lo=min(k_min, j))
    offset = math.log2(math.ldexp(1.0, j) / gamma) - 1.0
    return offset, series.locations()[:-1], series.masses()[:-1]


def _complex_expm1(z: np.ndarray) -> np.ndarray:
    a, b = z.real, z.imag
    return np.expm1(a) * np.cos(b) - 2.0 * np.sin(0.5 * b) ** 2 + 1j * np.exp(a) * np.sin(b)


def _top_factor(t: np.ndarray, x_top: float, m: float) -> np.ndarray:
    """E[exp(i t x_top N) | N >= 1] for N ~ Poisson(m)."""
    theta = np.multiply(t, x_top)
    if m < 1.0:
        return _complex_expm1(m * np.exp(1j * theta)) / math.expm1(m)
    step = -2.0 * np.sin(0.5 * theta) ** 2 + 1j * np.sin(theta)
    return (np.exp(m * step) - math.exp(-m)) / -math.expm1(-m)


def _vj_cf(j: int, gamma: float, k_min: int) -> CharFn:
    offset, loc, mass = _vj_series(j, gamma, k_min)
    x_top, m = _top_level(j, gamma)
    return lambda t: np.exp(_log_cf(t, offset, loc, mass, Compensator.FULL)) * _top_factor(t, x_top, m)


def charfn_Vj(j: int, gamma: float, t: float, tol: float) -> complex:
    """Characteristic function of W_gamma given that its largest jump sits at level j.

    No level above j jumps, level j holds a Poisson(gamma 2^-j) count
    conditioned to be positive and the levels below are compensated Poisson
    counts. Weighted by p_{j,gamma} these laws sum to phi_gamma.
    """
    _check_gamma("charfn_Vj", gamma)
    if tol <= 0:
        raise PreconditionError("charfn_Vj", "tol > 0", f"tol={tol}")
    if t == 0:
        return 1.0 + 0.0j
    k_min = _k_below(lambda k: 0.5 * t * t * math.ldexp(1.0, k) / gamma, tol, j)
    return complex(_vj_cf(j, gamma, k_min)(np.array([t], dtype=float))[0])


def real_part_bound(j: int, gamma: float, t: float) -> float:
    """Upper bound on Re log phi_{j,gamma}(t)."""
    at = abs(t)
    if at > math.pi * gamma * math.ldexp(1.0, -j) / 2.0:
        return -2.0 * at / math.pi
    return -(12.0 / (math.pi ** 2 * gamma)) * math.ldexp(1.0, j) * t * t


def _cdf_horizon(tol: float, t_floor: float) -> float:
    """T with E1(2T/pi)/pi <= tol/2, beyond the linear-bound threshold."""
    target = tol / 2.0
    f = lambda T: exp1(2.0 * T / math.pi) / math.pi - target
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    T = brentq(f, 1e-12, hi) if f(1e-12) > 0 else hi
    return max(T, t_floor)


def _pdf_horizon(tol: float, t_floor: float) -> float:
    """T with exp(-2T/pi)/2 <= tol/2."""
    return max(0.5 * math.pi * math.log(1.0 / tol), t_floor)


def _transform(cf: CharFn, xs: np.ndarray, nodes: np.ndarray, weights: np.ndarray,
               mu: Optional[float], density: bool) -> np.ndarray:
    """sum_t w Im[e^{-itx} phi(t)]/t (or Re[...] for densities) for every x."""
    out = np.zeros(xs.size, dtype=float)
    block = max(1, BLOCK_ELEMENTS // max(xs.size, 1))
    for start in range(0, nodes.size, block):
        t = nodes[start: start + block]
        w = weights[start: start + block]
        phi = cf(t)
        arg = np.multiply.outer(xs, t)
        cos_, sin_ = np.cos(arg), np.sin(arg)
        if density:
            out += cos_ @ (w * phi.real) + sin_ @ (w * phi.imag)
            continue
        safe_t = np.where(t == 0.0, 1.0, t)
        im_part = cos_ @ (w * phi.imag / safe_t) - sin_ @ (w * phi.real / safe_t)
        zero = t == 0.0
        if np.any(zero) and mu is not None:
            # removable point: Im[e^{-itx} phi(t)]/t -> mu - x
            im_part += np.outer(mu - xs, w[zero]).sum(axis=1)
        out += im_part
    return out


def _invert(cf: CharFn, xs: np.ndarray, mu: Optional[float], atom_max: float, T: float,
            tol: float, density: bool, operation: str) -> Tuple[np.ndarray, float]:
    """Panel quadrature on [0, T] with global width halving until stable."""
    numerics = get_config().numerics
    x_abs = float(np.max(np.abs(xs))) if xs.size else 0.0
    width = min(math.pi / (4.0 * (x_abs + atom_max)), 0.5)
    nodes, weights = panel_mesh(0.0, T, width, numerics.quad_degree)
    coarse = _transform(cf, xs, nodes, weights, mu, density)
    disagreement = math.inf
    for attempt in range(numerics.quad_max_refine):
        width /= 2.0
        nodes, weights = panel_mesh(0.0, T, width, numerics.quad_degree)
        fine = _transform(cf, xs, nodes, weights, mu, density)
        disagreement = float(np.max(np.abs(fine - coarse))) / math.pi if xs.size else 0.0
        if disagreement <= tol / 10.0:
            logger.debug(f"{operation}: {nodes.size} nodes, disagreement {disagreement:.2e}")
            return fine, disagreement
        coarse = fine
    raise QuadratureError(f"{operation}: panel refinement did not settle "
                          f"(disagreement {disagreement:.3g} > {tol / 10.0:.3g})",
                          disagreement=disagreement)


def _wj_lower_cutoff(j: int, gamma: float, T: float, tol: float, density: bool) -> int:
    if density:
        bound = lambda k: T ** 3 * math.ldexp(1.0, k) / (6.0 * math.pi * gamma)
    else:
        bound = lambda k: T ** 2 * math.ldexp(1.0, k) / (4.0 * math.pi * gamma)
    return min(_k_below(bound, tol / 8.0, j), j)


def _lower_tail_bound_Wj(j: int, gamma: float, xs: np.ndarray) -> np.ndarray:
    """G_{j,gamma}(x) <= exp(-d^2/(2 var)) for x = mean - d below the mean."""
    mean, var = moments_Wj(j, gamma)
    d = np.minimum(xs - mean, 0.0)
    return np.exp(-0.5 * d * d / var)


def _wj_grid(j: int, gamma: float, xs: np.ndarray, tol: float, density: bool) -> InversionGrid:
    operation = "pdf_Wj" if density else "cdf_Wj"
    _check_gamma(operation, gamma)
    _check_tol(operation, tol, 1e-8)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    values = np.zeros(xs.size, dtype=float)
    # far left of the mean the CDF is below tol/8; jumps are positive only
    todo = np.ones(xs.size, dtype=bool) if density else _lower_tail_bound_Wj(j, gamma, xs) > tol / 8.0
    disagreement = 0.0
    if np.any(todo):
        t_floor = math.pi * gamma * math.ldexp(1.0, -j) / 2.0
        T = _pdf_horizon(tol, t_floor) if density else _cdf_horizon(tol, t_floor)
        k_min = _wj_lower_cutoff(j, gamma, T, tol, density)
        drift, loc, mass = _wj_series(j, gamma, k_min)
        cf = lambda t: np.exp(_log_cf(t, drift, loc, mass, Compensator.FULL))
        integral, disagreement = _invert(cf, xs[todo], drift, float(loc[-1]), T, tol, density, operation)
        values[todo] = integral / math.pi if density else 0.5 - integral / math.pi
    quad_err = tol / 2.0 + tol / 8.0 + disagreement
    return InversionGrid(x=xs, value=values, quad_err=quad_err)


def cdf_Wj_grid(j: int, gamma: float, xs: np.ndarray, tol: float) -> InversionGrid:
    return _wj_grid(j, gamma, xs, tol, density=False)


def pdf_Wj_grid(j: int, gamma: float, xs: np.ndarray, tol: float) -> InversionGrid:
    return _wj_grid(j, gamma, xs, tol, density=True)


def cdf_Wj(j: int, gamma: float, x: float, tol: float) -> InversionResult:
    """G_{j,gamma}(x) by sine-transform inversion."""
    grid = cdf_Wj_grid(j, gamma, np.array([x]), tol)
    return InversionResult(value=float(grid.value[0]), quad_err=grid.quad_err)


def pdf_Wj(j: int, gamma: float, x: float, tol: float) -> InversionResult:
    """g_{j,gamma}(x) by cosine-transform inversion."""
    grid = pdf_Wj_grid(j, gamma, np.array([x]), tol)
    return InversionResult(value=float(grid.value[0]), quad_err=grid.quad_err)


def certified_window(j: int, gamma: float, width_sd: float = 20.0) -> Tuple[float, float]:
    mean, var = moments_Wj(j, gamma)
    sd = math.sqrt(var)
    return mean - width_sd * sd, mean + width_sd * sd


def moments_by_quadrature(j: int, gamma: float, tol: float = 1e-6, step: float = 1.0 / 16.0) -> Tuple[float, float, float]:
    """(mass, mean, variance) of the inverted density over a certified window."""
    lo, hi = certified_window(j, gamma)
    xs = np.arange(lo, hi + step, step)
    g = pdf_Wj_grid(j, gamma, xs, tol).value
    mass = float(trapezoid(g, xs))
    mean = float(trapezoid(xs * g, xs)) / mass
    var = float(trapezoid((xs - mean) ** 2 * g, xs)) / mass
    return mass, mean, var


def _lower_tail_bound_Vj(j: int, gamma: float, xs: np.ndarray) -> np.ndarray:
    """P{V_{j,gamma} <= x} <= exp(-d^2/(2 x_top)) for x = log2 x_top - 1 + x_top - d."""
    x_top, _ = _top_level(j, gamma)
    least = math.log2(x_top) - 1.0 + x_top
    d = np.minimum(xs - least, 0.0)
    return np.exp(-0.5 * d * d / x_top)


def cdf_Vj_grid(j: int, gamma: float, xs: np.ndarray, tol: float) -> InversionGrid:
    """P{W_gamma <= x | largest jump at level j} by sine-transform inversion.

    Below 2pi/x_top the compensated lower levels alone give
    Re log phi <= -(2/pi^2) x_top t^2, beyond it -2|t|/pi, and the top
    factor has modulus at most one, so the CDF horizon of G_{j,gamma}
    applies from pi/x_top on.
    """
    _check_gamma("cdf_Vj", gamma)
    _check_tol("cdf_Vj", tol, 1e-8)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    values = np.zeros(xs.size, dtype=float)
    todo = _lower_tail_bound_Vj(j, gamma, xs) > tol / 8.0
    disagreement = 0.0
    if np.any(todo):
        x_top, m = _top_level(j, gamma)
        T = _cdf_horizon(tol, math.pi / x_top)
        k_min = _wj_lower_cutoff(j, gamma, T, tol, density=False)
        mean, _ = moments_Vj(j, gamma)
        # the top count reaches about m + 4 sqrt(m) jumps
        span = x_top * max(1.0, m + 4.0 * math.sqrt(m))
        integral, disagreement = _invert(_vj_cf(j, gamma, k_min), xs[todo], mean, span, T, tol, False, "cdf_Vj")
        values[todo] = 0.5 - integral / math.pi
    return InversionGrid(x=xs, value=values, quad_err=tol / 2.0 + tol / 8.0 + disagreement)


def cdf_Vj(j: int, gamma: float, x: float, tol: float) -> InversionResult:
    grid = cdf_Vj_grid(j, gamma, np.array([x]), tol)
    return InversionResult(value=float(grid.value[0]), quad_err=grid.quad_err)


def _mixture_range(gamma: float, tol: float) -> Tuple[int, int]:
    """j range with the weights outside it summing to less than tol/2."""
    j_max = 0
    while gamma * math.ldexp(1.0, -j_max) >= tol / 4.0:
        j_max += 1
    j_min = 0
    while 2.0 * math.exp(-gamma * math.ldexp(1.0, -(j_min - 1))) >= tol / 4.0:
        j_min -= 1
    return j_min, j_max


def _lower_tail_bound_W(gamma: float, xs: np.ndarray, tol: float) -> np.ndarray:
    """Mixture of the top-level lower-tail bounds over the j range; the weight outside it is below tol/2."""
    j_min, j_max = _mixture_range(gamma, tol)
    bound = np.zeros(xs.size, dtype=float)
    for j in range(j_min, j_max + 1):
        bound += p_max(j, gamma) * _lower_tail_bound_Vj(j, gamma, xs)
    return bound


def cdf_W_mixture_grid(gamma: float, xs: np.ndarray, tol: float) -> InversionGrid:
    """G_gamma(x) = sum_j p_{j,gamma} P{W_gamma <= x | largest jump at level j}, truncated in j."""
    _check_gamma("cdf_W_mixture", gamma)
    _check_tol("cdf_W_mixture", tol, 1e-6)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    j_min, j_max = _mixture_range(gamma, tol)
    count = j_max - j_min + 1
    skip_budget = tol / (4.0 * count)
    logger.info(f"Mixture inversion gamma={gamma}, j in [{j_min}, {j_max}], {xs.size} points")

    values = np.zeros(xs.size, dtype=float)
    quad_err = 0.0
    for j in range(j_min, j_max + 1):
        p = p_max(j, gamma)
        term_tol = min(1e-3, tol / (2.0 * count * p))
        mean, var = moments_Vj(j, gamma)
        d = xs - mean
        cantelli = var / (var + d * d)
        bound = np.where(d < 0, np.minimum(_lower_tail_bound_Vj(j, gamma, xs), cantelli), cantelli)
        settled = p * bound < skip_budget
        values[settled & (d > 0)] += p
        todo = ~settled
        if np.any(todo):
            grid = cdf_Vj_grid(j, gamma, xs[todo], max(term_tol, 1e-8))
            values[todo] += p * grid.value
            quad_err += p * grid.quad_err
        quad_err += skip_budget
    # weights below j_min belong to laws concentrated near their means
    low_mass = max(0.0, 1.0 - math.fsum(p_max(j, gamma) for j in range(j_min, j_max + 1))
                   - gamma * math.ldexp(1.0, -j_max))
    values[xs >= moments_Vj(j_min - 1, gamma)[0]] += low_mass
    quad_err += tol / 2.0
    return InversionGrid(x=xs, value=values, quad_err=quad_err)


def cdf_W_mixture(gamma: float, x: float, tol: float) -> InversionResult:
    grid = cdf_W_mixture_grid(gamma, np.array([x]), tol)
    return InversionResult(value=float(grid.value[0]), quad_err=grid.quad_err)


def cdf_W_direct_grid(gamma: float, xs: np.ndarray, tol: float) -> InversionGrid:
    """G_gamma by inverting phi_gamma itself.

    Atoms above k_max are dropped together with their jump part; the law
    without them differs in CDF by at most their total mass. Atoms below
    k_min change the integrand by at most t (t^2/2) 2^{k_min}/gamma / t.
    Their compensator drifts are kept exactly.
    """
    _check_gamma("cdf_W_direct", gamma)
    _check_tol("cdf_W_direct", tol, 1e-6)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    values = np.zeros(xs.size, dtype=float)
    todo = _lower_tail_bound_W(gamma, xs, tol) > tol / 8.0
    if not np.any(todo):
        return InversionGrid(x=xs, value=values, quad_err=tol / 2.0 + tol / 4.0)
    T = _cdf_horizon(tol, 0.0)
    k_max = _k_above(lambda k: gamma * math.ldexp(1.0, -k), tol / 8.0, 0)
    k_min = _k_below(lambda k: T ** 2 * math.ldexp(1.0, k) / (4.0 * math.pi * gamma), tol / 8.0, 0)
    drift, loc, mass = _w_series(gamma, k_min, k_max)
    logger.info(f"Direct inversion gamma={gamma}, atoms k in [{k_min}, {k_max}], T={T:.2f}")
    cf = lambda t: np.exp(_log_cf(t, drift, loc, mass, Compensator.BOUNDED))
    integral, disagreement = _invert(cf, xs[todo], None, float(loc[-1]), T, tol, False, "cdf_W_direct")
    values[todo] = 0.5 - integral / math.pi
    quad_err = tol / 2.0 + tol / 4.0 + disagreement
    return InversionGrid(x=xs, value=values, quad_err=quad_err)


def cdf_W_direct(gamma: float, x: float, tol: float) -> InversionResult:
    grid = cdf_W_direct_grid(gamma, np.array([x]), tol)
    return InversionResult(value=float(grid.value[0]), quad_err=grid.quad_err)


def export_rows(grid: InversionGrid) -> List[List[float]]:
    return [[float(x), float(v), grid.quad_err] for x, v in zip(grid.x, grid.value)]
