"""Acceptance checks behind ``verify``.

Each check returns a CheckResult; library errors are reported as ERROR
results instead of propagating so one failing check does not hide the rest.
"""

import logging
import math
import tempfile
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from src.core.config import get_config
from src.core.exceptions import LabError, PreconditionError
from src.models.models import CheckResult, CheckStatus, SimConfig
from src.services import asymptotics, exact_engine, montecarlo, semistable
from src.services.stp_core import cond_sum_mean, cond_sum_variance, table1
from src.utils.csv_writer import read_csv
from src.utils.figure_generator import FIGURES, SCHEMAS, FigureGenerator

logger = logging.getLogger(__name__)

TABLE1_PRINTED = [0.018, 0.117, 0.233, 0.239, 0.172, 0.104, 0.057, 0.03]
# closed-form sum of p_{j,1} over j = -2..5
TABLE1_SUM = 0.9689

Check = Callable[[float, Path], CheckResult]


def _result(check_id: str, passed: bool, value: float, tolerance: float, detail: str = "") -> CheckResult:
    status = CheckStatus.PASS if passed else CheckStatus.FAIL
    return CheckResult(check_id=check_id, status=status, value=value, tolerance=tolerance, detail=detail or None)


def check_table1(tol: float, out_dir: Path) -> CheckResult:
    rows, total = table1(1.0)
    dev = max(abs(p - printed) for (_, p), printed in zip(rows, TABLE1_PRINTED))
    passed = dev <= 1e-3 and abs(total - TABLE1_SUM) <= 1e-3
    return _result("table1", passed, dev, 1e-3, f"sum={total:.4f}")


def check_subexp(tol: float, out_dir: Path) -> CheckResult:
    at_power = asymptotics.subexp_ratio(2, 1 << 14)
    below_power = asymptotics.subexp_ratio(2, (1 << 14) - 1)
    scan = asymptotics.subexp_scan(2, 16)
    passed = (3.99 <= at_power <= 4.0 and 2.0 <= below_power <= 2.01
              and scan.sup_val <= 4.0 and scan.inf_val <= 2.01)
    detail = f"r(2^14)={at_power:.6f}, r(2^14-1)={below_power:.6f}, sup={scan.sup_val:.6f}, min={scan.inf_val:.6f}"
    return _result("subexp_ratio", passed, scan.sup_val, 4.0, detail)


def check_max_merge(tol: float, out_dir: Path) -> CheckResult:
    scaled = [n * asymptotics.merge_distance_max(n) for n in (1 << e for e in range(4, 15, 2))]
    ratio = max(scaled) / min(scaled)
    return _result("max_merge_rate", ratio <= 5.0, ratio, 5.0,
                   "n*d(n): " + ", ".join(f"{v:.4f}" for v in scaled))


def check_mixture(tol: float, out_dir: Path) -> CheckResult:
    xs = np.linspace(-2.0, 40.0, 20)
    inversion_tol = max(tol, 2e-4)
    worst = 0.0
    for gamma in (0.5, 0.75, 1.0):
        direct = semistable.cdf_W_direct_grid(gamma, xs, inversion_tol).value
        mixture = semistable.cdf_W_mixture_grid(gamma, xs, inversion_tol).value
        worst = max(worst, float(np.max(np.abs(direct - mixture))))
    return _result("mixture_theorem", worst <= 1e-3, worst, 1e-3)


def _decreasing(values: List[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def check_cond_merge(tol: float, out_dir: Path) -> CheckResult:
    distances = [asymptotics.merge_distance_cond(1 << e, 0, tol).distance for e in range(7, 11)]
    passed = _decreasing(distances) and distances[-1] <= 0.06
    return _result("conditional_merging", passed, distances[-1], 0.06,
                   "d: " + ", ".join(f"{d:.5f}" for d in distances))


def check_sum_merge(tol: float, out_dir: Path) -> CheckResult:
    distances = {e: asymptotics.merge_distance_sum(1 << e, tol).distance for e in (6, 7, 8, 10)}
    passed = distances[7] <= 0.08 and _decreasing([distances[6], distances[8], distances[10]])
    return _result("unconditional_merging", passed, distances[7], 0.08,
                   ", ".join(f"n=2^{e}: {d:.5f}" for e, d in distances.items()))


def check_clt(tol: float, out_dir: Path) -> CheckResult:
    small = {e: asymptotics.clt_distance(1 << e, 6) for e in (8, 10, 12)}
    large = asymptotics.clt_distance(1 << 6, 12)
    passed = small[12] <= 0.02 and large >= 0.1 and _decreasing([small[8], small[10], small[12]])
    detail = ", ".join(f"n=2^{e}: {d:.5f}" for e, d in small.items()) + f", n=2^6,k=12: {large:.4f}"
    return _result("conditional_clt", passed, small[12], 0.02, detail)


def check_largemax(tol: float, out_dir: Path) -> CheckResult:
    report = asymptotics.largemax_check(128, 20, 0.5)
    passed = 0.0 < report.exact <= report.bound
    return _result("large_maximum", passed, report.exact, report.bound, f"one_sided={report.one_sided:.4g}")


def check_domination(tol: float, out_dir: Path) -> CheckResult:
    violations = 0
    worst = -math.inf
    for n in (8, 128):
        for j in range(-2, 11):
            scan = asymptotics.bound_domination_scan(n, j, 50)
            violations += scan.meta["violations"]
            worst = max(worst, scan.sup_val)
    return _result("bound_domination", violations == 0, float(violations), 0.0, f"max excess {worst:.3g}")


def check_tail_ratio(tol: float, out_dir: Path) -> CheckResult:
    restricted = asymptotics.tail_ratio_scan(4, 16, 0.1, 64)
    full = asymptotics.full_period_scan(4, 16, 64)
    deviation = restricted.meta["max_abs_dev"]
    passed = (deviation <= 0.02 and 1.9 <= full.sup_val <= 2.0 + 1e-9
              and 1.0 - 1e-5 <= full.inf_val <= 1.05)
    detail = f"full period sup={full.sup_val:.6f}, inf={full.inf_val:.6f}"
    return _result("tail_ratio", passed, deviation, 0.02, detail)


def check_finer(tol: float, out_dir: Path) -> CheckResult:
    sup_val, limit = asymptotics.finer_sup(2, 16, 2.0)
    gap = abs(sup_val - limit)
    return _result("finer_sup", gap <= 0.02 and limit == 1.25, gap, 0.02, f"sup={sup_val:.5f}, limit={limit}")


def check_semistable_tail(tol: float, out_dir: Path) -> CheckResult:
    functionals_ok = all(
        semistable.semistable_tail_functionals(g) == (1.0, 2.0)
        for g in (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    )
    xs = np.array([float(1 << e) for e in range(2, 11)])
    grid = semistable.cdf_W_mixture_grid(1.0, xs, max(tol, 1e-4))
    excess = float(np.max(1.0 - grid.value - 32.0 / xs))
    return _result("semistable_tail", functionals_ok and excess <= 0.0, excess, 0.0,
                   f"functionals_ok={functionals_ok}")


def check_moments(tol: float, out_dir: Path) -> CheckResult:
    worst = 0.0
    density_ok = True
    for j, gamma in ((0, 1.0), (2, 1.0), (0, 0.5)):
        _, mean, var = semistable.moments_by_quadrature(j, gamma)
        exact_mean, exact_var = semistable.moments_Wj(j, gamma)
        worst = max(worst, abs(mean - exact_mean) / abs(exact_mean), abs(var - exact_var) / exact_var)
        lo, hi = semistable.certified_window(j, gamma, 6.0)
        density = semistable.pdf_Wj_grid(j, gamma, np.linspace(lo, hi, 400), 1e-6)
        density_ok &= float(np.max(density.value)) <= semistable.density_bound_Wj(j) + density.quad_err
    return _result("moments_and_density", worst <= 1e-3 and density_ok, worst, 1e-3, f"density_ok={density_ok}")


def side_wave_start(n: int) -> int:
    """First k whose Chebyshev bound on leaving [2^k, 2^{k+1}) is at most 1%."""
    k = max(1, math.ceil(math.log2(n)))
    while True:
        rest_mean = float(cond_sum_mean(n, k)) - (1 << k)
        room = (1 << k) - rest_mean
        if room > 0 and float(cond_sum_variance(n, k)) / room ** 2 <= 0.01:
            return k
        k += 1


def check_montecarlo(tol: float, out_dir: Path) -> CheckResult:
    n, reps = 128, 100_000
    table = montecarlo.simulate(SimConfig(n=n, reps=reps, seed=get_config().simulation.default_seed))
    law = exact_engine.sum_law(n, 1 << 20)
    ks = montecarlo.empirical_ks(table, law)
    k0 = side_wave_start(n)
    large = table.maxima >= math.ldexp(1.0, k0)
    inside = float(np.mean(table.sums[large] < 2.0 * table.maxima[large])) if np.any(large) else 1.0
    passed = ks.distance <= 0.01 and inside >= 0.99
    return _result("monte_carlo", passed, ks.distance, 0.01, f"side-wave k>={k0} frequency={inside:.4f}")


def check_figures(tol: float, out_dir: Path) -> CheckResult:
    target = out_dir / "figures"
    paths = FigureGenerator(out_dir=str(target)).generate()
    schema_ok = all(read_csv(p)["header"] == SCHEMAS[name] for name, p in zip(FIGURES, paths))
    with tempfile.TemporaryDirectory() as scratch:
        again = FigureGenerator(out_dir=scratch).generate()
        same = len(again) == len(paths) and all(
            Path(p).read_bytes() == (target / Path(p).name).read_bytes() for p in again
        )
    fig8 = read_csv(target / "fig8.csv")
    violations = sum(1 for row in fig8["rows"] if float(row[1]) > float(row[3]) + 1e-12)
    passed = schema_ok and same and violations == 0
    return _result("figures", passed, float(violations), 0.0, f"schemas={schema_ok}, deterministic={same}")


CHECKS: Dict[str, Check] = {
    "table1": check_table1,
    "subexp_ratio": check_subexp,
    "max_merge_rate": check_max_merge,
    "mixture_theorem": check_mixture,
    "conditional_merging": check_cond_merge,
    "unconditional_merging": check_sum_merge,
    "conditional_clt": check_clt,
    "large_maximum": check_largemax,
    "bound_domination": check_domination,
    "tail_ratio": check_tail_ratio,
    "finer_sup": check_finer,
    "semistable_tail": check_semistable_tail,
    "moments_and_density": check_moments,
    "monte_carlo": check_montecarlo,
    "figures": check_figures,
}

SUITES: Dict[str, List[str]] = {
    "primary": list(CHECKS),
    "smoke": ["table1", "subexp_ratio", "max_merge_rate", "large_maximum", "finer_sup"],
}


def run_suite(suite: str = "primary", tol: Optional[float] = None, out_dir: Optional[str] = None) -> List[CheckResult]:
    if suite not in SUITES:
        raise PreconditionError("verify", f"suite in {', '.join(SUITES)}", f"suite={suite}")
    settings = get_config()
    tol = settings.numerics.default_tol if tol is None else tol
    target = Path(out_dir or settings.output.out_dir)
    results = []
    for check_id in SUITES[suite]:
        logger.info(f"Running check {check_id}")
        try:
            result = CHECKS[check_id](tol, target)
        except LabError as e:
            logger.error(f"❌ {check_id} raised: {e}")
            result = CheckResult(check_id=check_id, status=CheckStatus.ERROR, detail=str(e))
        else:
            marker = "✅" if result.status is CheckStatus.PASS else "❌"
            logger.info(f"{marker} {check_id}: value={result.value} tolerance={result.tolerance}")
        results.append(result)
    return results
