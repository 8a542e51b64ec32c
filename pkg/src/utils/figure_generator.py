import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.core.config import get_config
from src.core.exceptions import PreconditionError
from src.models.models import SimConfig
from src.services import asymptotics, montecarlo
from src.services.stp_core import table1
from src.utils.csv_writer import write_csv

logger = logging.getLogger(__name__)

FIGURES = ("table1", "fig1", "fig2", "fig3", "figx2", "fig8")

# column schemas of the emitted files
SCHEMAS: Dict[str, List[str]] = {
    "table1": ["j", "p_max"],
    "fig1": ["n", "bin_left", "bin_right", "count", "density"],
    "fig2": ["n", "bin_left", "bin_right", "count", "density"],
    "fig3": ["k", "bin_left", "bin_right", "count", "density"],
    "figx2": ["bin_left", "bin_right", "count", "density", "gaussian_density"],
    "fig8": ["x", "exact_tail", "bound", "bound_plus_truncated"],
}


class FigureGenerator:
    """Writes the data files behind the histogram, table and bound figures"""

    def __init__(self, out_dir: Optional[str] = None, seed: Optional[int] = None,
                 reps: int = 100_000, bins_per_unit: int = 16):
        settings = get_config()
        self.out_dir = Path(out_dir or settings.output.out_dir)
        self.seed = settings.simulation.default_seed if seed is None else seed
        self.reps = reps
        self.bins_per_unit = bins_per_unit
        self._tables: Dict[int, object] = {}

    def _table(self, n: int):
        if n not in self._tables:
            self._tables[n] = montecarlo.simulate(SimConfig(n=n, reps=self.reps, seed=self.seed))
        return self._tables[n]

    def _sim_params(self, **params) -> Dict[str, object]:
        return dict(seed=self.seed, reps=self.reps, **params)

    def table1(self, gamma: float = 1.0) -> Path:
        rows, total = table1(gamma)
        return write_csv(self.out_dir / "table1.csv", SCHEMAS["table1"], [[j, p] for j, p in rows],
                         "figures table1", {"gamma": gamma}, {"sum": repr(total)})

    def _log2_histograms(self, name: str, ns: Sequence[int]) -> Path:
        tables = [self._table(n) for n in ns]
        lo = math.floor(min(float(np.log2(t.sums.min())) for t in tables))
        hi = math.ceil(max(float(np.log2(t.sums.max())) for t in tables))
        bins = max(1, (hi - lo) * self.bins_per_unit)
        rows = []
        for n, table in zip(ns, tables):
            for b in montecarlo.log2_sum_histogram(table, bins, (lo, hi)):
                rows.append([n, b.bin_left, b.bin_right, b.count, b.density])
        params = self._sim_params(n_list=";".join(str(n) for n in ns), bins=bins)
        return write_csv(self.out_dir / f"{name}.csv", SCHEMAS[name], rows, f"figures {name}", params)

    def fig1(self) -> Path:
        return self._log2_histograms("fig1", [64, 128])

    def fig2(self) -> Path:
        ns = sorted({round(2.0 ** (6.0 + eta)) for eta in (0.0, 0.25, 0.5, 0.75, 1.0)})
        return self._log2_histograms("fig2", ns)

    def fig3(self, n: int = 128, k_list: Sequence[int] = range(5, 12)) -> Path:
        waves = montecarlo.conditional_histograms(self._table(n), list(k_list), bins=self.bins_per_unit * 2)
        rows = [[w.k, b.bin_left, b.bin_right, b.count, b.density] for w in waves for b in w.bins]
        flagged = ";".join(str(w.k) for w in waves if w.flagged) or "none"
        return write_csv(self.out_dir / "fig3.csv", SCHEMAS["fig3"], rows, "figures fig3",
                         self._sim_params(n=n, k_list=";".join(map(str, k_list))), {"flagged": flagged})

    def figx2(self, n: int = 128, k: int = 10, bins: int = 64) -> Path:
        table = self._table(n)
        part = table.sums[np.log2(table.maxima).astype(np.int64) == k]
        if part.size < get_config().simulation.min_partition:
            raise PreconditionError("figx2", "partition above the minimum size", f"k={k}, count={part.size}")
        wave = montecarlo.conditional_histograms(table, [k])[0]
        hist = montecarlo.histogram(part, bins)
        sd = math.sqrt(wave.gaussian_var)
        rows = []
        for b in hist:
            mid = 0.5 * (b.bin_left + b.bin_right)
            z = (mid - wave.gaussian_mean) / sd
            rows.append([b.bin_left, b.bin_right, b.count, b.density,
                         math.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))])
        extra = {"gaussian_mean": repr(wave.gaussian_mean), "gaussian_var": repr(wave.gaussian_var),
                 "skewness": repr(wave.skewness)}
        return write_csv(self.out_dir / "figx2.csv", SCHEMAS["figx2"], rows, "figures figx2",
                         self._sim_params(n=n, k=k, bins=bins), extra)

    def fig8(self, n: int = 128, j_lo: int = -2, j_hi: int = 11,
             x_lo: float = -1.0, x_hi: float = 15.0, points: int = 33) -> Path:
        xs = np.linspace(x_lo, x_hi, points)
        slack = asymptotics.truncated_weight(n, j_lo, j_hi)
        rows = [[x, exact, bound, bound + slack] for x, exact, bound in asymptotics.fig8_rows(n, j_lo, j_hi, xs)]
        violations = sum(1 for r in rows if r[1] > r[3] + 1e-12)
        if violations:
            logger.warning(f"fig8: exact tail above the bound at {violations} point(s)")
        params = dict(n=n, j_lo=j_lo, j_hi=j_hi, x_lo=x_lo, x_hi=x_hi, points=points)
        return write_csv(self.out_dir / "fig8.csv", SCHEMAS["fig8"], rows, "figures fig8", params,
                         {"truncated_weight": repr(slack), "violations": violations})

    def generate(self, names: Sequence[str] = FIGURES, gamma: float = 1.0) -> List[Path]:
        unknown = [name for name in names if name not in FIGURES]
        if unknown:
            raise PreconditionError("figures", f"names in {', '.join(FIGURES)}", f"got {', '.join(unknown)}")
        paths = []
        for name in names:
            logger.info(f"Generating {name}")
            paths.append(self.table1(gamma) if name == "table1" else getattr(self, name)())
        return paths
