from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Optional, Dict, Any, List, Tuple, Union
from fractions import Fraction
from enum import Enum
import numpy as np

Number = Union[Fraction, int, float]


class MomentOverflow(str, Enum):
    OVERFLOW = "overflow"


OVERFLOW = MomentOverflow.OVERFLOW


class LawForm(str, Enum):
    SPARSE = "sparse"
    DENSE = "dense"


class SeriesKind(str, Enum):
    UNCONDITIONAL = "unconditional"
    CONDITIONAL = "conditional"


class Compensator(str, Enum):
    BOUNDED = "bounded"
    FULL = "full"


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"


class Command(str, Enum):
    EXACT = "exact"
    SEMISTABLE = "semistable"
    MERGE = "merge"
    TAIL = "tail"
    BOUNDS = "bounds"
    SIMULATE = "simulate"
    FIGURES = "figures"
    VERIFY = "verify"


# Closed-form records
class StpParams(BaseModel):
    n: int = Field(ge=1)
    gamma: float
    j: Optional[int] = None
    k: Optional[int] = Field(default=None, ge=1)

    @field_validator("gamma")
    @classmethod
    def _gamma_range(cls, value: float) -> float:
        if not 0.5 < value <= 1.0:
            raise ValueError(f"gamma must lie in (1/2, 1], got {value}")
        return value

    @classmethod
    def from_n(cls, n: int, j: Optional[int] = None, k: Optional[int] = None) -> "StpParams":
        ceil_log2 = (n - 1).bit_length()
        if j is not None and k is None:
            k = ceil_log2 + j
        return cls(n=n, gamma=n / (1 << ceil_log2), j=j, k=k)


class ProbValue(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: Union[Fraction, float]
    err: float = 0.0

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def __float__(self) -> float:
        return float(self.value)


class LatticeLaw(BaseModel):
    """Law of a non-negative integer-valued sum.

    Sparse laws keep ``atoms`` as value -> probability (Fraction in exact mode).
    Dense laws keep ``dense`` as a float array indexed by value, up to ``cap``.
    Mass above ``cap`` is aggregated in ``overflow``.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    atoms: Optional[Dict[int, Any]] = None
    dense: Optional[np.ndarray] = None
    overflow: Any = 0
    cap: Optional[int] = None
    err: float = 0.0
    exact: bool = False

    @property
    def form(self) -> LawForm:
        return LawForm.DENSE if self.dense is not None else LawForm.SPARSE

    @property
    def max_value(self) -> int:
        if self.dense is not None:
            nz = np.flatnonzero(self.dense)
            return int(nz[-1]) if nz.size else 0
        return max(self.atoms) if self.atoms else 0

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Ascending atom values and their probabilities as float arrays."""
        if self.dense is not None:
            values = np.flatnonzero(self.dense > 0.0)
            return values.astype(np.int64), self.dense[values]
        keys = sorted(self.atoms)
        return (np.array(keys, dtype=np.int64),
                np.array([float(self.atoms[v]) for v in keys], dtype=float))

    def items(self) -> List[Tuple[int, Number]]:
        if self.dense is not None:
            values, probs = self.arrays()
            return [(int(v), float(p)) for v, p in zip(values, probs)]
        return sorted(self.atoms.items())

    def prob(self, value: int) -> Number:
        if self.dense is not None:
            if 0 <= value < self.dense.size:
                return float(self.dense[value])
            return 0.0
        return self.atoms.get(value, 0)

    def mass(self) -> Number:
        if self.dense is not None:
            return float(np.sum(self.dense))
        return sum(self.atoms.values(), Fraction(0) if self.exact else 0.0)

    def mean(self) -> Number:
        """Mean over the atoms; overflow mass is not included."""
        if self.dense is not None:
            return float(np.dot(np.arange(self.dense.size, dtype=float), self.dense))
        return sum((v * p for v, p in self.atoms.items()), Fraction(0) if self.exact else 0.0)

    def cdf(self, y: float) -> Number:
        """P{S <= y} from the atoms."""
        if self.dense is not None:
            top = int(np.floor(y))
            if top < 0:
                return 0.0
            return float(np.sum(self.dense[: top + 1]))
        return sum((p for v, p in self.atoms.items() if v <= y), Fraction(0) if self.exact else 0.0)

    def tail(self, y: float) -> Number:
        """P{S > y}, overflow included."""
        if self.dense is not None:
            start = max(int(np.floor(y)) + 1, 0)
            return float(self.overflow) + float(np.sum(self.dense[start:]))
        above = sum((p for v, p in self.atoms.items() if v > y), Fraction(0) if self.exact else 0.0)
        return above + self.overflow

    def csv_rows(self) -> List[List[Any]]:
        rows: List[List[Any]] = [[v, float(p)] for v, p in self.items()]
        rows.append(["__overflow__", float(self.overflow)])
        return rows


# Limit-law records
class LevyAtomSeries(BaseModel):
    kind: SeriesKind
    gamma: float
    j: Optional[int] = None
    drift: float
    compensator: Compensator
    atoms: List[Tuple[float, float]]

    def locations(self) -> np.ndarray:
        return np.array([loc for loc, _ in self.atoms], dtype=float)

    def masses(self) -> np.ndarray:
        return np.array([mass for _, mass in self.atoms], dtype=float)


class InversionResult(BaseModel):
    value: float
    quad_err: float = Field(ge=0.0)


class InversionGrid(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray
    value: np.ndarray
    quad_err: float


# Scan and distance records
class ScanReport(BaseModel):
    points: List[Tuple[float, float]]
    sup_val: float
    inf_val: float
    sup_at: float
    inf_at: float
    meta: Dict[str, Any] = {}

    @classmethod
    def from_points(cls, points: List[Tuple[float, float]], **meta: Any) -> "ScanReport":
        if not points:
            raise ValueError("a scan report needs at least one point")
        sup_at, sup_val = max(points, key=lambda p: p[1])
        inf_at, inf_val = min(points, key=lambda p: p[1])
        return cls(points=points, sup_val=sup_val, inf_val=inf_val,
                   sup_at=sup_at, inf_at=inf_at, meta=meta)

    def csv_rows(self) -> List[List[float]]:
        return [[x, s] for x, s in self.points]


class KsReport(BaseModel):
    distance: float
    at: float
    allowance: float = 0.0
    overflow: float = 0.0


class LargeMaxReport(BaseModel):
    n: int
    k: int
    eps: float
    exact: float
    one_sided: float
    bound: float
    centre: float
    asymptotic_centre: float


class TailPair(BaseModel):
    upper: float
    lower: float
    err: float = 0.0


# Simulation records
class SimConfig(BaseModel):
    n: int = Field(ge=1)
    reps: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2 ** 64)
    bins: int = Field(default=200, ge=1)


class SampleTable(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    seed: int
    sums: np.ndarray
    maxima: np.ndarray
    overflow_count: int = 0

    def csv_rows(self) -> List[List[Any]]:
        return [[i, int(s), int(m)] for i, (s, m) in enumerate(zip(self.sums, self.maxima))]


class HistogramBin(BaseModel):
    bin_left: float
    bin_right: float
    count: int
    density: float


class ConditionalWave(BaseModel):
    k: int
    count: int
    frequency: float
    flagged: bool
    bins: List[HistogramBin] = []
    empirical_mean: Optional[float] = None
    empirical_var: Optional[float] = None
    skewness: Optional[float] = None
    gaussian_mean: float
    gaussian_var: float
    support_frequency: Optional[float] = None


# Run and verification records
class RunSpec(BaseModel):
    command: Command
    params: Dict[str, Any] = {}
    out_dir: str
    seed: Optional[int] = None
    tol: float = Field(default=1e-4, gt=0.0)


class CheckResult(BaseModel):
    check_id: str
    status: CheckStatus
    value: Optional[float] = None
    tolerance: Optional[float] = None
    detail: Optional[str] = None


# API Request/Response Models
class SimulateRequest(BaseModel):
    n: int = Field(ge=1, le=4096)
    reps: int = Field(ge=1, le=200_000)
    seed: Optional[int] = None
    bins: int = Field(default=64, ge=1)


class SimulateSummary(BaseModel):
    n: int
    reps: int
    seed: int
    mean_log2_sum: float
    median_normed_sum: float
    max_offset_frequencies: Dict[int, float]
    overflow_count: int
