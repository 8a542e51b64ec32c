from fastapi import APIRouter, Query
from fractions import Fraction
from typing import Any, Dict

from src.models.models import ProbValue
from src.services import stp_core

router = APIRouter(prefix="/stp", tags=["stp"])


def prob_payload(result: ProbValue) -> Dict[str, Any]:
    """JSON form of a probability; exact values also carry their fraction"""
    payload: Dict[str, Any] = {"value": float(result.value), "err": result.err, "exact": result.exact}
    if isinstance(result.value, Fraction):
        payload["fraction"] = str(result.value)
    return payload


@router.get("/cdf")
async def get_cdf(x: float):
    """P{X <= x} of one St. Petersburg game"""
    return {"x": x, **prob_payload(stp_core.stp_cdf(x))}


@router.get("/gamma")
async def get_gamma(n: int = Query(..., ge=1)):
    """Positional parameter of n"""
    return {"n": n, "gamma": stp_core.gamma_of(n)}


@router.get("/max/q")
async def get_max_weight(n: int = Query(..., ge=1), j: int = Query(...)):
    """P{X_n* = 2^(ceil(log2 n) + j)} next to its limit weight"""
    gamma = stp_core.gamma_of(n)
    return {"n": n, "j": j, "gamma": gamma, "limit": stp_core.p_max(j, gamma),
            **prob_payload(stp_core.q_max_exact(n, j))}


@router.get("/two-fold-tail")
async def get_two_fold_tail(k: int, ell: int):
    return {"k": k, "ell": ell, **prob_payload(stp_core.two_fold_tail(k, ell))}


@router.get("/table1")
async def get_table1(gamma: float = 1.0, j_lo: int = -2, j_hi: int = 5):
    """Limit weights of the normed maximum"""
    rows, total = stp_core.table1(gamma, j_lo, j_hi)
    return {"gamma": gamma, "rows": [{"j": j, "p": p} for j, p in rows], "sum": total}
