from fastapi import APIRouter, Query
from typing import Optional

from src.core.config import get_config
from src.services import semistable

router = APIRouter(prefix="/semistable", tags=["semistable"])


def _tol(tol: Optional[float]) -> float:
    return get_config().numerics.default_tol if tol is None else tol


@router.get("/cdf")
def get_cdf(gamma: float, x: float, j: Optional[int] = None, tol: Optional[float] = Query(None, gt=0.0)):
    """G_gamma(x) by the mixture representation, or G_{j,gamma}(x) when j is given"""
    if j is None:
        result = semistable.cdf_W_mixture(gamma, x, _tol(tol))
    else:
        result = semistable.cdf_Wj(j, gamma, x, _tol(tol))
    return {"gamma": gamma, "j": j, "x": x, "value": result.value, "quad_err": result.quad_err}


@router.get("/pdf")
def get_pdf(gamma: float, j: int, x: float, tol: Optional[float] = Query(None, gt=0.0)):
    result = semistable.pdf_Wj(j, gamma, x, _tol(tol))
    return {"gamma": gamma, "j": j, "x": x, "value": result.value, "quad_err": result.quad_err,
            "bound": semistable.density_bound_Wj(j)}


@router.get("/moments")
def get_moments(gamma: float, j: int, quadrature: bool = False):
    """Closed-form mean and variance of W_{j,gamma}, optionally checked by quadrature"""
    mean, var = semistable.moments_Wj(j, gamma)
    payload = {"gamma": gamma, "j": j, "mean": mean, "variance": var}
    if quadrature:
        mass, q_mean, q_var = semistable.moments_by_quadrature(j, gamma)
        payload["quadrature"] = {"mass": mass, "mean": q_mean, "variance": q_var}
    return payload


@router.get("/tail-functionals")
async def get_tail_functionals(gamma: float):
    """liminf and limsup of x(1 - G_gamma(x))"""
    liminf, limsup = semistable.semistable_tail_functionals(gamma)
    return {"gamma": gamma, "liminf": liminf, "limsup": limsup}
