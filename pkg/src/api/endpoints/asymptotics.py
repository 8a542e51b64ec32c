from fastapi import APIRouter, Query

from src.services import asymptotics

router = APIRouter(prefix="/asymptotics", tags=["asymptotics"])


@router.get("/chernoff")
async def get_chernoff(n: int = Query(..., ge=1), j: int = Query(...), x: float = Query(...)):
    return {"n": n, "j": j, "x": x, "bound": asymptotics.chernoff_bound(n, j, x)}


@router.get("/cantelli")
async def get_cantelli(n: int = Query(..., ge=1), j: int = Query(...), x: float = Query(...)):
    return {"n": n, "j": j, "x": x, "bound": asymptotics.cantelli_bound(n, j, x)}


@router.get("/tail-scan")
def get_tail_scan(n: int = Query(..., ge=1), m: int = Query(..., ge=1),
                  delta: float = Query(0.1, gt=0.0), points: int = Query(64, ge=2, le=512)):
    """r(x) = P{S_n/n > x} x 2^{-{log2(gamma_n x)}} over one period, with {log2(gamma_n x)} >= delta"""
    report = asymptotics.tail_ratio_scan(n, m, delta, points)
    return {
        "n": n, "m": m, "delta": delta,
        "sup": report.sup_val, "sup_at": report.sup_at,
        "inf": report.inf_val, "inf_at": report.inf_at,
        "max_abs_dev": report.meta["max_abs_dev"],
    }


@router.get("/subexp-ratio")
def get_subexp_ratio(n: int = Query(..., ge=1), x: float = Query(...)):
    return {"n": n, "x": x, "ratio": asymptotics.subexp_ratio(n, x)}


@router.get("/merge-max")
def get_merge_max(n: int = Query(..., ge=1, le=1 << 20)):
    """sup_j |q_{n,j} - p_{j,gamma_n}| with q_{n,j} = P{X_n* = 2^{ceil(log2 n)+j}}"""
    return {"n": n, "distance": asymptotics.merge_distance_max(n)}
