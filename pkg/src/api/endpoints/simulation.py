from fastapi import APIRouter
import logging

from src.core.config import get_config
from src.models.models import SimConfig, SimulateRequest, SimulateSummary
from src.services import montecarlo

router = APIRouter(prefix="/simulate", tags=["simulation"])

logger = logging.getLogger(__name__)


@router.post("/run", response_model=SimulateSummary)
def run_simulation(request: SimulateRequest):
    """Run a small seeded Monte Carlo and return summary statistics"""
    seed = get_config().simulation.default_seed if request.seed is None else request.seed
    table = montecarlo.simulate(SimConfig(n=request.n, reps=request.reps, seed=seed, bins=request.bins))
    summary = montecarlo.summarize(table)
    logger.info(f"✅ Simulation n={request.n}, reps={request.reps}, seed={seed} finished")
    return summary
