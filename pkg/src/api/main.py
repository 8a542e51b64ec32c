from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from contextlib import asynccontextmanager
import logging
import traceback

from src.api.endpoints import stp, semistable, asymptotics, simulation
from src.core.config import get_config
from src.core.exceptions import FeasibilityError, NumericOverflow, PreconditionError, QuadratureError

app_config = get_config()


@asynccontextmanager
async def lifespan(app: FastAPI):
    # Startup
    logging.basicConfig(
        level=getattr(logging, app_config.api.log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler()
        ]
    )
    logger = logging.getLogger(__name__)
    logger.info(f"🚀 Starting St. Petersburg sums API (version {app_config.output.version})")

    yield

    # Shutdown
    logger.info("API stopped")


app = FastAPI(
    title="St. Petersburg Sums Laboratory API",
    description="Exact laws, semistable limits, asymptotic bounds and Monte Carlo for St. Petersburg sums",
    version=app_config.output.version,
    lifespan=lifespan
)


def _error_body(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


@app.exception_handler(PreconditionError)
@app.exception_handler(FeasibilityError)
async def precondition_exception_handler(request: Request, exc: Exception):
    logging.getLogger(__name__).warning(f"❌ {request.method} {request.url}: {exc}")
    return JSONResponse(status_code=400, content=_error_body(exc))


@app.exception_handler(QuadratureError)
@app.exception_handler(NumericOverflow)
async def numeric_exception_handler(request: Request, exc: Exception):
    logging.getLogger(__name__).error(f"❌ {request.method} {request.url}: {exc}")
    return JSONResponse(status_code=422, content=_error_body(exc))


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Global exception handler to log detailed error information"""
    logger = logging.getLogger(__name__)

    logger.error(f"❌ Unhandled exception on {request.method} {request.url}")
    logger.error(f"❌ Exception type: {type(exc).__name__}")
    logger.error(f"❌ Full traceback:\n{traceback.format_exc()}")

    return JSONResponse(
        status_code=500,
        content={
            "error": "Internal Server Error",
            "message": str(exc),
            "type": type(exc).__name__
        }
    )

# Include routers
app.include_router(stp.router)
app.include_router(semistable.router)
app.include_router(asymptotics.router)
app.include_router(simulation.router)


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "version": app_config.output.version,
        "environment": app_config.environment,
    }


@app.get("/config")
async def get_configuration():
    """Active numeric, merge and simulation settings"""
    return {
        "numerics": app_config.numerics.model_dump(),
        "merge": app_config.merge.model_dump(),
        "simulation": app_config.simulation.model_dump(),
        "output": app_config.output.model_dump(),
    }
