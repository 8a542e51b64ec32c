"""Configuration settings for the St. Petersburg sums laboratory"""

import os
from pydantic import BaseModel


class NumericsConfig(BaseModel):
    """Arithmetic mode, law representation and quadrature configuration"""
    exact_budget: int = int(os.getenv("STP_EXACT_BUDGET", "64"))
    sparse_max_n: int = int(os.getenv("STP_SPARSE_MAX_N", "8"))
    quad_degree: int = int(os.getenv("STP_QUAD_DEGREE", "16"))
    quad_max_refine: int = int(os.getenv("STP_QUAD_MAX_REFINE", "6"))
    default_tol: float = float(os.getenv("STP_TOL", "1e-4"))

    # Fewer atoms than this in one factor selects the shift-and-add kernel
    atom_kernel_max: int = int(os.getenv("STP_ATOM_KERNEL_MAX", "64"))


class MergeConfig(BaseModel):
    """Windows and grids used by the merging distances"""
    x_lo: float = float(os.getenv("STP_MERGE_X_LO", "-6"))
    x_hi: float = float(os.getenv("STP_MERGE_X_HI", "64"))
    grid_step: float = float(os.getenv("STP_MERGE_GRID_STEP", "0.03125"))
    cond_tail_eps: float = float(os.getenv("STP_COND_TAIL_EPS", "1e-10"))
    # limit CDF is inverted at every lattice atom up to this many atoms
    max_direct_points: int = int(os.getenv("STP_MERGE_MAX_DIRECT", "4096"))


class SimulationConfig(BaseModel):
    """Monte Carlo worker configuration"""
    threads: int = int(os.getenv("STP_THREADS", str(os.cpu_count() or 1)))
    chunk_size: int = int(os.getenv("STP_MC_CHUNK", "10000"))
    min_partition: int = int(os.getenv("STP_MIN_PARTITION", "50"))
    default_seed: int = int(os.getenv("STP_SEED", "20130101"))


class OutputConfig(BaseModel):
    """Artifact output configuration"""
    out_dir: str = os.getenv("STP_OUT_DIR", "./out")
    version: str = os.getenv("STP_VERSION", "1.0.0")


class ApiConfig(BaseModel):
    """API server configuration"""
    host: str = os.getenv("API_HOST", "0.0.0.0")
    port: int = int(os.getenv("API_PORT", "8000"))
    log_level: str = os.getenv("LOG_LEVEL", "INFO")


class AppConfig(BaseModel):
    """Main application configuration"""
    numerics: NumericsConfig = NumericsConfig()
    merge: MergeConfig = MergeConfig()
    simulation: SimulationConfig = SimulationConfig()
    output: OutputConfig = OutputConfig()
    api: ApiConfig = ApiConfig()

    # Environment
    environment: str = os.getenv("ENVIRONMENT", "development")
    debug: bool = os.getenv("DEBUG", "false").lower() == "true"


# Global configuration instance
config = AppConfig()


def get_config() -> AppConfig:
    """Get the global configuration instance"""
    return config


def reload_config() -> AppConfig:
    """Reload configuration from environment variables"""
    global config
    config = AppConfig(
        numerics=NumericsConfig(
            exact_budget=int(os.getenv("STP_EXACT_BUDGET", "64")),
            sparse_max_n=int(os.getenv("STP_SPARSE_MAX_N", "8")),
            quad_degree=int(os.getenv("STP_QUAD_DEGREE", "16")),
            quad_max_refine=int(os.getenv("STP_QUAD_MAX_REFINE", "6")),
            default_tol=float(os.getenv("STP_TOL", "1e-4")),
            atom_kernel_max=int(os.getenv("STP_ATOM_KERNEL_MAX", "64")),
        ),
        merge=MergeConfig(
            x_lo=float(os.getenv("STP_MERGE_X_LO", "-6")),
            x_hi=float(os.getenv("STP_MERGE_X_HI", "64")),
            grid_step=float(os.getenv("STP_MERGE_GRID_STEP", "0.03125")),
            cond_tail_eps=float(os.getenv("STP_COND_TAIL_EPS", "1e-10")),
            max_direct_points=int(os.getenv("STP_MERGE_MAX_DIRECT", "4096")),
        ),
        simulation=SimulationConfig(
            threads=int(os.getenv("STP_THREADS", str(os.cpu_count() or 1))),
            chunk_size=int(os.getenv("STP_MC_CHUNK", "10000")),
            min_partition=int(os.getenv("STP_MIN_PARTITION", "50")),
            default_seed=int(os.getenv("STP_SEED", "20130101")),
        ),
        output=OutputConfig(
            out_dir=os.getenv("STP_OUT_DIR", "./out"),
            version=os.getenv("STP_VERSION", "1.0.0"),
        ),
        api=ApiConfig(
            host=os.getenv("API_HOST", "0.0.0.0"),
            port=int(os.getenv("API_PORT", "8000")),
            log_level=os.getenv("LOG_LEVEL", "INFO"),
        ),
        environment=os.getenv("ENVIRONMENT", "development"),
        debug=os.getenv("DEBUG", "false").lower() == "true",
    )
    return config
