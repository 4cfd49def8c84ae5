import os
from dotenv import load_dotenv

load_dotenv()

API_KEY: str = os.getenv("API_KEY", "")
LOG_LEVEL: str = os.getenv("NEF_LOG_LEVEL", "WARNING")

# Numeric tolerances (relative unless noted)
RANK_TOL: float = float(os.getenv("NEF_RANK_TOL", "1e-8"))
RESIDUAL_TOL: float = float(os.getenv("NEF_RESIDUAL_TOL", "1e-9"))
NULL_ENTRY_TOL: float = float(os.getenv("NEF_NULL_ENTRY_TOL", "1e-6"))
PERRON_TOL: float = float(os.getenv("NEF_PERRON_TOL", "1e-12"))
PERRON_MAX_ITER: int = int(os.getenv("NEF_PERRON_MAX_ITER", "100000"))

# Sampling
SAMPLE_RETRIES: int = int(os.getenv("NEF_SAMPLE_RETRIES", "100"))
DEFAULT_SAMPLES: int = int(os.getenv("NEF_DEFAULT_SAMPLES", "100"))
DEFAULT_SEED: int = int(os.getenv("NEF_DEFAULT_SEED", "0"))

# Polytopes: distance (relative to the largest coordinate) within which a point
# counts as lying on a qhull facet before the facet is re-derived exactly
HULL_PLANE_TOL: float = float(os.getenv("NEF_HULL_PLANE_TOL", "1e-9"))
