import logging
import os
from typing import List

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


def _origins() -> List[str]:
    raw = os.getenv("VALLAB_ALLOWED_ORIGINS", "http://localhost:3000")
    return [origin.strip() for origin in raw.split(",") if origin.strip()]


class Settings(BaseModel):
    quad_order: int = Field(default_factory=lambda: int(os.getenv("VALLAB_QUAD_ORDER", "16")))
    tol: float = Field(default_factory=lambda: float(os.getenv("VALLAB_TOL", "1e-8")))
    seed: int = Field(default_factory=lambda: int(os.getenv("VALLAB_SEED", "0")))
    # residual bound of the degree-n fit in t -> phi(tK + x), relative to max |phi|
    poly_tol: float = Field(default_factory=lambda: float(os.getenv("VALLAB_POLY_TOL", "1e-7")))
    # |xi| beyond which fiber envelopes are treated as zero
    fiber_radius: float = Field(default_factory=lambda: float(os.getenv("VALLAB_FIBER_RADIUS", "6.0")))
    perturbation_denominator: int = Field(
        default_factory=lambda: int(os.getenv("VALLAB_PERTURBATION_DENOMINATOR", "64")))
    perturbation_retries: int = Field(
        default_factory=lambda: int(os.getenv("VALLAB_PERTURBATION_RETRIES", "32")))
    mc_samples: int = Field(default_factory=lambda: int(os.getenv("VALLAB_MC_SAMPLES", "10000000")))
    workers: int = Field(default_factory=lambda: int(os.getenv("VALLAB_WORKERS", "4")))
    log_level: str = Field(default_factory=lambda: os.getenv("VALLAB_LOG_LEVEL", "INFO"))
    allowed_origins: List[str] = Field(default_factory=_origins)
    port: int = Field(default_factory=lambda: int(os.getenv("PORT", "8000")))


settings = Settings()

logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.INFO))
