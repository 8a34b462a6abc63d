"""
KdV Lab — Configuration via Pydantic Settings.

Global numerical defaults are loaded from environment variables or a .env
file. Per-experiment parameters live in YAML files (see src/runner/config.py).
"""

from __future__ import annotations

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application-wide settings loaded from env / .env."""

    # ── General ──────────────────────────────────────────────
    app_name: str = "KdV Lab"
    log_level: str = "info"
    output_dir: str = Field(
        default="results/", description="Directory receiving report.json / norms.csv",
    )
    threads: int = Field(
        default=1, ge=1, description="Concurrent experiments during a sweep",
    )

    # ── Presets & Experiments ────────────────────────────────
    presets_dir: str = Field(
        default="presets/", description="Directory with YAML coefficient presets",
    )
    experiments_dir: str = Field(
        default="experiments/", description="Directory with YAML experiment configs",
    )

    # ── Coefficients ─────────────────────────────────────────
    degeneracy_floor: float = Field(
        default=1e-8, gt=0, description="Smallest admissible |a₃| on a window",
    )
    derivative_tolerance: float = Field(
        default=1e-4, gt=0, description="Max relative mismatch of derivative evaluators",
    )

    # ── Solver ───────────────────────────────────────────────
    smoothing_delta: float = Field(
        default=0.75, gt=0.5, description="Weight exponent δ of the smoothing seminorm",
    )
    boundary_margin: float = Field(
        default=0.1, gt=0, lt=0.5, description="Fraction of 2L watched at each end",
    )
    boundary_initial_limit: float = Field(
        default=1e-8, description="Max boundary-mass fraction accepted for u₀",
    )
    boundary_abort_limit: float = Field(
        default=1e-4, description="Boundary-mass fraction that aborts a solve",
    )
    spectral_cutoff: float = Field(
        default=0.5, gt=0, le=1.0,
        description="Fraction of the Nyquist wavenumber kept by the solver filter",
    )
    spectral_taper: float = Field(
        default=0.2, ge=0, lt=1.0,
        description="Share of the kept band rolled off smoothly when filtering u₀",
    )

    # ── Transform ────────────────────────────────────────────
    bisection_tolerance: float = Field(
        default=1e-10, gt=0, description="Residual target when inverting y(x)",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        allowed = {"debug", "info", "warning", "error", "critical"}
        if v.lower() not in allowed:
            raise ValueError(f"log_level must be one of {allowed}")
        return v.lower()

    model_config = {
        "env_prefix": "KDVLAB_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
    }


# Singleton
settings = Settings()
