"""
KdV Lab — Experiment Configuration.

One YAML file describes one experiment: a coefficient preset, a grid, the
initial data and a kind-specific section. Files are validated by pydantic
models; every failure surfaces as a ConfigValidationError naming the
violated invariant.
"""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.config import settings
from src.errors import ConfigValidationError
from src.solver.trajectory import FilterMode

logger = logging.getLogger("kdvlab.runner.config")


class ExperimentKind(str, Enum):
    SOLVE = "solve"
    ENERGY_CHECK = "energy-check"
    GAUGE_CHECK = "gauge-check"
    CLASSIFY = "classify"
    REDUCE_AND_COMPARE = "reduce-and-compare"
    ILLPOSEDNESS = "illposedness"
    PACKET_SWEEP = "packet-sweep"


class InitialKind(str, Enum):
    BUMP = "bump"
    GAUSSIAN = "gaussian"
    RANDOM = "random"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CoefficientSection(_Section):
    preset: str
    params: dict[str, float] = Field(default_factory=dict)


class GridConfig(_Section):
    half_length: float = Field(gt=0, description="L, domain [−L, L)")
    points: int = Field(ge=16, description="n, even")

    @field_validator("points")
    @classmethod
    def validate_points(cls, v: int) -> int:
        if v % 2:
            raise ValueError("points must be even")
        return v


class InitialSection(_Section):
    kind: InitialKind = InitialKind.BUMP
    x0: float = 0.0
    width: float = Field(default=1.0, gt=0)
    xi: float = 0.0
    components: int = Field(default=3, ge=1, description="bumps summed for kind=random")


class SolveSection(_Section):
    dt: float = Field(gt=0)
    T: float = Field(gt=0)
    record_every: int = Field(default=1, ge=1)
    delta: float = Field(default_factory=lambda: settings.smoothing_delta, gt=0.5)
    sobolev_orders: list[float] = Field(default_factory=lambda: [1.0])
    filter_mode: FilterMode = FilterMode.AUTO
    monitor_boundary: bool = True

    @model_validator(mode="after")
    def validate_horizon(self) -> "SolveSection":
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        if self.record_every * self.dt > self.T * (1 + 1e-12):
            raise ValueError("record_every·dt must not exceed T")
        return self


class GaugeSection(_Section):
    delta: float = Field(default_factory=lambda: settings.smoothing_delta, gt=0.5)
    cdelta: int = Field(default=1, ge=0, le=1)
    sobolev_orders: list[float] = Field(default_factory=lambda: [1.0, 2.0])
    t: float = 0.0


class ClassifySection(_Section):
    windows: list[tuple[float, float]] = Field(min_length=2)
    threshold: float = Field(default=10.0, gt=0)
    t: float = 0.0


class PacketSection(_Section):
    n: int = Field(default=2, ge=1)
    search_window: tuple[float, float] = (-40.0, 40.0)
    xi: float = Field(default=16.0, ge=1)
    eta: Optional[float] = Field(default=None, gt=0, le=1)
    eta_tolerance: float = Field(default=0.1, gt=0, le=0.5)
    steps_per_horizon: int = Field(default=200, ge=200)
    record_every: int = Field(default=10, ge=1)
    residual_samples: int = Field(default=9, ge=2)
    filter_mode: FilterMode = FilterMode.AUTO
    monitor_boundary: bool = True


class SweepSection(_Section):
    xis: list[float] = Field(min_length=1)
    x0: float = 0.0
    eta: float = Field(default=1.0, gt=0, le=1)
    T: Optional[float] = Field(default=None, gt=0)
    N: Optional[float] = Field(default=None, gt=0)
    steps_per_horizon: int = Field(default=200, ge=1)
    record_every: int = Field(default=10, ge=1)
    filter_mode: FilterMode = FilterMode.AUTO
    monitor_boundary: bool = True

    @model_validator(mode="after")
    def validate_horizon(self) -> "SweepSection":
        if self.T is None and self.N is None:
            raise ValueError("sweep needs T or N")
        return self


class ChecksSection(_Section):
    """Optional pass criteria; a failed criterion maps to exit status 4."""
    max_growth_deviation: Optional[float] = None
    max_growth_ratio: Optional[float] = None
    min_final_ratio: Optional[float] = None
    max_mismatch: float = 1e-4
    max_gauge_residual: float = 1e-8
    max_bracket_error: float = 1e-8
    max_relative_difference: float = 1e-3
    expect_trend: Optional[str] = None
    expect_witness: Optional[bool] = None


class OutputSection(_Section):
    directory: Optional[str] = None
    snapshots: bool = False
    variable_change: bool = False


REQUIRED_SECTIONS: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.SOLVE: ("solve",),
    ExperimentKind.ENERGY_CHECK: (),
    ExperimentKind.GAUGE_CHECK: (),
    ExperimentKind.CLASSIFY: ("classify",),
    ExperimentKind.REDUCE_AND_COMPARE: ("solve",),
    ExperimentKind.ILLPOSEDNESS: ("packet",),
    ExperimentKind.PACKET_SWEEP: ("sweep",),
}


class ExperimentConfig(_Section):
    name: str
    kind: ExperimentKind
    seed: int = 0
    coefficients: CoefficientSection
    grid: GridConfig
    initial: InitialSection = Field(default_factory=InitialSection)
    solve: Optional[SolveSection] = None
    gauge: GaugeSection = Field(default_factory=GaugeSection)
    classify: Optional[ClassifySection] = None
    packet: Optional[PacketSection] = None
    sweep: Optional[SweepSection] = None
    checks: ChecksSection = Field(default_factory=ChecksSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def validate_sections(self) -> "ExperimentConfig":
        missing = [s for s in REQUIRED_SECTIONS[self.kind] if getattr(self, s) is None]
        if missing:
            raise ValueError(f"kind {self.kind.value!r} requires section(s): {', '.join(missing)}")
        return self


def parse_experiment(raw: Any, source: str = "<memory>") -> ExperimentConfig:
    """Validate an already-loaded mapping."""
    if not isinstance(raw, dict):
        raise ConfigValidationError(f"{source}: experiment file must contain a mapping")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "config"
        raise ConfigValidationError(
            f"{source}: {where}: {first['msg']}",
            errors=[{"loc": ".".join(map(str, e["loc"])), "msg": e["msg"]} for e in exc.errors()],
        ) from None


def load_experiment(path: str | Path) -> ExperimentConfig:
    """Read and validate one YAML experiment file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except OSError as exc:
        raise ConfigValidationError(f"cannot read experiment file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigValidationError(f"{path}: invalid YAML: {exc}") from exc
    config = parse_experiment(raw, str(path))
    logger.debug("Loaded experiment %s (%s) from %s", config.name, config.kind.value, path)
    return config
