"""
KdV Lab — Trajectories.

Time integration to a horizon with recorded norms, the accumulated local
smoothing seminorm, boundary-contamination monitoring and growth
constant estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.coefficients.model import CoefficientSet, Evaluator
from src.config import settings
from src.errors import ConfigValidationError, WindowError
from src.grid.spatial import (
    Field,
    boundary_mass_fraction,
    hs_norm,
    l2_norm,
    spectral_cutoff,
    weighted_smoothing_seminorm,
)
from src.solver.stepper import CrankNicolsonStepper

logger = logging.getLogger("kdvlab.solver.trajectory")


class FilterMode(str, Enum):
    AUTO = "auto"   # only when a₂ > 0 somewhere
    ON = "on"
    OFF = "off"


class AbortReason(str, Enum):
    BOUNDARY = "boundary-contamination"


@dataclass
class SolveConfig:
    """Time stepping and diagnostics for one run."""

    dt: float
    T: float
    record_every: int = 1
    forcing: Optional[Evaluator] = None
    sobolev_orders: tuple[float, ...] = (1.0,)
    smoothing_delta: float = field(default_factory=lambda: settings.smoothing_delta)
    boundary_margin: float = field(default_factory=lambda: settings.boundary_margin)
    initial_boundary_limit: float = field(default_factory=lambda: settings.boundary_initial_limit)
    abort_boundary_limit: float = field(default_factory=lambda: settings.boundary_abort_limit)
    monitor_boundary: bool = True
    filter_mode: FilterMode = FilterMode.AUTO
    spectral_cutoff: float = field(default_factory=lambda: settings.spectral_cutoff)
    spectral_taper: float = field(default_factory=lambda: settings.spectral_taper)
    keep_snapshots: bool = True

    def __post_init__(self) -> None:
        self.filter_mode = FilterMode(self.filter_mode)
        self.sobolev_orders = tuple(float(s) for s in self.sobolev_orders)
        if self.dt <= 0 or self.T <= 0:
            raise ConfigValidationError("dt and T must be positive", dt=self.dt, T=self.T)
        if self.dt > self.T:
            raise ConfigValidationError("dt exceeds the horizon", dt=self.dt, T=self.T)
        if self.record_every < 1:
            raise ConfigValidationError("record_every must be at least 1", record_every=self.record_every)
        if self.record_every * self.dt > self.T * (1 + 1e-12):
            raise ConfigValidationError(
                "recording interval exceeds the horizon",
                record_every=self.record_every, dt=self.dt, T=self.T,
            )
        if self.smoothing_delta <= 0.5:
            raise ConfigValidationError("smoothing_delta must exceed 1/2", delta=self.smoothing_delta)
        if not 0.0 < self.spectral_cutoff <= 1.0:
            raise ConfigValidationError("spectral_cutoff must lie in (0, 1]", cutoff=self.spectral_cutoff)
        if not 0.0 <= self.spectral_taper < 1.0:
            raise ConfigValidationError("spectral_taper must lie in [0, 1)", taper=self.spectral_taper)

    @property
    def step_count(self) -> int:
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def effective_dt(self) -> float:
        return self.T / self.step_count


@dataclass
class NormRecord:
    t: float
    l2: float
    hs: dict[float, float]
    smoothing: float
    boundary_mass: float

    def to_row(self, orders: tuple[float, ...]) -> dict:
        row = {"t": self.t, "l2": self.l2}
        row.update({f"hs_{s:g}": self.hs[s] for s in orders})
        row.update({"smoothing": self.smoothing, "boundaryMass": self.boundary_mass})
        return row


@dataclass
class Trajectory:
    """Recorded snapshots and norms of one run."""

    coeffs_name: str
    config: SolveConfig
    times: list[float] = field(default_factory=list)
    snapshots: list[Field] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)
    norms: list[NormRecord] = field(default_factory=list)
    max_l2: float = 0.0
    filtered: bool = False
    aborted: Optional[AbortReason] = None
    abort_time: Optional[float] = None
    factorizations: int = 0

    @property
    def initial_norm(self) -> float:
        return self.norms[0].l2

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    @property
    def final_time(self) -> float:
        return self.times[-1]

    @property
    def growth_ratio(self) -> float:
        """sup_t ‖u(t)‖ / ‖u(0)‖ over every step taken."""
        if self.initial_norm == 0.0:
            return 1.0
        return self.max_l2 / self.initial_norm

    @property
    def smoothing_integral(self) -> float:
        return self.norms[-1].smoothing

    @property
    def completed(self) -> bool:
        return self.aborted is None

    def rows(self) -> list[dict]:
        return [n.to_row(self.config.sobolev_orders) for n in self.norms]

    def info(self) -> dict:
        return {
            "coefficients": self.coeffs_name,
            "steps": self.config.step_count,
            "dt": self.config.effective_dt,
            "T": self.config.T,
            "finalTime": self.final_time,
            "growthRatio": self.growth_ratio,
            "smoothingIntegral": self.smoothing_integral,
            "filtered": self.filtered,
            "aborted": self.aborted.value if self.aborted else None,
            "abortTime": self.abort_time,
            "factorizations": self.factorizations,
        }

    def summary(self) -> str:
        lines = [
            "=" * 55,
            f"  Trajectory — {self.coeffs_name}",
            "=" * 55,
            f"  Horizon:          {self.final_time:.4g} / {self.config.T:.4g}",
            f"  Steps:            {self.config.step_count} (dt={self.config.effective_dt:.3g})",
            f"  Growth ratio:     {self.growth_ratio:.6g}",
            f"  ∫‖⟨x⟩^-δ ∂x u‖²:  {self.smoothing_integral:.6g}",
            f"  Spectral filter:  {'on' if self.filtered else 'off'}",
        ]
        if self.aborted:
            lines.append(f"  ABORTED:          {self.aborted.value} at t={self.abort_time:.4g}")
        lines.append("=" * 55)
        return "\n".join(lines)


def filter_active(coeffs: CoefficientSet, u0: Field, config: SolveConfig) -> bool:
    if config.filter_mode == FilterMode.ON:
        return True
    if config.filter_mode == FilterMode.OFF:
        return False
    x = u0.grid.x
    return coeffs.has_positive_diffusion(u0.t, x) or coeffs.has_positive_diffusion(u0.t + config.T, x)


def solve_ivp(u0: Field, coeffs: CoefficientSet, config: SolveConfig) -> Trajectory:
    """Evolve u0 to u0.t + T, recording every record_every steps."""
    grid = u0.grid
    if config.monitor_boundary:
        initial_mass = boundary_mass_fraction(u0, config.boundary_margin)
        if initial_mass >= config.initial_boundary_limit:
            raise WindowError(
                "initial data is not localized away from the boundary",
                boundary_mass=initial_mass, limit=config.initial_boundary_limit,
            )

    traj = Trajectory(coeffs_name=coeffs.name, config=config)
    traj.filtered = filter_active(coeffs, u0, config)
    if traj.filtered:
        u0 = u0.replace(spectral_cutoff(u0.values, grid, config.spectral_cutoff, config.spectral_taper))

    delta = config.smoothing_delta
    dt = config.effective_dt
    stepper = CrankNicolsonStepper(coeffs, grid)
    accumulated = 0.0
    seminorm_sq = weighted_smoothing_seminorm(u0, delta) ** 2

    def record(u: Field, mass: float) -> None:
        traj.times.append(u.t)
        if config.keep_snapshots or len(traj.snapshots) < 2:
            traj.snapshots.append(u)
            traj.snapshot_times.append(u.t)
        else:
            traj.snapshots[-1] = u
            traj.snapshot_times[-1] = u.t
        traj.norms.append(NormRecord(
            t=u.t,
            l2=l2_norm(u),
            hs={s: hs_norm(u, s) for s in config.sobolev_orders},
            smoothing=accumulated,
            boundary_mass=mass,
        ))

    u = u0
    traj.max_l2 = l2_norm(u)
    record(u, boundary_mass_fraction(u, config.boundary_margin))
    logger.info(
        "Solving %s on %d points: %d steps of %.3g (filter %s)",
        coeffs.name, grid.point_count, config.step_count, dt, "on" if traj.filtered else "off",
    )

    for k in range(1, config.step_count + 1):
        u = stepper.step(u, dt, config.forcing)
        if traj.filtered:
            u = u.replace(spectral_cutoff(u.values, grid, config.spectral_cutoff))
        if k == config.step_count:
            u = u.replace(u.values, u0.t + config.T)
        norm = l2_norm(u)
        traj.max_l2 = max(traj.max_l2, norm)
        previous, seminorm_sq = seminorm_sq, weighted_smoothing_seminorm(u, delta) ** 2
        accumulated += 0.5 * dt * (previous + seminorm_sq)

        mass = boundary_mass_fraction(u, config.boundary_margin)
        if config.monitor_boundary and mass > config.abort_boundary_limit:
            traj.aborted = AbortReason.BOUNDARY
            traj.abort_time = u.t
            record(u, mass)
            logger.warning(
                "Run %s aborted at t=%.4g: boundary mass %.3e exceeds %.1e",
                coeffs.name, u.t, mass, config.abort_boundary_limit,
            )
            break
        if k % config.record_every == 0 or k == config.step_count:
            record(u, mass)

    traj.factorizations = stepper.factorizations
    return traj


def estimate_growth_constant(traj: Trajectory) -> tuple[float, float]:
    """(K, Cfit): sup-norm ratio and least-squares slope of log‖u(t)‖."""
    if not traj.norms:
        raise ValueError("trajectory has no recorded norms")
    K = traj.growth_ratio
    if len(traj.norms) < 2:
        return K, 0.0
    t = np.array([n.t for n in traj.norms])
    norms = np.array([n.l2 for n in traj.norms])
    if np.any(norms <= 0.0):
        return K, 0.0
    slope = float(np.polyfit(t, np.log(norms), 1)[0])
    return K, slope
