"""
KdV Lab — Ill-Posedness Experiment.

Searches the Mizohata integral for a witness (x₀, N) whose predicted
amplification reaches 16n, launches a packet there and checks the observed
growth at t_n = N/(3ξ²). Also runs packet families across frequencies for
the smoothing and well/ill-posed contrasts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from src.coefficients.mizohata import (
    DEFAULT_THRESHOLD,
    Direction,
    Trend,
    Witness,
    classify_condition,
    mizohata_integral,
    shortest_increment,
    witness_from_pair,
)
from src.coefficients.model import CoefficientSet
from src.config import settings
from src.errors import ResolutionError, WindowError
from src.grid.spatial import SpatialGrid, hs_norm, l2_norm
from src.solver.trajectory import FilterMode, SolveConfig, Trajectory, filter_active, solve_ivp
from src.transform.straightening import straightening_map
from src.transform.symmetries import space_reflection
from src.wavepacket.packet import (
    MIN_BUMP_POINTS,
    PacketSpec,
    build_packet,
    coherent_eta,
    eta_selection,
    predicted_growth,
    residual_integral,
)

logger = logging.getLogger("kdvlab.wavepacket.experiment")


@dataclass
class PacketRunSettings:
    """Solver and packet knobs shared by packet experiments."""

    xi: float = 16.0
    eta: Optional[float] = None
    eta_tolerance: float = 0.1
    steps_per_horizon: int = 200
    record_every: int = 10
    filter_mode: FilterMode = FilterMode.AUTO
    monitor_boundary: bool = True
    residual_samples: int = 9
    threshold: float = DEFAULT_THRESHOLD
    margin: float = field(default_factory=lambda: settings.boundary_margin)


@dataclass
class IllposednessReport:
    n: int
    reflected: bool
    classification: dict
    witness: Optional[Witness] = None
    packet: Optional[PacketSpec] = None
    observed_initial_norm: float = 0.0
    observed_final_norm: float = 0.0
    predicted_growth: float = 1.0
    predicted_growth_frozen: Optional[float] = None
    ratio_lhs: float = 0.0
    ratio_rhs_bound: float = 0.0
    residual_integral: float = 0.0
    norm_time_integral: float = 0.0
    tracking: list[dict] = field(default_factory=list)
    aborted: Optional[str] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    @property
    def witness_found(self) -> bool:
        return self.witness is not None

    @property
    def target(self) -> float:
        return 16.0 * self.n

    @property
    def valid(self) -> bool:
        return self.witness_found and self.aborted is None

    @property
    def verdict(self) -> bool:
        """‖u(t_n)‖/‖u(0)‖ ≥ min(n, predicted/2) on a completed run."""
        if not self.valid:
            return False
        return self.ratio_lhs >= min(self.n, self.predicted_growth / 2.0)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "target": self.target,
            "reflected": self.reflected,
            "classification": self.classification,
            "witnessFound": self.witness_found,
            "witness": self.witness.to_dict() if self.witness else None,
            "packet": self.packet.to_dict() if self.packet else None,
            "observedInitialNorm": self.observed_initial_norm,
            "observedFinalNorm": self.observed_final_norm,
            "predictedGrowth": self.predicted_growth,
            "predictedGrowthFrozen": self.predicted_growth_frozen,
            "ratioLHS": self.ratio_lhs,
            "ratioRHSBound": self.ratio_rhs_bound,
            "residualIntegral": self.residual_integral,
            "normTimeIntegral": self.norm_time_integral,
            "normTimeTarget": self.observed_initial_norm / self.n,
            "tracking": self.tracking,
            "aborted": self.aborted,
            "valid": self.valid,
            "verdict": self.verdict,
        }

    def summary(self) -> str:
        lines = [
            "=" * 55,
            f"  Ill-Posedness Experiment (n={self.n})",
            "=" * 55,
        ]
        if not self.witness_found:
            lines += ["  No witness: Mizohata integral stays bounded", "=" * 55]
            return "\n".join(lines)
        lines += [
            f"  Witness:          x0={self.witness.x0:.3f}  N={self.witness.N:.3f}",
            f"  Packet:           ξ={self.packet.xi:g}  η={self.packet.eta:.3g}  t_n={self.packet.horizon:.4g}",
            f"  Predicted growth: {self.predicted_growth:.4g}",
            f"  Observed ratio:   {self.ratio_lhs:.4g}",
            f"  ‖u(t_n)‖/(‖u0‖+∫‖g‖): {self.ratio_rhs_bound:.4g}",
            f"  Verdict:          {'PASS' if self.verdict else 'FAIL'}",
        ]
        if self.aborted:
            lines.append(f"  ABORTED:          {self.aborted}")
        lines.append("=" * 55)
        return "\n".join(lines)


def _max_stretch(coeffs: CoefficientSet, grid: SpatialGrid, x0: float, N: float) -> float:
    x = grid.x
    window = (x >= x0 - N - 1.0) & (x <= x0 + 1.0)
    return float(np.max(np.abs(coeffs.evaluate("a3", 0.0, x[window])) ** (-1.0 / 3.0)))


def _resolvable_eta(coeffs: CoefficientSet, grid: SpatialGrid, x0: float, N: float) -> float:
    return 0.5 * (MIN_BUMP_POINTS + 1) * grid.h * _max_stretch(coeffs, grid, x0, N)


def select_packet_eta(
    coeffs: CoefficientSet, grid: SpatialGrid, x0: float, N: float, run: PacketRunSettings,
) -> float:
    """
    run.eta when pinned, else eta_selection floored at the larger of the width
    the grid resolves and the width whose frequency spread keeps the growth
    law within tolerance at frequency run.xi. Capped at 1.
    """
    if run.eta is not None:
        return min(run.eta, 1.0)
    floor = max(
        _resolvable_eta(coeffs, grid, x0, N),
        coherent_eta(coeffs, x0, N, run.xi, run.eta_tolerance),
    )
    if floor > 1.0:
        logger.warning(
            "η floor %.3g exceeds 1 at ξ=%g, N=%.3g; using η=1", floor, run.xi, N,
        )
    eta = eta_selection(coeffs, x0, N, run.eta_tolerance, min_eta=min(floor, 1.0))
    return min(eta, 1.0)


def check_filter_band(
    spec: PacketSpec, coeffs: CoefficientSet, grid: SpatialGrid, config: SolveConfig,
) -> float:
    """Local carrier wavenumber ξ·sup y′ of the packet, checked against the kept band."""
    carrier = spec.xi * _max_stretch(coeffs, grid, spec.x0, spec.N)
    cutoff = config.spectral_cutoff * grid.nyquist
    if carrier >= cutoff:
        raise ResolutionError(
            "packet frequency lies above the band kept by the spectral filter",
            carrier=carrier, cutoff=cutoff, points=grid.point_count, half_length=grid.half_length,
        )
    if carrier > (1.0 - config.spectral_taper) * cutoff:
        logger.warning(
            "Packet carrier %.4g sits in the roll-off of the filter band (cutoff %.4g); "
            "refine the grid for a clean growth law", carrier, cutoff,
        )
    return carrier


def run_packet(
    spec: PacketSpec,
    coeffs: CoefficientSet,
    grid: SpatialGrid,
    run: PacketRunSettings,
    T: Optional[float] = None,
) -> tuple[Trajectory, list[dict]]:
    """Launch the packet and track ‖u(t)‖/‖u(0)‖ against the predicted law."""
    T = spec.horizon if T is None else T
    u0 = build_packet(spec, coeffs, 0.0, grid, margin=run.margin)
    config = SolveConfig(
        dt=T / run.steps_per_horizon,
        T=T,
        record_every=min(run.record_every, run.steps_per_horizon),
        filter_mode=run.filter_mode,
        monitor_boundary=run.monitor_boundary,
        boundary_margin=run.margin,
    )
    if filter_active(coeffs, u0, config):
        check_filter_band(spec, coeffs, grid, config)
    traj = solve_ivp(u0, coeffs, config)
    vc = straightening_map(coeffs, 0.0, grid) if coeffs.autonomous else None
    tracking = []
    for record in traj.norms:
        if 3.0 * spec.xi**2 * record.t > spec.N * (1 + 1e-12):
            break
        predicted = predicted_growth(spec, coeffs, record.t, grid, vc=vc)
        observed = record.l2 / traj.initial_norm
        tracking.append({"t": record.t, "observed": observed,
                         "predicted": predicted, "ratio": observed / predicted})
    return traj, tracking


def find_witness(
    coeffs: CoefficientSet,
    n: int,
    search_window: tuple[float, float],
    grid: SpatialGrid,
    run: PacketRunSettings,
) -> tuple[dict, Optional[Witness]]:
    """Classification on nested windows plus the shortest on-grid witness."""
    lo, hi = search_window
    windows = [(lo / 4.0, hi / 4.0), (lo, hi)]
    report = classify_condition(coeffs, 0.0, windows, threshold=run.threshold)
    if report.trend != Trend.GROWING:
        return report.to_dict(), None

    x = grid.x
    safe_lo, safe_hi = grid.safe_interior(run.margin)
    allowed = (x >= max(lo, safe_lo + 1.0)) & (x <= min(hi, safe_hi - 1.0))
    M = mizohata_integral(coeffs, 0.0, grid)
    pair = shortest_increment(M, 3.0 * math.log(16.0 * n), allowed)
    if pair is None:
        logger.info("Mizohata integral of %s grows, but no witness fits the grid", coeffs.name)
        return report.to_dict(), None
    i, j = pair
    return report.to_dict(), witness_from_pair(x, i, j, float(M[i] - M[j]), Direction.LEFT)


def illposedness_experiment(
    coeffs: CoefficientSet,
    n: int,
    search_window: tuple[float, float],
    grid: SpatialGrid,
    run: Optional[PacketRunSettings] = None,
) -> IllposednessReport:
    """Witness search, packet launch and growth verdict for target factor n."""
    run = run or PacketRunSettings()
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    reflected = coeffs.sign < 0
    if reflected:
        coeffs = space_reflection(coeffs)
        search_window = (-search_window[1], -search_window[0])

    classification, witness = find_witness(coeffs, n, search_window, grid, run)
    report = IllposednessReport(n=n, reflected=reflected, classification=classification)
    if witness is None:
        return report

    x0, N = witness.x0, witness.N
    spec = PacketSpec(x0=x0, xi=run.xi, eta=select_packet_eta(coeffs, grid, x0, N, run), N=N)
    report.witness, report.packet = witness, spec
    logger.info("Launching packet for %s: %s", coeffs.name, spec.to_dict())

    traj, tracking = run_packet(spec, coeffs, grid, run)
    report.trajectory = traj
    report.tracking = tracking
    report.observed_initial_norm = traj.initial_norm
    report.observed_final_norm = traj.norms[-1].l2
    report.ratio_lhs = report.observed_final_norm / traj.initial_norm
    report.predicted_growth = predicted_growth(spec, coeffs, spec.horizon, grid)
    if not coeffs.autonomous:
        report.predicted_growth_frozen = predicted_growth(
            spec, coeffs, spec.horizon, grid, coefficient_time=0.0,
        )
    if traj.aborted:
        report.aborted = traj.aborted.value
        logger.warning("Packet run for %s aborted; experiment invalid", coeffs.name)
        return report

    report.residual_integral = residual_integral(spec, coeffs, grid, run.residual_samples)
    report.ratio_rhs_bound = report.observed_final_norm / (
        report.observed_initial_norm + report.residual_integral
    )
    times = [r.t for r in traj.norms]
    report.norm_time_integral = float(trapezoid([r.l2 for r in traj.norms], times))
    logger.info("Ill-posedness verdict for %s: %s (ratio %.4g, predicted %.4g)",
                coeffs.name, report.verdict, report.ratio_lhs, report.predicted_growth)
    return report


# ── Frequency families ───────────────────────────────────


@dataclass
class FrequencyRow:
    xi: float
    horizon: float
    growth_ratio: float
    final_ratio: float
    smoothing_ratio: float
    sup_h1_ratio: float
    predicted: Optional[float]
    completed: bool = True

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "horizon": self.horizon,
            "growthRatio": self.growth_ratio,
            "finalRatio": self.final_ratio,
            "smoothingRatio": self.smoothing_ratio,
            "supH1Ratio": self.sup_h1_ratio,
            "predicted": self.predicted,
            "completed": self.completed,
        }


def frequency_sweep(
    coeffs: CoefficientSet,
    xis: Sequence[float],
    grid: SpatialGrid,
    x0: float = 0.0,
    eta: float = 1.0,
    T: Optional[float] = None,
    N: Optional[float] = None,
    run: Optional[PacketRunSettings] = None,
) -> list[FrequencyRow]:
    """
    One packet run per frequency.

    Horizon is T when given, otherwise t_n = N/(3ξ²). The travel distance N
    defaults to the distance the packet covers by T, capped at the room
    left of x₀ inside the safe interior.
    """
    run = run or PacketRunSettings()
    if T is None and N is None:
        raise ValueError("frequency_sweep needs a horizon T or a travel distance N")
    safe_lo, _ = grid.safe_interior(run.margin)
    room = x0 - 1.0 - safe_lo
    if room <= 0:
        raise WindowError("no room left of x0 inside the safe interior", x0=x0)
    rows = []
    for xi in xis:
        travel = N if N is not None else 3.0 * xi**2 * T
        spec = PacketSpec(x0=x0, xi=xi, eta=eta, N=min(travel, room))
        horizon = spec.horizon if T is None else T
        traj, _ = run_packet(spec, coeffs, grid, run, T=horizon)
        u0 = traj.snapshots[0]
        norm_sq = l2_norm(u0) ** 2
        h1 = max(r.hs[1.0] for r in traj.norms) if 1.0 in traj.config.sobolev_orders else hs_norm(u0, 1.0)
        predicted = None
        if 3.0 * xi**2 * traj.final_time <= spec.N * (1 + 1e-12):
            predicted = predicted_growth(spec, coeffs, traj.final_time, grid)
        rows.append(FrequencyRow(
            xi=xi,
            horizon=horizon,
            growth_ratio=traj.growth_ratio,
            final_ratio=traj.norms[-1].l2 / traj.initial_norm,
            smoothing_ratio=traj.smoothing_integral / norm_sq,
            sup_h1_ratio=h1**2 / norm_sq,
            predicted=predicted,
            completed=traj.completed,
        ))
        logger.info("ξ=%g: growth %.4g, smoothing %.4g", xi, traj.growth_ratio, rows[-1].smoothing_ratio)
    return rows
