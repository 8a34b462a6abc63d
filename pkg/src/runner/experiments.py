"""
KdV Lab — Experiment Dispatch.

Turns a validated ExperimentConfig into module calls and collects a
JSON-ready report, the trajectory (when one was computed) and the list of
failed pass criteria.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from src.coefficients.checks import Window, check_nondegeneracy, validate_derivatives
from src.coefficients.mizohata import classify_condition
from src.coefficients.model import CoefficientSet
from src.coefficients.presets import preset_registry
from src.energy.identity import energy_identity_check, gauged_dissipation_rate, measured_energy_rates
from src.gauge.profile import build_gauge, corrected_mizohata_identity, gauge_ode_residual
from src.grid.spatial import Field, SpatialGrid
from src.runner.config import ExperimentConfig, ExperimentKind, InitialKind
from src.solver.trajectory import SolveConfig, Trajectory, estimate_growth_constant, solve_ivp
from src.transform.comparison import reduce_and_compare
from src.transform.straightening import VariableChange, straightening_map
from src.transform.symmetries import space_reflection
from src.wavepacket.experiment import PacketRunSettings, frequency_sweep, illposedness_experiment
from src.wavepacket.packet import bump

logger = logging.getLogger("kdvlab.runner.experiments")


@dataclass
class ExperimentOutcome:
    name: str
    kind: ExperimentKind
    report: dict
    trajectory: Optional[Trajectory] = None
    variable_change: Optional[VariableChange] = None
    failures: list[str] = field(default_factory=list)

    @property
    def aborted(self) -> bool:
        return self.trajectory is not None and not self.trajectory.completed

    @property
    def exit_code(self) -> int:
        if self.aborted:
            return 3
        if self.failures:
            return 4
        return 0


# ── Inputs ───────────────────────────────────────────────


def build_grid(config: ExperimentConfig) -> SpatialGrid:
    return SpatialGrid(half_length=config.grid.half_length, point_count=config.grid.points)


def build_coefficients(config: ExperimentConfig) -> CoefficientSet:
    return preset_registry.build(config.coefficients.preset, **config.coefficients.params)


def initial_field(config: ExperimentConfig, grid: SpatialGrid) -> Field:
    """Initial data from the `initial` section; kind=random is seeded."""
    init = config.initial
    x = grid.x
    if init.kind == InitialKind.BUMP:
        base = bump(init.width, init.x0, grid).values
    elif init.kind == InitialKind.GAUSSIAN:
        base = np.exp(-(((x - init.x0) / init.width) ** 2))
    else:
        rng = np.random.default_rng(config.seed)
        base = np.zeros_like(x, dtype=complex)
        span = grid.half_length / 4.0
        for _ in range(init.components):
            center = rng.uniform(-span, span) + init.x0
            width = init.width * rng.uniform(1.0, 3.0)
            k = rng.uniform(-2.0, 2.0)
            amplitude = rng.normal() + 1j * rng.normal()
            base = base + amplitude * np.exp(-(((x - center) / width) ** 2) + 1j * k * x)
    return Field(grid, base * np.exp(1j * init.xi * x))


def solve_config(config: ExperimentConfig) -> SolveConfig:
    s = config.solve
    return SolveConfig(
        dt=s.dt, T=s.T, record_every=s.record_every,
        sobolev_orders=tuple(s.sobolev_orders), smoothing_delta=s.delta,
        filter_mode=s.filter_mode, monitor_boundary=s.monitor_boundary,
        keep_snapshots=config.output.snapshots,
    )


def _window(grid: SpatialGrid, T: float = 0.0) -> Window:
    return Window(x=(-grid.half_length, grid.half_length - grid.h), t=(0.0, T))


def _coefficient_report(coeffs: CoefficientSet, grid: SpatialGrid, T: float = 0.0) -> dict:
    window = _window(grid, T)
    return {
        **coeffs.info(),
        "nondegeneracy": check_nondegeneracy(coeffs, window).to_dict(),
    }


# ── Kinds ────────────────────────────────────────────────


def _run_solve(config: ExperimentConfig, coeffs: CoefficientSet, grid: SpatialGrid) -> ExperimentOutcome:
    traj = solve_ivp(initial_field(config, grid), coeffs, solve_config(config))
    K, slope = estimate_growth_constant(traj)
    outcome = ExperimentOutcome(
        config.name, config.kind,
        report={"trajectory": traj.info(), "growthConstant": K, "growthRateFit": slope},
        trajectory=traj,
    )
    checks = config.checks
    if checks.max_growth_deviation is not None and abs(K - 1.0) > checks.max_growth_deviation:
        outcome.failures.append(f"|growthRatio − 1| = {abs(K - 1.0):.3e} exceeds {checks.max_growth_deviation:g}")
    if checks.max_growth_ratio is not None and K > checks.max_growth_ratio:
        outcome.failures.append(f"growthRatio {K:.6g} exceeds {checks.max_growth_ratio:g}")
    return outcome


def _run_energy_check(config: ExperimentConfig, coeffs: CoefficientSet, grid: SpatialGrid) -> ExperimentOutcome:
    v = initial_field(config, grid)
    T = config.solve.T if config.solve else 0.0
    derivatives = validate_derivatives(coeffs, _window(grid, T))
    identity = energy_identity_check(v, coeffs, 0.0)
    report = {"derivatives": derivatives.to_dict(), "identity": identity.to_dict()}
    traj = None
    if config.solve is not None:
        solve = solve_config(config)
        solve.keep_snapshots = True
        traj = solve_ivp(v, coeffs, solve)
        report["trajectory"] = traj.info()
        report["rates"] = measured_energy_rates(traj.snapshot_times, traj.snapshots, coeffs)
    outcome = ExperimentOutcome(config.name, config.kind, report=report, trajectory=traj)
    if identity.mismatch > config.checks.max_mismatch:
        outcome.failures.append(
            f"energy identity mismatch {identity.mismatch:.3e} exceeds {config.checks.max_mismatch:g}"
        )
    return outcome


def _run_gauge_check(config: ExperimentConfig, coeffs: CoefficientSet, grid: SpatialGrid) -> ExperimentOutcome:
    section = config.gauge
    g = build_gauge(coeffs, section.t, grid, section.delta, section.cdelta)
    residual = gauge_ode_residual(g, coeffs)
    v = initial_field(config, grid)
    dissipation = gauged_dissipation_rate(v, coeffs, g)
    identities = {
        f"{s:g}": corrected_mizohata_identity(coeffs, s, section.t, grid)
        for s in section.sobolev_orders
    }
    outcome = ExperimentOutcome(
        config.name, config.kind,
        report={
            "gauge": g.info(),
            "odeResidual": residual,
            "dissipation": dissipation.to_dict(),
            "correctedMizohataIdentity": identities,
        },
    )
    checks = config.checks
    if residual > checks.max_gauge_residual:
        outcome.failures.append(f"gauge ODE residual {residual:.3e} exceeds {checks.max_gauge_residual:g}")
    if dissipation.bracket_error > checks.max_bracket_error:
        outcome.failures.append(
            f"bracket deviates from −c⟨x⟩^(−2δ) by {dissipation.bracket_error:.3e}"
        )
    return outcome


def _run_classify(config: ExperimentConfig, coeffs: CoefficientSet, grid: SpatialGrid) -> ExperimentOutcome:
    section = config.classify
    report = classify_condition(coeffs, section.t, section.windows, section.threshold)
    outcome = ExperimentOutcome(config.name, config.kind, report={"classification": report.to_dict()})
    expected = config.checks.expect_trend
    if expected is not None and report.trend.value != expected:
        outcome.failures.append(f"trend {report.trend.value!r}, expected {expected!r}")
    return outcome


def _run_reduce_and_compare(config: ExperimentConfig, coeffs: CoefficientSet, grid: SpatialGrid) -> ExperimentOutcome:
    result = reduce_and_compare(initial_field(config, grid), coeffs, solve_config(config))
    positive = space_reflection(coeffs) if result.reflected else coeffs
    outcome = ExperimentOutcome(
        config.name, config.kind,
        report={"reduction": result.to_dict()},
        trajectory=result.direct,
        variable_change=straightening_map(positive, 0.0, grid) if config.output.variable_change else None,
    )
    limit = config.checks.max_relative_difference
    if result.relative_difference > limit:
        outcome.failures.append(f"reduced and direct runs differ by {result.relative_difference:.3e} > {limit:g}")
    if result.reduced.aborted:
        outcome.trajectory = result.reduced
    return outcome


def _run_illposedness(config: ExperimentConfig, coeffs: CoefficientSet, grid: SpatialGrid) -> ExperimentOutcome:
    p = config.packet
    run = PacketRunSettings(
        xi=p.xi, eta=p.eta, eta_tolerance=p.eta_tolerance,
        steps_per_horizon=p.steps_per_horizon, record_every=p.record_every,
        filter_mode=p.filter_mode, monitor_boundary=p.monitor_boundary,
        residual_samples=p.residual_samples,
    )
    result = illposedness_experiment(coeffs, p.n, p.search_window, grid, run)
    outcome = ExperimentOutcome(
        config.name, config.kind, report={"illposedness": result.to_dict()},
        trajectory=result.trajectory,
    )
    if result.witness_found and result.valid and not result.verdict:
        outcome.failures.append(
            f"observed ratio {result.ratio_lhs:.4g} below min(n, predicted/2)"
        )
    expected = config.checks.expect_witness
    if expected is not None and expected != result.witness_found:
        outcome.failures.append(f"witness found: {result.witness_found}, expected {expected}")
    if not result.witness_found:
        logger.warning("No ill-posedness witness for %s", coeffs.name)
    return outcome


def _run_packet_sweep(config: ExperimentConfig, coeffs: CoefficientSet, grid: SpatialGrid) -> ExperimentOutcome:
    s = config.sweep
    run = PacketRunSettings(
        steps_per_horizon=s.steps_per_horizon, record_every=s.record_every,
        filter_mode=s.filter_mode, monitor_boundary=s.monitor_boundary,
    )
    rows = frequency_sweep(coeffs, s.xis, grid, x0=s.x0, eta=s.eta, T=s.T, N=s.N, run=run)
    outcome = ExperimentOutcome(config.name, config.kind, report={"frequencies": [r.to_dict() for r in rows]})
    checks = config.checks
    for row in rows:
        if not row.completed:
            outcome.failures.append(f"ξ={row.xi:g}: aborted on boundary contamination")
        if checks.min_final_ratio is not None and row.final_ratio < checks.min_final_ratio:
            outcome.failures.append(f"ξ={row.xi:g}: final ratio {row.final_ratio:.4g} below {checks.min_final_ratio:g}")
        if checks.max_growth_ratio is not None and row.growth_ratio > checks.max_growth_ratio:
            outcome.failures.append(f"ξ={row.xi:g}: growth ratio {row.growth_ratio:.4g} above {checks.max_growth_ratio:g}")
    return outcome


_HANDLERS: dict[ExperimentKind, Callable[..., ExperimentOutcome]] = {
    ExperimentKind.SOLVE: _run_solve,
    ExperimentKind.ENERGY_CHECK: _run_energy_check,
    ExperimentKind.GAUGE_CHECK: _run_gauge_check,
    ExperimentKind.CLASSIFY: _run_classify,
    ExperimentKind.REDUCE_AND_COMPARE: _run_reduce_and_compare,
    ExperimentKind.ILLPOSEDNESS: _run_illposedness,
    ExperimentKind.PACKET_SWEEP: _run_packet_sweep,
}


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """Execute one validated experiment."""
    grid = build_grid(config)
    coeffs = build_coefficients(config)
    T = config.solve.T if config.solve else 0.0
    logger.info("Running %s (%s) with preset %s", config.name, config.kind.value, coeffs.name)
    outcome = _HANDLERS[config.kind](config, coeffs, grid)
    outcome.report["coefficients"] = _coefficient_report(coeffs, grid, T)
    outcome.report["grid"] = grid.info()
    return outcome
