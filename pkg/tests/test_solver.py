"""
Tests for the Crank–Nicolson stepper and trajectories.
"""

import numpy as np
import pytest

from src.coefficients.presets import preset_registry
from src.errors import ConfigValidationError, StepError, WindowError
from src.grid.spatial import Field, SpatialGrid, l2_norm
from src.solver.operator import apply_L, assemble_operator
from src.solver.stepper import CrankNicolsonStepper, step
from src.solver.trajectory import (
    AbortReason,
    FilterMode,
    SolveConfig,
    estimate_growth_constant,
    solve_ivp,
)
from src.wavepacket.packet import bump


@pytest.fixture
def grid():
    return SpatialGrid(half_length=20.0, point_count=512)


@pytest.fixture
def gaussian(grid):
    return Field.from_function(grid, lambda x: np.exp(-x**2))


def test_apply_L_matches_assembled_matrix(grid, gaussian):
    """apply_L is the assembled sparse operator applied to the samples."""
    coeffs = preset_registry.build("variable-dispersion", gamma=0.5)
    L = assemble_operator(coeffs, 0.0, grid)
    np.testing.assert_allclose(apply_L(gaussian, coeffs, 0.0).values, L @ gaussian.values)


def test_zero_operator_step_is_identity(grid, gaussian):
    """With L = 0 and f = 0 a step leaves u unchanged."""
    coeffs = preset_registry.build("airy", c3=0.0)
    out = step(gaussian, coeffs, None, 0.0, 0.1)
    np.testing.assert_allclose(out.values, gaussian.values)
    assert out.t == pytest.approx(0.1)


def test_airy_step_preserves_norm(grid, gaussian):
    """A CN step with a skew operator is norm-preserving."""
    out = step(gaussian, preset_registry.build("airy"), None, 0.0, 0.01)
    assert l2_norm(out) == pytest.approx(l2_norm(gaussian), rel=1e-12)


def test_forcing_enters_at_midpoint(grid):
    """∂tu = f with u(0) = 0 integrates f exactly when f is linear in t."""
    coeffs = preset_registry.build("airy", c3=0.0)
    out = step(Field.zeros(grid), coeffs, lambda t, x: t * np.ones_like(x), 0.0, 0.2)
    np.testing.assert_allclose(out.values, 0.02)


def test_step_reports_singular_system(grid, gaussian):
    """A singular implicit matrix raises StepError."""
    coeffs = preset_registry.build("airy", c3=0.0, c0=-2.0)
    with pytest.raises(StepError):
        step(gaussian, coeffs, None, 0.0, 1.0)


def test_step_reports_nan(grid, gaussian):
    """Non-finite forcing produces a StepError."""
    with pytest.raises(StepError):
        step(gaussian, preset_registry.build("airy"), lambda t, x: np.full_like(x, np.inf), 0.0, 0.1)


def test_autonomous_factorization_reused(grid, gaussian):
    """Autonomous coefficients factorize once per dt."""
    stepper = CrankNicolsonStepper(preset_registry.build("airy"), grid)
    u = gaussian
    for _ in range(5):
        u = stepper.step(u, 0.01)
    assert stepper.factorizations == 1


def test_time_dependent_factorization_per_step(grid, gaussian):
    """Time-dependent coefficients refactorize every step."""
    stepper = CrankNicolsonStepper(preset_registry.build("modulated-dispersion"), grid)
    u = gaussian
    for _ in range(3):
        u = stepper.step(u, 0.01)
    assert stepper.factorizations == 3


def test_config_validation():
    """dt must not exceed T and recordings must fit the horizon."""
    with pytest.raises(ConfigValidationError):
        SolveConfig(dt=0.2, T=0.1)
    with pytest.raises(ConfigValidationError):
        SolveConfig(dt=0.01, T=0.1, record_every=20)
    with pytest.raises(ConfigValidationError):
        SolveConfig(dt=0.01, T=0.1, smoothing_delta=0.5)


def test_airy_conservation():
    """Airy flow of a wide bump conserves the norm to 1e−6 with the boundary monitored."""
    grid = SpatialGrid(half_length=100.0, point_count=2048)
    traj = solve_ivp(bump(8.0, 20.0, grid), preset_registry.build("airy"),
                     SolveConfig(dt=1e-3, T=1.0, record_every=100))
    assert traj.completed
    assert abs(traj.growth_ratio - 1.0) < 1e-6, f"growth ratio {traj.growth_ratio}"
    assert traj.final_time == pytest.approx(1.0)
    assert traj.smoothing_integral > 0


def test_records_and_rows(grid, gaussian):
    """norms are recorded every record_every steps with fixed columns."""
    config = SolveConfig(dt=0.01, T=0.1, record_every=2, sobolev_orders=(1.0, 2.0))
    traj = solve_ivp(gaussian, preset_registry.build("airy"), config)
    assert len(traj.norms) == 6
    assert list(traj.rows()[0]) == ["t", "l2", "hs_1", "hs_2", "smoothing", "boundaryMass"]
    assert traj.rows()[0]["smoothing"] == 0.0


def test_keep_snapshots_off_keeps_endpoints(grid, gaussian):
    """Without snapshot retention only the first and last fields survive."""
    config = SolveConfig(dt=0.01, T=0.1, keep_snapshots=False)
    traj = solve_ivp(gaussian, preset_registry.build("airy"), config)
    assert len(traj.snapshots) == 2
    assert traj.snapshot_times == pytest.approx([0.0, 0.1])


def test_linearity(grid):
    """Solutions superpose to 1e−10."""
    coeffs = preset_registry.build("variable-dispersion", gamma=-0.5)
    config = SolveConfig(dt=0.01, T=0.1)
    u = Field.from_function(grid, lambda x: np.exp(-x**2))
    w = Field.from_function(grid, lambda x: np.exp(-((x - 2) ** 2)) * 1j)
    a, b = 2.0, -0.5 + 1j
    combined = solve_ivp(u * a + w * b, coeffs, config).final
    separate = solve_ivp(u, coeffs, config).final * a + solve_ivp(w, coeffs, config).final * b
    assert l2_norm(combined - separate) < 1e-10


def test_time_convergence_is_second_order():
    """Halving dt divides the error by about 4."""
    grid = SpatialGrid(half_length=20.0, point_count=512)
    coeffs = preset_registry.build("airy")
    u0 = Field.from_function(grid, lambda x: np.exp(-x**2))

    def final(dt):
        return solve_ivp(u0, coeffs, SolveConfig(dt=dt, T=0.2, record_every=1)).final

    reference = final(1.25e-4)
    e1 = l2_norm(final(2e-3) - reference)
    e2 = l2_norm(final(1e-3) - reference)
    assert 3.5 < e1 / e2 < 4.5, f"error ratio {e1 / e2:.3f}"


def test_initial_boundary_mass_rejected(grid):
    """Data touching the boundary strip is refused."""
    edge = Field.from_function(grid, lambda x: np.exp(-((x - 18.0) ** 2)))
    with pytest.raises(WindowError):
        solve_ivp(edge, preset_registry.build("airy"), SolveConfig(dt=0.01, T=0.1))


def test_boundary_contamination_aborts(grid):
    """Transport into the boundary strip aborts with a truncated trajectory."""
    coeffs = preset_registry.build("airy", c3=0.01, c1=20.0)
    u0 = Field.from_function(grid, lambda x: np.exp(-(x ** 2)))
    traj = solve_ivp(u0, coeffs, SolveConfig(dt=0.01, T=1.0, record_every=10))
    assert traj.aborted == AbortReason.BOUNDARY
    assert traj.abort_time < 1.0
    assert traj.norms[-1].boundary_mass > 1e-4


def test_boundary_monitor_off_runs_to_horizon(grid):
    """With the monitor off the same run wraps around and completes."""
    coeffs = preset_registry.build("airy", c3=0.01, c1=20.0)
    u0 = Field.from_function(grid, lambda x: np.exp(-(x ** 2)))
    traj = solve_ivp(u0, coeffs, SolveConfig(dt=0.01, T=1.0, record_every=10, monitor_boundary=False))
    assert traj.completed
    assert traj.final_time == pytest.approx(1.0)


@pytest.mark.parametrize("name,expected", [("anti-diffusion-constant", True), ("good-diffusion", False)])
def test_filter_auto_follows_diffusion_sign(grid, gaussian, name, expected):
    """The spectral filter engages only where a₂ > 0 somewhere."""
    traj = solve_ivp(gaussian, preset_registry.build(name), SolveConfig(dt=0.01, T=0.02))
    assert traj.filtered is expected


def test_filter_mode_forced(grid, gaussian):
    """filter_mode on/off override the automatic choice."""
    coeffs = preset_registry.build("airy")
    assert solve_ivp(gaussian, coeffs, SolveConfig(dt=0.01, T=0.02, filter_mode=FilterMode.ON)).filtered
    assert not solve_ivp(gaussian, coeffs, SolveConfig(dt=0.01, T=0.02, filter_mode="off")).filtered


def test_growth_constant_of_damped_run(grid, gaussian):
    """a₀ = 1 decays like e^{−t}: K = 1 and fitted slope −1."""
    coeffs = preset_registry.build("airy", c0=1.0)
    traj = solve_ivp(gaussian, coeffs, SolveConfig(dt=0.01, T=0.5, record_every=5))
    K, slope = estimate_growth_constant(traj)
    assert K == pytest.approx(1.0)
    assert slope == pytest.approx(-1.0, rel=1e-3)


def test_growth_constant_requires_records():
    """An empty trajectory has no growth constant."""
    from src.solver.trajectory import Trajectory

    with pytest.raises(ValueError):
        estimate_growth_constant(Trajectory(coeffs_name="empty", config=SolveConfig(dt=0.1, T=1.0)))
