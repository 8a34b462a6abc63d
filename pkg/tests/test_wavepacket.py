"""
Tests for packet construction, predicted growth and the ill-posedness
experiment.
"""

import math

import numpy as np
import pytest
import scipy.fft

from src.coefficients.presets import preset_registry
from src.errors import ConfigValidationError, ResolutionError, WindowError
from src.grid.spatial import SpatialGrid, derivative, hs_norm, l2_norm
from src.solver.trajectory import SolveConfig
from src.wavepacket.experiment import (
    PacketRunSettings,
    check_filter_band,
    find_witness,
    frequency_sweep,
    illposedness_experiment,
    run_packet,
    select_packet_eta,
)
from src.wavepacket.packet import (
    PacketSpec,
    build_packet,
    bump,
    bump_spread,
    coherent_eta,
    eta_selection,
    packet_residual,
    predicted_growth,
    residual_integral,
)

E2 = math.exp(2.0)


@pytest.fixture
def grid():
    return SpatialGrid(half_length=16.0, point_count=512)


@pytest.fixture
def fine_grid():
    return SpatialGrid(half_length=20.0, point_count=2048)


# ── Bumps ───────────────────────────────────────────────


def test_bump_normalized_and_supported(fine_grid):
    """bump has unit norm and vanishes outside [x₀ − η, x₀ + η]."""
    u = bump(0.5, 1.0, fine_grid)
    assert l2_norm(u) == pytest.approx(1.0, rel=1e-12)
    outside = np.abs(fine_grid.x - 1.0) >= 0.5
    assert not np.any(u.values[outside])


def test_bump_h1_scales_inversely_with_width(fine_grid):
    """η·‖ψ_η‖_{H¹} stays bounded as η shrinks."""
    scaled = [eta * hs_norm(bump(eta, 0.0, fine_grid), 1.0) for eta in (1.0, 0.5, 0.25)]
    assert max(scaled) / min(scaled) < 2.0, f"η·H¹ = {scaled}"


def test_bump_requires_resolution(grid):
    """Fewer than 16 points across the bump is refused."""
    with pytest.raises(ResolutionError):
        bump(0.2, 0.0, grid)


# ── Packet spec ─────────────────────────────────────────


@pytest.mark.parametrize("kwargs", [
    {"x0": 0.0, "xi": 0.5, "eta": 0.1, "N": 1.0},
    {"x0": 0.0, "xi": 4.0, "eta": 1.5, "N": 1.0},
    {"x0": 0.0, "xi": 4.0, "eta": 0.1, "N": 0.0},
    {"x0": 0.0, "xi": 4.0, "eta": 0.1, "N": 1.0, "bump_kind": "gaussian"},
])
def test_packet_spec_validation(kwargs):
    """Out-of-range packet parameters are configuration errors."""
    with pytest.raises(ConfigValidationError):
        PacketSpec(**kwargs)


def test_packet_horizon():
    """t_n = N/(3ξ²)."""
    assert PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0).horizon == pytest.approx(6.0 / 768.0)


def test_packet_window_check(grid):
    """Supports reaching into the boundary strip are rejected."""
    with pytest.raises(WindowError):
        PacketSpec(x0=-8.0, xi=16.0, eta=1.0, N=6.0).check_window(grid)
    PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0).check_window(grid)


# ── Packets ─────────────────────────────────────────────


def test_airy_packet_at_rest(grid):
    """For a₃ ≡ 1 the initial packet is a unit-norm bump modulated at ξ."""
    spec = PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0)
    u = build_packet(spec, preset_registry.build("airy"), 0.0, grid)
    assert l2_norm(u) == pytest.approx(1.0, rel=1e-10)
    np.testing.assert_allclose(np.abs(u.values), np.abs(bump(1.0, 0.0, grid).values), atol=1e-12)
    peak = abs(grid.wavenumbers[np.argmax(np.abs(scipy.fft.fft(u.values)))])
    assert peak == pytest.approx(16.0, abs=2 * np.pi / (2 * grid.half_length))


def test_variable_dispersion_packet_norm(grid):
    """‖u‖² = ∫a₃|ψ|² dy lies between min a₃ and max a₃."""
    spec = PacketSpec(x0=2.0, xi=8.0, eta=1.0, N=4.0)
    u = build_packet(spec, preset_registry.build("variable-dispersion"), 0.0, grid)
    assert 1.0 <= l2_norm(u) ** 2 <= 3.0


def test_packet_moves_left(grid):
    """Packets travel to x₀ − 3ξ²t for a₃ ≡ 1."""
    spec = PacketSpec(x0=2.0, xi=4.0, eta=1.0, N=6.0)
    coeffs = preset_registry.build("airy")
    later = build_packet(spec, coeffs, spec.horizon, grid)
    centre = grid.x[np.argmax(np.abs(later.values))]
    assert centre == pytest.approx(2.0 - 6.0, abs=2 * grid.h)


def test_packet_modulus_independent_of_frequency(grid):
    """At t = 0 the frequency only enters the phase."""
    coeffs = preset_registry.build("variable-dispersion", gamma=0.3)
    low = build_packet(PacketSpec(x0=0.0, xi=8.0, eta=1.0, N=6.0), coeffs, 0.0, grid)
    high = build_packet(PacketSpec(x0=0.0, xi=32.0, eta=1.0, N=6.0), coeffs, 0.0, grid)
    np.testing.assert_allclose(np.abs(low.values), np.abs(high.values), atol=1e-12)


def test_anti_diffusion_packet_amplitude(fine_grid):
    """a₂ ≡ 1: |u| = e^{(x₀−x)/3}ψ at t = 0."""
    spec = PacketSpec(x0=2.0, xi=16.0, eta=0.3, N=4.0)
    u = build_packet(spec, preset_registry.build("anti-diffusion-constant"), 0.0, fine_grid)
    expected = np.exp((2.0 - fine_grid.x) / 3.0) * np.abs(bump(0.3, 2.0, fine_grid).values)
    np.testing.assert_allclose(np.abs(u.values), expected, atol=1e-8)


@pytest.mark.parametrize("preset", [
    "airy", "variable-dispersion", "anti-diffusion-constant", "oscillating-diffusion",
])
def test_initial_norm_sandwich(preset):
    """Packets with the default η have ‖u(0)‖ ∈ [1/2, 2]."""
    grid = SpatialGrid(half_length=20.0, point_count=8192)
    coeffs = preset_registry.build(preset)
    eta = eta_selection(coeffs, 2.0, 4.0)
    u = build_packet(PacketSpec(x0=2.0, xi=16.0, eta=eta, N=4.0), coeffs, 0.0, grid)
    assert 0.5 <= l2_norm(u) <= 2.0, f"{preset}: ‖u(0)‖ = {l2_norm(u):.4g}"


def test_airy_packet_conserves_norm(grid):
    """With a₂ ≡ 0 the packet run conserves its norm."""
    spec = PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0)
    traj, tracking = run_packet(spec, preset_registry.build("airy"), grid, PacketRunSettings())
    assert abs(traj.growth_ratio - 1.0) < 1e-6
    assert all(row["predicted"] == 1.0 for row in tracking)


def test_residual_grows_like_frequency(fine_grid):
    """The Airy ansatz leaves a residual of order ξ, not ξ³."""
    coeffs = preset_registry.build("airy")
    norms = [
        l2_norm(packet_residual(PacketSpec(x0=5.0, xi=xi, eta=1.0, N=2.0), coeffs, 0.0, fine_grid))
        for xi in (16.0, 32.0)
    ]
    assert 1.5 < norms[1] / norms[0] < 2.5, f"residual norms {norms}"


def test_residual_integral_positive(grid):
    """∫‖g‖ dt over the horizon is finite and positive."""
    spec = PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0)
    value = residual_integral(spec, preset_registry.build("anti-diffusion-constant"), grid, samples=5)
    assert 0.0 < value < np.inf


# ── Predicted growth ────────────────────────────────────


@pytest.mark.parametrize("overrides,expected", [
    ({"c2": 1.0}, E2),
    ({"c2": 2.0}, math.exp(4.0)),
    ({"c3": 8.0, "c2": 4.0}, E2),
    ({}, 1.0),
])
def test_predicted_growth_constant_coefficients(grid, overrides, expected):
    """exp(N·a₂/(3a₃^{2/3})) at the horizon for constant coefficients."""
    spec = PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0)
    coeffs = preset_registry.build("airy", **overrides)
    assert predicted_growth(spec, coeffs, spec.horizon, grid) == pytest.approx(expected, rel=1e-8)


def test_predicted_growth_limits(grid):
    """No growth at t = 0; travelling past N is an error."""
    spec = PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0)
    coeffs = preset_registry.build("anti-diffusion-constant")
    assert predicted_growth(spec, coeffs, 0.0, grid) == 1.0
    with pytest.raises(WindowError):
        predicted_growth(spec, coeffs, 2.0 * spec.horizon, grid)


@pytest.mark.parametrize("x0", [-4.0, 0.0, 1.5, 5.0])
def test_predicted_growth_bounded_for_oscillating_diffusion(grid, x0):
    """a₂ = cos x: the exponent never exceeds 2/3."""
    spec = PacketSpec(x0=x0, xi=16.0, eta=1.0, N=6.0)
    coeffs = preset_registry.build("oscillating-diffusion")
    for t in np.linspace(0.0, spec.horizon, 7):
        assert predicted_growth(spec, coeffs, float(t), grid) <= math.exp(2.0 / 3.0) + 1e-12


def test_doubling_frequency_quarters_horizon(grid):
    """Doubling ξ shortens t_n fourfold and leaves the growth at t_n unchanged."""
    coeffs = preset_registry.build("anti-diffusion-constant")
    low = PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0)
    high = PacketSpec(x0=0.0, xi=32.0, eta=1.0, N=6.0)
    assert high.horizon == pytest.approx(low.horizon / 4.0)
    assert predicted_growth(high, coeffs, high.horizon, grid) == pytest.approx(
        predicted_growth(low, coeffs, low.horizon, grid), rel=1e-10,
    )


@pytest.mark.parametrize("c2,expected", [(0.0, 0.3), (1.0, 0.1), (10.0, 0.01)])
def test_eta_selection(c2, expected):
    """η = min(0.3, 0.1/sup|c₂|)."""
    coeffs = preset_registry.build("airy", c2=c2)
    assert eta_selection(coeffs, 0.0, 6.0) == pytest.approx(expected)


def test_eta_selection_floor():
    """A resolvable floor overrides a too-narrow η."""
    coeffs = preset_registry.build("airy", c2=10.0)
    assert eta_selection(coeffs, 0.0, 6.0, min_eta=0.05) == pytest.approx(0.05)
    with pytest.raises(ConfigValidationError):
        eta_selection(coeffs, 0.0, 6.0, tolerance=0.9)


def test_bump_spread_matches_derivative_norm(fine_grid):
    """σ₀ = ‖ψ₀′‖/‖ψ₀‖ agrees with the differentiated unit bump."""
    psi = bump(1.0, 0.0, fine_grid)
    assert bump_spread() == pytest.approx(l2_norm(derivative(psi, 1)), rel=1e-3)


def test_coherent_eta_scaling():
    """The spread floor vanishes without c₂, grows with N and shrinks with ξ."""
    assert coherent_eta(preset_registry.build("airy"), 0.0, 6.0, 16.0) == 0.0
    coeffs = preset_registry.build("anti-diffusion-constant")
    base = coherent_eta(coeffs, 0.0, 6.0, 16.0)
    assert base == pytest.approx(0.25 * bump_spread() / math.sqrt(math.log(1.1)))
    assert coherent_eta(coeffs, 0.0, 6.0, 32.0) == pytest.approx(base / 2)
    assert coherent_eta(coeffs, 0.0, 3.0, 16.0) == pytest.approx(base / 2)
    assert coherent_eta(coeffs, 0.0, 6.0, 16.0, tolerance=0.3) < base


# ── Growth law & ill-posedness ──────────────────────────


def test_growth_law():
    """a₂ ≡ 1, ξ = 16, N = 6 with the selected η: ‖u(t_n)‖/‖u(0)‖ ∈ [e²/2, 2e²]."""
    grid = SpatialGrid(half_length=32.0, point_count=1024)
    coeffs = preset_registry.build("anti-diffusion-constant")
    run = PacketRunSettings()
    eta = select_packet_eta(coeffs, grid, 0.0, 6.0, run)
    floor = coherent_eta(coeffs, 0.0, 6.0, 16.0)
    assert floor > eta_selection(coeffs, 0.0, 6.0)
    assert eta == pytest.approx(min(1.0, eta_selection(coeffs, 0.0, 6.0, min_eta=floor)))
    spec = PacketSpec(x0=0.0, xi=16.0, eta=eta, N=6.0)
    traj, tracking = run_packet(spec, coeffs, grid, run)
    assert traj.completed, f"aborted at t={traj.abort_time}"
    assert traj.config.monitor_boundary
    assert traj.filtered
    final = tracking[-1]
    assert final["t"] == pytest.approx(spec.horizon)
    assert final["predicted"] == pytest.approx(E2, rel=1e-8)
    assert E2 / 2 <= final["observed"] <= 2 * E2, f"observed {final['observed']:.4g}"
    assert all(0.5 <= row["ratio"] <= 2.0 for row in tracking), (
        f"tracking ratios {[round(row['ratio'], 3) for row in tracking]}"
    )


def test_packet_above_filter_band_is_rejected(grid):
    """A carrier above the kept band of the filter cannot be launched."""
    spec = PacketSpec(x0=0.0, xi=32.0, eta=1.0, N=6.0)
    with pytest.raises(ResolutionError):
        run_packet(spec, preset_registry.build("anti-diffusion-constant"), grid, PacketRunSettings())


def test_filter_band_check_passes_inside_band(grid):
    """ξ = 16 sits below the roll-off on h = 1/16; the carrier equals ξ for a₃ ≡ 1."""
    config = SolveConfig(dt=1e-4, T=1e-3)
    spec = PacketSpec(x0=0.0, xi=16.0, eta=1.0, N=6.0)
    carrier = check_filter_band(spec, preset_registry.build("anti-diffusion-constant"), grid, config)
    assert carrier == pytest.approx(16.0)
    assert carrier < (1.0 - config.spectral_taper) * config.spectral_cutoff * grid.nyquist


def test_illposedness_witness_and_verdict():
    """a₂ ≡ 1 yields a witness reaching 16n and a passing verdict."""
    grid = SpatialGrid(half_length=32.0, point_count=1024)
    run = PacketRunSettings(eta=1.0, steps_per_horizon=400, record_every=20, residual_samples=5)
    report = illposedness_experiment(
        preset_registry.build("anti-diffusion-constant"), 2, (-4.0, 16.0), grid, run,
    )
    assert report.witness_found
    assert report.witness.value >= report.target * (1 - 1e-9)
    assert report.witness.N == pytest.approx(3.0 * math.log(32.0), abs=2 * grid.h)
    assert report.valid
    assert report.verdict, report.summary()
    data = report.to_dict()
    assert data["target"] == 32.0
    assert data["residualIntegral"] > 0.0
    assert data["ratioRHSBound"] > 0.0


@pytest.mark.parametrize("preset", ["oscillating-diffusion", "airy", "good-diffusion"])
def test_bounded_mizohata_has_no_witness(preset):
    """Bounded or decreasing Mizohata integrals produce no witness."""
    grid = SpatialGrid(half_length=32.0, point_count=1024)
    report = illposedness_experiment(preset_registry.build(preset), 2, (-4.0, 16.0), grid)
    assert not report.witness_found
    assert not report.valid
    assert not report.verdict
    assert "No witness" in report.summary()


def test_witness_respects_search_window():
    """Witness endpoints stay inside the search window."""
    grid = SpatialGrid(half_length=32.0, point_count=1024)
    _, witness = find_witness(preset_registry.build("anti-diffusion-constant"), 1,
                              (-4.0, 16.0), grid, PacketRunSettings())
    assert witness is not None
    assert -4.0 <= witness.endpoint < witness.x0 <= 16.0


# ── Frequency families ──────────────────────────────────


@pytest.mark.slow
def test_anti_diffusion_grows_at_every_frequency():
    """a₂ ≡ 1: ratio at t_n ≥ 3 for ξ ∈ {8, 16, 32} while t_n shrinks like ξ⁻²."""
    coeffs = preset_registry.build("anti-diffusion-constant")
    rows = []
    for xi in (8.0, 16.0, 32.0):
        grid = SpatialGrid(half_length=32.0, point_count=int(64 * xi))
        rows += frequency_sweep(coeffs, [xi], grid, x0=0.0, eta=1.0, N=6.0)
    for row in rows:
        assert row.completed, f"ξ={row.xi}: boundary abort"
        assert row.final_ratio >= 3.0, f"ξ={row.xi}: ratio {row.final_ratio:.3g}"
    horizons = [row.horizon for row in rows]
    assert horizons == pytest.approx([6.0 / (3.0 * xi**2) for xi in (8.0, 16.0, 32.0)])


@pytest.mark.slow
def test_oscillating_diffusion_stays_bounded():
    """a₂ = cos x: sup_{t ≤ 0.1} ratio ≤ 4 uniformly in ξ."""
    grid = SpatialGrid(half_length=16.0 * np.pi, point_count=4096)
    run = PacketRunSettings(monitor_boundary=False, steps_per_horizon=1000, record_every=20)
    rows = frequency_sweep(preset_registry.build("oscillating-diffusion"), [8.0, 16.0, 32.0],
                           grid, x0=0.0, eta=1.0, T=0.1, run=run)
    for row in rows:
        assert row.growth_ratio <= 4.0, f"ξ={row.xi}: sup ratio {row.growth_ratio:.3g}"


@pytest.mark.slow
def test_airy_local_smoothing_signature():
    """Time-integrated weighted H¹ stays flat in ξ while sup H¹ grows like ξ²."""
    grid = SpatialGrid(half_length=120.0, point_count=8192)
    xis = [8.0, 16.0, 32.0]
    rows = frequency_sweep(preset_registry.build("airy"), xis, grid, x0=0.0, eta=1.0, T=0.01)
    assert all(row.completed for row in rows)
    smoothing = [row.smoothing_ratio for row in rows]
    assert max(smoothing) / min(smoothing) < 4.0, f"smoothing ratios {smoothing}"
    exponent = np.polyfit(np.log(xis), np.log([row.sup_h1_ratio for row in rows]), 1)[0]
    assert exponent == pytest.approx(2.0, abs=0.3)
