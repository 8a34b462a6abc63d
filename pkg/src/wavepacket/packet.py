"""
KdV Lab — Packet Construction.

Packets of the form

    u = a₃^{1/3} · e^{i(yξ + tξ³)} · exp((1/3)∫ₓ^{x₀} a₂/a₃) · ψ(y + 3ξ²t)

with y the straightened coordinate, their predicted amplitude growth and
the residual g = (∂t + L)u left by the ansatz.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft
from scipy.integrate import quad, trapezoid

from src.coefficients.model import CoefficientSet, sample
from src.config import settings
from src.errors import ConfigValidationError, ResolutionError, WindowError
from src.grid.spatial import Field, SpatialGrid, cumulative_integral, l2_norm
from src.transform.straightening import VariableChange, straightening_map

logger = logging.getLogger("kdvlab.wavepacket.packet")

MIN_BUMP_POINTS = 16
ETA_CAP = 0.3
BUMP_KINDS = ("exponential",)


@dataclass(frozen=True)
class PacketSpec:
    x0: float
    xi: float
    eta: float
    N: float
    bump_kind: str = "exponential"

    def __post_init__(self) -> None:
        if self.xi < 1:
            raise ConfigValidationError("xi must be at least 1", xi=self.xi)
        if not 0 < self.eta <= 1:
            raise ConfigValidationError("eta must lie in (0, 1]", eta=self.eta)
        if self.N <= 0:
            raise ConfigValidationError("travel distance N must be positive", N=self.N)
        if self.bump_kind not in BUMP_KINDS:
            raise ConfigValidationError("unknown bump kind", bump_kind=self.bump_kind)

    @property
    def horizon(self) -> float:
        """t_n = N/(3ξ²)."""
        return self.N / (3.0 * self.xi**2)

    @property
    def support(self) -> tuple[float, float]:
        return self.x0 - self.N - 1.0, self.x0 + 1.0

    def check_window(self, grid: SpatialGrid, margin: Optional[float] = None) -> None:
        margin = settings.boundary_margin if margin is None else margin
        lo, hi = grid.safe_interior(margin)
        a, b = self.support
        if a < lo - 1e-9 or b > hi + 1e-9:
            raise WindowError(
                "packet support leaves the safe interior",
                support=[a, b], interior=[lo, hi],
            )

    def to_dict(self) -> dict:
        return {"x0": self.x0, "xi": self.xi, "eta": self.eta, "N": self.N,
                "t_n": self.horizon, "bump_kind": self.bump_kind}


def bump_profile(z: np.ndarray) -> np.ndarray:
    """exp(−1/(1−z²)) on (−1, 1), zero outside."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def _require_points(count: int, eta: float, grid: SpatialGrid) -> None:
    if count < MIN_BUMP_POINTS:
        raise ResolutionError(
            "bump is not resolved by the grid",
            points=count, required=MIN_BUMP_POINTS, eta=eta, h=grid.h,
        )


def bump(eta: float, x0: float, grid: SpatialGrid) -> Field:
    """η^{−1/2}ψ₀((x−x₀)/η) normalized to discrete L² norm 1."""
    z = (grid.x - x0) / eta
    _require_points(int(np.count_nonzero(np.abs(z) <= 1.0)), eta, grid)
    values = bump_profile(z)
    return Field(grid, values / (np.sqrt(grid.h) * np.linalg.norm(values)))


def _amplitude_exponent(coeffs: CoefficientSet, t: float, grid: SpatialGrid, x0: float) -> np.ndarray:
    """(1/3)∫ₓ^{x₀} a₂/a₃ on the grid."""
    x = grid.x
    ratio = coeffs.evaluate("a2", t, x) / coeffs.evaluate("a3", t, x)
    K = cumulative_integral(ratio, grid)
    return (np.interp(x0, x, K) - K) / 3.0


def build_packet(
    spec: PacketSpec,
    coeffs: CoefficientSet,
    t: float,
    grid: SpatialGrid,
    vc: Optional[VariableChange] = None,
    margin: Optional[float] = None,
) -> Field:
    """Packet at time t; ‖ψ‖ is normalized from the t = 0 layout."""
    spec.check_window(grid, margin)
    vc = straightening_map(coeffs, t, grid) if vc is None else vc
    y, dydx = vc.y_of_x, vc.dydx
    y0 = float(vc.y_at(spec.x0)[0])

    z0 = (y - y0) / spec.eta
    _require_points(int(np.count_nonzero(np.abs(z0) <= 1.0)), spec.eta, grid)
    profile0 = bump_profile(z0)
    scale = 1.0 / np.sqrt(grid.h * np.sum(profile0**2 * dydx) / spec.eta)

    shift = 3.0 * spec.xi**2 * t
    psi = scale * spec.eta ** -0.5 * bump_profile((y + shift - y0) / spec.eta)
    phase = np.exp(1j * (y * spec.xi + t * spec.xi**3))
    amplitude = coeffs.evaluate("a3", t, grid.x) ** (1.0 / 3.0) * np.exp(
        _amplitude_exponent(coeffs, t, grid, spec.x0)
    )
    return Field(grid, amplitude * phase * psi, t)


def predicted_growth(
    spec: PacketSpec,
    coeffs: CoefficientSet,
    t: float,
    grid: SpatialGrid,
    coefficient_time: Optional[float] = None,
    vc: Optional[VariableChange] = None,
) -> float:
    """exp((1/3)∫ c₂ dy) over the stretch [y₀ − 3ξ²t, y₀] travelled by the packet."""
    travel = 3.0 * spec.xi**2 * t
    if travel > spec.N * (1 + 1e-12):
        raise WindowError("packet travelled past its analyzed window", travel=travel, N=spec.N)
    if t == 0:
        return 1.0
    tc = t if coefficient_time is None else coefficient_time
    vc = straightening_map(coeffs, tc, grid) if vc is None else vc
    y0 = float(vc.y_at(spec.x0)[0])
    x_start = float(vc.invert(np.array([y0 - travel]))[0])

    def ratio(s: float) -> float:
        point = np.array([s])
        return float(sample(coeffs.a2, tc, point)[0] / sample(coeffs.a3, tc, point)[0])

    integral, _ = quad(ratio, x_start, spec.x0, limit=200)
    return float(np.exp(integral / 3.0))


def _sup_c2(coeffs: CoefficientSet, x0: float, N: float, t: float, density: float) -> float:
    a, b = x0 - N - 1.0, x0 + 1.0
    x = np.linspace(a, b, max(int(np.ceil((b - a) * density)), 16) + 1)
    c2 = coeffs.evaluate("a2", t, x) * np.abs(coeffs.evaluate("a3", t, x)) ** (-2.0 / 3.0)
    return float(np.max(np.abs(c2)))


def eta_selection(
    coeffs: CoefficientSet,
    x0: float,
    N: float,
    tolerance: float = 0.1,
    t: float = 0.0,
    min_eta: Optional[float] = None,
    density: float = 64.0,
) -> float:
    """Largest η ≤ 0.3 with η·sup|c₂| ≤ tolerance over [x₀−N−1, x₀+1]."""
    if not 0 < tolerance <= 0.5:
        raise ConfigValidationError("eta tolerance must lie in (0, 0.5]", tolerance=tolerance)
    sup = _sup_c2(coeffs, x0, N, t, density)
    eta = ETA_CAP if sup == 0.0 else min(ETA_CAP, tolerance / sup)
    if min_eta is not None and eta < min_eta:
        logger.warning("η=%.3g is below the floor %.3g; using the floor", eta, min_eta)
        eta = min_eta
    return eta


@lru_cache(maxsize=None)
def bump_spread() -> float:
    """‖ψ₀′‖/‖ψ₀‖: the frequency spread of the unit-width bump."""
    z = np.linspace(-1.0, 1.0, 20001)[1:-1]
    psi = bump_profile(z)
    dpsi = psi * (-2.0 * z / (1.0 - z**2) ** 2)
    return float(np.sqrt(trapezoid(dpsi**2, z) / trapezoid(psi**2, z)))


def coherent_eta(
    coeffs: CoefficientSet,
    x0: float,
    N: float,
    xi: float,
    tolerance: float = 0.1,
    t: float = 0.0,
    density: float = 64.0,
) -> float:
    """
    Smallest η whose frequency spread keeps the growth at t_n within tolerance.

    A component ξ + Δk travels 2NΔk/ξ further than the carrier by t_n and
    collects (2N/3ξ)·sup|c₂|·Δk more amplitude exponent. Averaged over the
    spread σ₀/η of ψ this inflates the norm by about exp((that·σ₀/η)²),
    which is held to 1 + tolerance.
    """
    shift = 2.0 * N / (3.0 * xi) * _sup_c2(coeffs, x0, N, t, density) * bump_spread()
    return shift / np.sqrt(np.log1p(tolerance))


# ── Ansatz residual ──────────────────────────────────────


def spectral_apply_L(u: Field, coeffs: CoefficientSet, t: float) -> Field:
    """L(t)u with Fourier derivatives."""
    k = u.grid.wavenumbers
    spectrum = scipy.fft.fft(u.values)
    a0, a1, a2, a3 = coeffs.operator_coefficients(t, u.grid.x)
    values = a0 * u.values
    for order, a in ((1, a1), (2, a2), (3, a3)):
        if np.any(a != 0.0):
            values = values + a * scipy.fft.ifft((1j * k) ** order * spectrum)
    return u.replace(values)


def packet_residual(
    spec: PacketSpec,
    coeffs: CoefficientSet,
    t: float,
    grid: SpatialGrid,
) -> Field:
    """g = ∂tu + Lu for the packet ansatz at time t."""
    tau = 1e-3 / spec.xi**3
    vc_now = straightening_map(coeffs, t, grid)
    if coeffs.autonomous:
        vc_plus = vc_minus = vc_now
    else:
        vc_plus = straightening_map(coeffs, t + tau, grid)
        vc_minus = straightening_map(coeffs, t - tau, grid)
    plus = build_packet(spec, coeffs, t + tau, grid, vc_plus)
    minus = build_packet(spec, coeffs, t - tau, grid, vc_minus)
    u = build_packet(spec, coeffs, t, grid, vc_now)
    dt_u = (plus.values - minus.values) / (2.0 * tau)
    return u.replace(dt_u + spectral_apply_L(u, coeffs, t).values)


def residual_integral(
    spec: PacketSpec, coeffs: CoefficientSet, grid: SpatialGrid, samples: int = 17,
) -> float:
    """∫₀^{t_n} ‖g‖ dt by the trapezoidal rule."""
    times = np.linspace(0.0, spec.horizon, samples)
    norms = [l2_norm(packet_residual(spec, coeffs, float(s), grid)) for s in times]
    return float(trapezoid(norms, times))
