"""
KdV Lab — Gauge Profile.

Closed-form gauge

    φ = √(a₃(x)/a₃(0)) · exp(−∫₀ˣ a₂/(3a₃)) · exp(−∫₀ˣ c_δ/(6a₃⟨y⟩^{2δ}))

solving 6a₃φ' = (3a₃' − c_δ⟨x⟩^{−2δ} − 2a₂)φ, the change of unknown v = u/φ,
and the H^s commutator corrections ã₂ = s∂xa₃, ã₁ = s∂xa₂ + s(s−1)/2·∂x²a₃.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.coefficients.checks import require_nondegenerate
from src.coefficients.mizohata import mizohata_integral
from src.coefficients.model import CoefficientSet
from src.config import settings
from src.grid.spatial import Field, SpatialGrid, cumulative_integral

logger = logging.getLogger("kdvlab.gauge.profile")


class GaugeDirection(str, Enum):
    FORWARD = "forward"    # v = u/φ
    INVERSE = "inverse"    # u = φ·v


@dataclass(frozen=True, eq=False)
class GaugeProfile:
    """φ and its first three x-derivatives on a grid at time t."""

    grid: SpatialGrid
    t: float
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    d3phi: np.ndarray
    dt_log_phi: np.ndarray
    delta: float
    cdelta: int

    @property
    def bounds(self) -> tuple[float, float]:
        return float(self.phi.min()), float(self.phi.max())

    def log_derivatives(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """r = φ'/φ with r' and r''."""
        r = self.dphi / self.phi
        dr = self.d2phi / self.phi - r**2
        d2r = self.d3phi / self.phi - 3.0 * r * dr - r**3
        return r, dr, d2r

    def info(self) -> dict:
        lo, hi = self.bounds
        return {"t": self.t, "delta": self.delta, "cdelta": self.cdelta,
                "min_phi": lo, "max_phi": hi}


def smoothing_weight(x: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """w = ⟨x⟩^{−2δ} with w' and w''."""
    r = 1.0 + x**2
    w = r ** (-delta)
    dw = -2.0 * delta * x * r ** (-delta - 1.0)
    d2w = -2.0 * delta * r ** (-delta - 1.0) + 4.0 * delta * (delta + 1.0) * x**2 * r ** (-delta - 2.0)
    return w, dw, d2w


def build_gauge(
    coeffs: CoefficientSet,
    t: float,
    grid: SpatialGrid,
    delta: float | None = None,
    cdelta: int = 1,
) -> GaugeProfile:
    """Sample the closed-form gauge and its analytic x-derivatives."""
    delta = settings.smoothing_delta if delta is None else delta
    if delta <= 0.5:
        raise ValueError(f"delta must exceed 1/2, got {delta}")
    if cdelta not in (0, 1):
        raise ValueError(f"cdelta must be 0 or 1, got {cdelta}")

    x = grid.x
    a3 = require_nondegenerate(coeffs, t, x)
    da3, d2a3, d3a3 = (coeffs.evaluate(n, t, x) for n in ("dx_a3", "dxx_a3", "dxxx_a3"))
    a2, da2, d2a2 = (coeffs.evaluate(n, t, x) for n in ("a2", "dx_a2", "dxx_a2"))
    w, dw, d2w = smoothing_weight(x, delta)
    i0 = grid.origin_index

    log_phi = (
        0.5 * np.log(a3 / a3[i0])
        - cumulative_integral(a2 / (3.0 * a3), grid)
        - cdelta * cumulative_integral(w / (6.0 * a3), grid)
    )
    phi = np.exp(log_phi)
    phi[i0] = 1.0

    # r = A/a₃ with A = a₃'/2 − a₂/3 − c_δ w/6
    A = 0.5 * da3 - a2 / 3.0 - cdelta * w / 6.0
    dA = 0.5 * d2a3 - da2 / 3.0 - cdelta * dw / 6.0
    d2A = 0.5 * d3a3 - d2a2 / 3.0 - cdelta * d2w / 6.0
    r = A / a3
    dr = dA / a3 - A * da3 / a3**2
    d2r = d2A / a3 - 2.0 * dA * da3 / a3**2 - A * d2a3 / a3**2 + 2.0 * A * da3**2 / a3**3

    dta3 = coeffs.evaluate("dt_a3", t, x)
    dta2 = coeffs.evaluate("dt_a2", t, x)
    dt_log_phi = (
        0.5 * dta3 / a3 - 0.5 * dta3[i0] / a3[i0]
        - cumulative_integral(dta2 / (3.0 * a3) - a2 * dta3 / (3.0 * a3**2), grid)
        + cdelta * cumulative_integral(w * dta3 / (6.0 * a3**2), grid)
    )

    profile = GaugeProfile(
        grid=grid, t=t, phi=phi,
        dphi=r * phi,
        d2phi=(dr + r**2) * phi,
        d3phi=(d2r + 3.0 * r * dr + r**3) * phi,
        dt_log_phi=dt_log_phi,
        delta=delta, cdelta=cdelta,
    )
    logger.debug("Gauge for %s at t=%g: φ ∈ [%.4g, %.4g]", coeffs.name, t, *profile.bounds)
    return profile


def gauge_ode_residual(g: GaugeProfile, coeffs: CoefficientSet) -> float:
    """Normalized max |6a₃φ' − (3a₃' − c_δ⟨x⟩^{−2δ} − 2a₂)φ|."""
    x = g.grid.x
    a3 = coeffs.evaluate("a3", g.t, x)
    da3 = coeffs.evaluate("dx_a3", g.t, x)
    a2 = coeffs.evaluate("a2", g.t, x)
    w, _, _ = smoothing_weight(x, g.delta)
    residual = 6.0 * a3 * g.dphi - (3.0 * da3 - g.cdelta * w - 2.0 * a2) * g.phi
    scale = float(np.max(np.abs(g.phi) * (np.abs(a2) + np.abs(da3) + 1.0)))
    return float(np.max(np.abs(residual)) / scale)


def apply_gauge(u: Field, g: GaugeProfile, direction: GaugeDirection | str) -> Field:
    """v = u/φ (forward) or u = φ·v (inverse)."""
    if u.grid != g.grid:
        raise ValueError("field and gauge live on different grids")
    direction = GaugeDirection(direction)
    if direction == GaugeDirection.FORWARD:
        return u.replace(u.values / g.phi)
    return u.replace(u.values * g.phi)


# ── H^s corrections ──────────────────────────────────────


def hs_corrected_coefficients(coeffs: CoefficientSet, s: float) -> CoefficientSet:
    """Add ã₂ = s∂xa₃ to a₂ and ã₁ = s∂xa₂ + s(s−1)/2·∂x²a₃ to a₁."""
    if s == 0:
        return coeffs
    half = s * (s - 1.0) / 2.0
    c = coeffs
    return c.derived(
        name=f"{c.name}+Hs({s:g})",
        params={**c.params, "s": s},
        a2=lambda t, x: c.evaluate("a2", t, x) + s * c.evaluate("dx_a3", t, x),
        dx_a2=lambda t, x: c.evaluate("dx_a2", t, x) + s * c.evaluate("dxx_a3", t, x),
        dxx_a2=lambda t, x: c.evaluate("dxx_a2", t, x) + s * c.evaluate("dxxx_a3", t, x),
        a1=lambda t, x: (c.evaluate("a1", t, x) + s * c.evaluate("dx_a2", t, x)
                         + half * c.evaluate("dxx_a3", t, x)),
        dx_a1=lambda t, x: (c.evaluate("dx_a1", t, x) + s * c.evaluate("dxx_a2", t, x)
                            + half * c.evaluate("dxxx_a3", t, x)),
    )


def correction_only(coeffs: CoefficientSet, s: float) -> CoefficientSet:
    """Coefficient set carrying only ã₂ (and a₃) to test the Mizohata identity."""
    c = coeffs
    return c.derived(
        name=f"{c.name}-correction({s:g})",
        a2=lambda t, x: s * c.evaluate("dx_a3", t, x),
        dx_a2=lambda t, x: s * c.evaluate("dxx_a3", t, x),
        dxx_a2=lambda t, x: s * c.evaluate("dxxx_a3", t, x),
    )


def corrected_mizohata_identity(
    coeffs: CoefficientSet, s: float, t: float, grid: SpatialGrid,
) -> float:
    """Max deviation of ∫₀ˣ ã₂/|a₃| from s·sign(a₃)·log(a₃(x)/a₃(0))."""
    a3 = coeffs.evaluate("a3", t, grid.x)
    M = mizohata_integral(correction_only(coeffs, s), t, grid)
    expected = s * coeffs.sign * np.log(a3 / a3[grid.origin_index])
    return float(np.max(np.abs(M - expected)))
