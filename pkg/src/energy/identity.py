"""
KdV Lab — Energy Identity.

Checks Re(Lv, v) = ([−a₂ + 3/2·∂xa₃]∂xv, ∂xv) + (b₀v, v) by quadrature and
evaluates the gradient bracket and growth rate of the gauged operator
L_φ = φ⁻¹Lφ + ∂tφ/φ.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.coefficients.model import CoefficientSet, Evaluator
from src.errors import ResolutionError
from src.gauge.profile import GaugeProfile, smoothing_weight
from src.grid.spatial import Field, SpatialGrid, derivative_values, inner, l2_norm, spectral_tail
from src.solver.operator import apply_L

logger = logging.getLogger("kdvlab.energy.identity")

BANDWIDTH_FRACTION = 2 / 3
TAIL_TOLERANCE = 1e-8
RELATIVE_FLOOR = 1e-12


@dataclass
class EnergyReport:
    t: float
    lhs: float
    rhs_grad_term: float
    rhs_zero_term: float
    mismatch: float

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs_grad_term - self.rhs_zero_term

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "lhs": self.lhs,
            "rhsGradTerm": self.rhs_grad_term,
            "rhsZeroTerm": self.rhs_zero_term,
            "mismatch": self.mismatch,
        }


@dataclass
class DissipationReport:
    t: float
    bracket: np.ndarray
    rate: float
    gradient_term: float
    zero_term: float
    b0_sup: float
    bracket_error: float

    @property
    def bound(self) -> float:
        """Grönwall bound 2‖b̃₀‖∞ on the rate per unit ‖v‖²."""
        return 2.0 * self.b0_sup

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "rate": self.rate,
            "gradientTerm": self.gradient_term,
            "zeroTerm": self.zero_term,
            "b0Sup": self.b0_sup,
            "bracketError": self.bracket_error,
        }


def zeroth_order_coefficient(coeffs: CoefficientSet, t: float, grid: SpatialGrid) -> np.ndarray:
    """b₀ = a₀ − ½(∂xa₁ − ∂x²a₂ + ∂x³a₃)."""
    x = grid.x
    return coeffs.evaluate("a0", t, x) - 0.5 * (
        coeffs.evaluate("dx_a1", t, x)
        - coeffs.evaluate("dxx_a2", t, x)
        + coeffs.evaluate("dxxx_a3", t, x)
    )


def _require_resolved(v: Field) -> None:
    tail = spectral_tail(v, BANDWIDTH_FRACTION)
    if tail > TAIL_TOLERANCE:
        raise ResolutionError(
            "field is not resolved below 2/3 of Nyquist",
            tail=tail, tolerance=TAIL_TOLERANCE, points=v.grid.point_count,
        )


def energy_identity_check(v: Field, coeffs: CoefficientSet, t: float) -> EnergyReport:
    """Compare both sides of the energy identity for one field."""
    _require_resolved(v)
    grid = v.grid
    x = grid.x
    Lv = apply_L(v, coeffs, t)
    lhs = inner(Lv, v).real

    dv = derivative_values(v.values, grid, 1)
    weight = -coeffs.evaluate("a2", t, x) + 1.5 * coeffs.evaluate("dx_a3", t, x)
    grad = float(grid.h * np.sum(weight * np.abs(dv) ** 2))
    zero = float(grid.h * np.sum(zeroth_order_coefficient(coeffs, t, grid) * np.abs(v.values) ** 2))

    norm = l2_norm(v)
    scale = max(
        abs(lhs),
        RELATIVE_FLOOR * norm**2 * (1.0 + coeffs.sup_norm(t, x)),
        abs(grad) + abs(zero),
        l2_norm(Lv) * norm,
    )
    mismatch = abs(lhs - grad - zero) / scale if scale > 0 else 0.0
    report = EnergyReport(t=t, lhs=lhs, rhs_grad_term=grad, rhs_zero_term=zero, mismatch=mismatch)
    logger.debug("Energy identity for %s at t=%g: mismatch %.3e", coeffs.name, t, mismatch)
    return report


# ── Gauged operator ──────────────────────────────────────


def gauged_coefficients(coeffs: CoefficientSet, g: GaugeProfile) -> dict[str, np.ndarray]:
    """Coefficients α₀..α₃ of L_φ and the matching b̃₀."""
    t, x = g.t, g.grid.x
    a0, a1, a2, a3 = coeffs.operator_coefficients(t, x)
    da3, d2a3, d3a3 = (coeffs.evaluate(n, t, x) for n in ("dx_a3", "dxx_a3", "dxxx_a3"))
    da2, d2a2 = coeffs.evaluate("dx_a2", t, x), coeffs.evaluate("dxx_a2", t, x)
    da1 = coeffs.evaluate("dx_a1", t, x)
    r, dr, d2r = g.log_derivatives()

    alpha2 = a2 + 3.0 * a3 * r
    alpha1 = a1 + 2.0 * a2 * r + 3.0 * a3 * (dr + r**2)
    alpha0 = (a0 + g.dt_log_phi + a1 * r + a2 * (dr + r**2)
              + a3 * (d2r + 3.0 * r * dr + r**3))
    d2alpha2 = d2a2 + 3.0 * d2a3 * r + 6.0 * da3 * dr + 3.0 * a3 * d2r
    dalpha1 = (da1 + 2.0 * da2 * r + 2.0 * a2 * dr
               + 3.0 * da3 * (dr + r**2) + 3.0 * a3 * (d2r + 2.0 * r * dr))
    b0 = alpha0 - 0.5 * (dalpha1 - d2alpha2 + d3a3)
    return {"alpha0": alpha0, "alpha1": alpha1, "alpha2": alpha2, "alpha3": a3, "b0": b0}


def gauged_dissipation_rate(
    v: Field, coeffs: CoefficientSet, g: GaugeProfile, t: Optional[float] = None,
) -> DissipationReport:
    """Bracket 2a₂ + 6a₃φ'/φ − 3a₃' and d/dt‖v‖² for the gauged unknown."""
    if v.grid != g.grid:
        raise ValueError("field and gauge live on different grids")
    if t is not None and not np.isclose(t, g.t):
        raise ValueError(f"gauge was built at t={g.t}, asked for t={t}")
    grid = g.grid
    x = grid.x
    a2 = coeffs.evaluate("a2", g.t, x)
    a3 = coeffs.evaluate("a3", g.t, x)
    da3 = coeffs.evaluate("dx_a3", g.t, x)
    bracket = 2.0 * a2 + 6.0 * a3 * g.dphi / g.phi - 3.0 * da3
    w, _, _ = smoothing_weight(x, g.delta)
    bracket_error = float(np.max(np.abs(bracket + g.cdelta * w)))

    b0 = gauged_coefficients(coeffs, g)["b0"]
    dv = derivative_values(v.values, grid, 1)
    gradient_term = float(grid.h * np.sum(bracket * np.abs(dv) ** 2))
    zero_term = float(grid.h * np.sum(b0 * np.abs(v.values) ** 2))
    return DissipationReport(
        t=g.t,
        bracket=bracket,
        rate=gradient_term - 2.0 * zero_term,
        gradient_term=gradient_term,
        zero_term=zero_term,
        b0_sup=float(np.max(np.abs(b0))),
        bracket_error=bracket_error,
    )


# ── Trajectory diagnostics ───────────────────────────────


def measured_energy_rates(
    times: Sequence[float],
    snapshots: Sequence[Field],
    coeffs: CoefficientSet,
    forcing: Optional[Evaluator] = None,
) -> list[dict]:
    """Centered d/dt‖v‖² against −2·rhs + 2Re(f, v) at interior snapshots."""
    rows = []
    for k in range(1, len(snapshots) - 1):
        dt = times[k + 1] - times[k - 1]
        measured = (l2_norm(snapshots[k + 1]) ** 2 - l2_norm(snapshots[k - 1]) ** 2) / dt
        v = snapshots[k]
        report = energy_identity_check(v, coeffs, times[k])
        predicted = -2.0 * (report.rhs_grad_term + report.rhs_zero_term)
        if forcing is not None:
            f = Field.from_function(v.grid, lambda x, tk=times[k]: forcing(tk, x), times[k])
            predicted += 2.0 * inner(f, v).real
        rows.append({"t": times[k], "measured": measured, "predicted": predicted})
    return rows
