"""
KdV Lab — Structural Checks on Coefficients.

Sampled proxies for the non-degeneracy of a₃ and consistency checks for the
derivative evaluators a CoefficientSet carries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.coefficients.model import (
    DERIVATIVES,
    VALIDATION_PARENT,
    CoefficientSet,
    finite_difference,
    sample,
)
from src.config import settings
from src.errors import DegenerateDispersionError, InconsistentDerivativeError

logger = logging.getLogger("kdvlab.coefficients.checks")

MIN_SAMPLE_DENSITY = 8


@dataclass(frozen=True)
class Window:
    """Rectangle [x_lo, x_hi] × [t_lo, t_hi] on which coefficients are sampled."""

    x: tuple[float, float]
    t: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.x[0] < self.x[1]:
            raise ValueError(f"empty x-window {self.x}")
        if self.t[1] < self.t[0]:
            raise ValueError(f"empty t-window {self.t}")

    def x_samples(self, density: float) -> np.ndarray:
        count = max(2, int(np.ceil((self.x[1] - self.x[0]) * density)) + 1)
        return np.linspace(self.x[0], self.x[1], count)

    def t_samples(self, count: int = 5) -> np.ndarray:
        if self.t[0] == self.t[1]:
            return np.array([self.t[0]])
        return np.linspace(self.t[0], self.t[1], count)


@dataclass
class NondegeneracyBounds:
    """Sampled λ ≤ |a₃| ≤ Λ on a window."""

    lam: float
    Lam: float
    window: Window

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "Lambda": self.Lam, "x_window": list(self.window.x),
                "t_window": list(self.window.t)}


@dataclass
class DerivativeReport:
    """Max relative mismatch per derivative evaluator."""

    mismatches: dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4
    fallback: list[str] = field(default_factory=list)

    @property
    def worst(self) -> tuple[Optional[str], float]:
        if not self.mismatches:
            return None, 0.0
        name = max(self.mismatches, key=self.mismatches.get)
        return name, self.mismatches[name]

    @property
    def passed(self) -> bool:
        return self.worst[1] <= self.tolerance

    def to_dict(self) -> dict:
        return {"mismatches": dict(self.mismatches), "tolerance": self.tolerance,
                "fallback": list(self.fallback), "passed": self.passed}


def require_nondegenerate(
    coeffs: CoefficientSet, t: float, x: np.ndarray, floor: Optional[float] = None,
) -> np.ndarray:
    """Sample a₃ at (t, x) and fail unless sign·a₃ ≥ floor everywhere."""
    floor = settings.degeneracy_floor if floor is None else floor
    a3 = coeffs.evaluate("a3", t, x)
    signed = coeffs.sign * a3
    if np.any(signed <= 0.0):
        where = float(np.asarray(x)[np.argmin(signed)])
        raise DegenerateDispersionError(
            "a₃ changes sign or contradicts the declared sign",
            t=t, x=where, declared_sign=coeffs.sign,
        )
    if np.min(signed) < floor:
        raise DegenerateDispersionError(
            f"min |a₃| below floor {floor:g}", t=t, min_abs=float(np.min(signed)),
        )
    return a3


def check_nondegeneracy(
    coeffs: CoefficientSet,
    window: Window,
    sample_density: float = 16.0,
    floor: Optional[float] = None,
) -> NondegeneracyBounds:
    """Sampled (λ, Λ) for |a₃| on the window, confirming constant sign."""
    if sample_density < MIN_SAMPLE_DENSITY:
        raise ValueError(f"sample_density must be >= {MIN_SAMPLE_DENSITY} per unit length")
    x = window.x_samples(sample_density)
    lows, highs = [], []
    for t in window.t_samples():
        a3 = np.abs(require_nondegenerate(coeffs, float(t), x, floor))
        lows.append(a3.min())
        highs.append(a3.max())
    bounds = NondegeneracyBounds(lam=float(min(lows)), Lam=float(max(highs)), window=window)
    logger.debug("Nondegeneracy of %s: λ=%.4g Λ=%.4g", coeffs.name, bounds.lam, bounds.Lam)
    return bounds


def validate_derivatives(
    coeffs: CoefficientSet,
    window: Window,
    tolerance: Optional[float] = None,
    sample_density: float = 16.0,
) -> DerivativeReport:
    """Compare every derivative evaluator against differences of its parent."""
    tolerance = settings.derivative_tolerance if tolerance is None else tolerance
    report = DerivativeReport(
        tolerance=tolerance,
        fallback=sorted(set(DERIVATIVES) - set(coeffs.supplied)),
    )
    x = window.x_samples(sample_density)
    for name, (_, variable, _) in DERIVATIVES.items():
        parent = getattr(coeffs, VALIDATION_PARENT[name])
        reference = finite_difference(parent, variable, 1)
        worst = 0.0
        for t in window.t_samples():
            supplied = sample(getattr(coeffs, name), float(t), x)
            expected = sample(reference, float(t), x)
            scale = max(float(np.max(np.abs(expected))), 1.0)
            worst = max(worst, float(np.max(np.abs(supplied - expected))) / scale)
        report.mismatches[name] = worst

    name, worst = report.worst
    if worst > tolerance:
        raise InconsistentDerivativeError(
            f"derivative evaluator {name} disagrees with its parent "
            f"(relative mismatch {worst:.3g} > {tolerance:g})",
            evaluator=name, mismatch=worst, report=report.to_dict(),
        )
    return report
