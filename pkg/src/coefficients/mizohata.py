"""
KdV Lab — Mizohata-Type Condition.

M(x, t) = ∫₀ˣ a₂/|a₃| dy decides between well- and ill-posedness: bounded M
means dispersion outruns anti-diffusion; a diverging increment along the
direction of ray travel yields a geometric-optics witness (x₀, N).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from src.coefficients.checks import require_nondegenerate
from src.coefficients.model import CoefficientSet
from src.grid.spatial import SpatialGrid, cumulative_integral

logger = logging.getLogger("kdvlab.coefficients.mizohata")

DEFAULT_THRESHOLD = 10.0
DEFAULT_DENSITY = 16.0


class Trend(str, Enum):
    BOUNDED = "bounded"
    GROWING = "growing"


class Direction(str, Enum):
    """Direction in which high-frequency packets travel forward in time."""
    LEFT = "left"      # a₃ > 0
    RIGHT = "right"    # a₃ < 0


@dataclass
class Witness:
    """Packet anchor x₀ and travel distance N with amplification exp(ΔM/3)."""

    x0: float
    N: float
    value: float
    direction: Direction = Direction.LEFT

    @property
    def increment(self) -> float:
        return 3.0 * float(np.log(self.value))

    @property
    def endpoint(self) -> float:
        return self.x0 - self.N if self.direction == Direction.LEFT else self.x0 + self.N

    def to_dict(self) -> dict:
        return {"x0": self.x0, "N": self.N, "value": self.value,
                "direction": self.direction.value}


@dataclass
class MizohataReport:
    """Classification of the Mizohata integral over nested windows."""

    t: float
    windows: list[tuple[float, float]]
    sup_by_window: list[float]
    x: np.ndarray
    M: np.ndarray
    trend: Trend
    threshold: float
    witness: Optional[Witness] = None
    notes: list[str] = field(default_factory=list)

    @property
    def sup_abs(self) -> float:
        return self.sup_by_window[-1]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "windows": [list(w) for w in self.windows],
            "sup_by_window": list(self.sup_by_window),
            "sup_abs": self.sup_abs,
            "trend": self.trend.value,
            "threshold": self.threshold,
            "witness": self.witness.to_dict() if self.witness else None,
            "notes": list(self.notes),
        }

    def summary(self) -> str:
        witness = (
            f"x0={self.witness.x0:.3f} N={self.witness.N:.3f} value={self.witness.value:.4g}"
            if self.witness else "none"
        )
        return (
            f"\n{'='*55}\n"
            f"   Mizohata Classification (t={self.t:g})\n"
            f"{'='*55}\n"
            f"  Windows:         {self.windows}\n"
            f"  sup|M|:          {', '.join(f'{s:.4g}' for s in self.sup_by_window)}\n"
            f"  Trend:           {self.trend.value}\n"
            f"  Witness:         {witness}\n"
            f"{'='*55}\n"
        )


def mizohata_integral(coeffs: CoefficientSet, t: float, grid: SpatialGrid) -> np.ndarray:
    """M(xᵢ, t) = ∫₀^{xᵢ} a₂/|a₃|, anchored at M(0) = 0."""
    a3 = require_nondegenerate(coeffs, t, grid.x)
    a2 = coeffs.evaluate("a2", t, grid.x)
    return cumulative_integral(a2 / np.abs(a3), grid)


def window_grid(window: tuple[float, float], density: float = DEFAULT_DENSITY) -> SpatialGrid:
    """Smallest symmetric grid covering the window at the given density."""
    half = max(abs(window[0]), abs(window[1]))
    n = int(np.ceil(2.0 * half * density))
    n += n % 2
    return SpatialGrid(half, max(n, 16))


def largest_increment(M: np.ndarray) -> tuple[int, int, float]:
    """Indices j ≤ i maximizing M[i] − M[j]."""
    running_min = np.minimum.accumulate(M)
    argmins = np.zeros(len(M), dtype=int)
    for i in range(1, len(M)):
        argmins[i] = i if M[i] < running_min[i - 1] else argmins[i - 1]
    gains = M - running_min
    i = int(np.argmax(gains))
    return i, int(argmins[i]), float(gains[i])


def shortest_increment(
    M: np.ndarray, target: float, allowed: Optional[np.ndarray] = None,
) -> Optional[tuple[int, int]]:
    """Pair j < i with the smallest i − j such that M[i] − M[j] ≥ target."""
    n = len(M)
    for shift in range(1, n):
        gains = M[shift:] - M[:-shift]
        ok = gains >= target
        if allowed is not None:
            ok &= allowed[shift:] & allowed[:-shift]
        if np.any(ok):
            # largest gain among the minimal-length candidates
            candidates = np.flatnonzero(ok)
            j = int(candidates[np.argmax(gains[candidates])])
            return j + shift, j
    return None


def witness_from_pair(
    x: np.ndarray, i: int, j: int, gain: float, direction: Direction,
) -> Witness:
    """Witness for the interval [x_j, x_i] oriented along the travel direction."""
    x0 = float(x[i]) if direction == Direction.LEFT else float(x[j])
    return Witness(x0=x0, N=float(x[i] - x[j]), value=float(np.exp(gain / 3.0)),
                   direction=direction)


def classify_condition(
    coeffs: CoefficientSet,
    t: float,
    windows: Sequence[tuple[float, float]],
    threshold: float = DEFAULT_THRESHOLD,
    density: float = DEFAULT_DENSITY,
) -> MizohataReport:
    """
    Heuristic bounded/growing classification of M over nested windows.

    When the sup of |M| grows by more than threshold from the smallest to the
    largest window, the increment M(b) − M(a), a < b, maximized on the
    largest window is reported as a witness.
    """
    if len(windows) < 2:
        raise ValueError("classify_condition needs at least two nested windows")
    windows = [tuple(map(float, w)) for w in windows]

    sups: list[float] = []
    x_table = M_table = np.empty(0)
    for window in windows:
        grid = window_grid(window, density)
        M = mizohata_integral(coeffs, t, grid)
        inside = (grid.x >= window[0]) & (grid.x <= window[1])
        sups.append(float(np.max(np.abs(M[inside]))))
        x_table, M_table = grid.x[inside], M[inside]

    trend = Trend.GROWING if sups[-1] - sups[0] > threshold else Trend.BOUNDED
    report = MizohataReport(
        t=t, windows=windows, sup_by_window=sups, x=x_table, M=M_table,
        trend=trend, threshold=threshold,
        notes=["classification from finite windows is heuristic"],
    )
    if trend == Trend.GROWING:
        direction = Direction.LEFT if coeffs.sign > 0 else Direction.RIGHT
        i, j, gain = largest_increment(M_table)
        report.witness = witness_from_pair(x_table, i, j, gain, direction)
        logger.info(
            "Mizohata integral grows on %s: witness x0=%.3f N=%.3f value=%.4g",
            coeffs.name, report.witness.x0, report.witness.N, report.witness.value,
        )
    return report
