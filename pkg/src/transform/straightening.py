"""
KdV Lab — Dispersion Straightening.

y(x, t) = ∫₀ˣ a₃(t, x')^{−1/3} dx' with v(y) = a₃^{−1/3}·u turns the
dispersive coefficient into 1. The reduced coefficients follow from the
chain rule with p = a₃^{−1/3} and q = a₃^{1/3}:

    c₂ = a₂p²
    c₁ = a₃(3(q''/q)p + 3(q'/q)p' + p'') + a₂(2(q'/q)p + p') + a₁p + ∂ty
    c₀ = (a₃q''' + a₂q'' + a₁q')/q + a₀ + ∂tq/q
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline, PchipInterpolator

from src.coefficients.checks import require_nondegenerate
from src.coefficients.model import ZERO, CoefficientSet, constant, sample
from src.config import settings
from src.errors import DegenerateDispersionError
from src.grid.spatial import Field, SpatialGrid, l2_norm

logger = logging.getLogger("kdvlab.transform.straightening")

_GAUSS_NODES, _GAUSS_WEIGHTS = leggauss(5)
MAX_BISECTIONS = 80


def _cell_integrals(density: Callable[[np.ndarray], np.ndarray], left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """∫ density over each [left, right] by 5-point Gauss–Legendre."""
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    nodes = mid[:, None] + half[:, None] * _GAUSS_NODES[None, :]
    values = density(nodes.ravel()).reshape(nodes.shape)
    return half * (values @ _GAUSS_WEIGHTS)


@dataclass(frozen=True, eq=False)
class VariableChange:
    """Tabulated y(x), its inverse and the Jacobian at one time."""

    t: float
    x_grid: SpatialGrid
    y_of_x: np.ndarray
    y_grid: SpatialGrid
    x_of_y: np.ndarray
    dydx: np.ndarray
    dydt: np.ndarray
    density: Callable[[np.ndarray], np.ndarray]
    composition_error: float

    def y_at(self, x: np.ndarray) -> np.ndarray:
        """y at arbitrary x inside the x-grid."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nodes = self.x_grid.x
        h = self.x_grid.h
        i = np.clip(np.floor((x - nodes[0]) / h).astype(int), 0, nodes.size - 2)
        return self.y_of_x[i] + _cell_integrals(self.density, nodes[i], x)

    def invert(self, y: np.ndarray, tolerance: Optional[float] = None) -> np.ndarray:
        """x(y) by bisection inside the bracketing cell."""
        tolerance = settings.bisection_tolerance if tolerance is None else tolerance
        y = np.atleast_1d(np.asarray(y, dtype=float))
        nodes = self.x_grid.x
        i = np.clip(np.searchsorted(self.y_of_x, y) - 1, 0, nodes.size - 2)
        lo, hi = nodes[i].copy(), nodes[i + 1].copy()
        guess = PchipInterpolator(self.y_of_x, nodes, extrapolate=True)(y)
        mid = np.clip(guess, lo, hi)
        for _ in range(MAX_BISECTIONS):
            residual = self.y_at(mid) - y
            if np.max(np.abs(residual)) <= tolerance:
                break
            below = residual < 0.0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            mid = 0.5 * (lo + hi)
        return mid

    def round_trip_error(self) -> float:
        """max |x(y(xᵢ)) − xᵢ| over the grid."""
        return float(np.max(np.abs(self.invert(self.y_of_x) - self.x_grid.x)))

    def info(self) -> dict:
        return {
            "t": self.t,
            "y_half_length": self.y_grid.half_length,
            "y_range": [float(self.y_of_x[0]), float(self.y_of_x[-1])],
            "composition_error": self.composition_error,
        }

    def to_csv(self, path: str | Path) -> Path:
        """Write the x-table (x, y, dy/dx, ∂ty) and y-table (y, x) side by side."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y_of_x", "dydx", "dydt", "y", "x_of_y"])
            for row in zip(self.x_grid.x, self.y_of_x, self.dydx, self.dydt, self.y_grid.x, self.x_of_y):
                writer.writerow([f"{v:.17g}" for v in row])
        return path


def straightening_map(
    coeffs: CoefficientSet,
    t: float,
    grid: SpatialGrid,
    tolerance: Optional[float] = None,
    y_grid: Optional[SpatialGrid] = None,
) -> VariableChange:
    """Tabulate y = ∫₀ˣ a₃^{−1/3} and its inverse; a₃ must be positive."""
    if coeffs.sign < 0:
        raise DegenerateDispersionError("straightening needs a₃ > 0; reflect x first", t=t)
    require_nondegenerate(coeffs, t, grid.x)
    tolerance = settings.bisection_tolerance if tolerance is None else tolerance

    def density(x: np.ndarray) -> np.ndarray:
        return sample(coeffs.a3, t, x) ** (-1.0 / 3.0)

    nodes = grid.x
    cells = _cell_integrals(density, nodes[:-1], nodes[1:])
    y_of_x = np.concatenate([[0.0], np.cumsum(cells)])
    y_of_x -= y_of_x[grid.origin_index]

    if coeffs.autonomous:
        dydt = np.zeros_like(nodes)
    else:
        def rate(x: np.ndarray) -> np.ndarray:
            return sample(coeffs.a3, t, x) ** (-4.0 / 3.0) * sample(coeffs.dt_a3, t, x)

        dydt = np.concatenate([[0.0], np.cumsum(_cell_integrals(rate, nodes[:-1], nodes[1:]))])
        dydt = -(dydt - dydt[grid.origin_index]) / 3.0

    if y_grid is None:
        half = float(min(abs(y_of_x[0]), abs(y_of_x[-1])))
        y_grid = SpatialGrid(half_length=half, point_count=grid.point_count)

    partial = VariableChange(
        t=t, x_grid=grid, y_of_x=y_of_x, y_grid=y_grid, x_of_y=np.empty(0),
        dydx=density(nodes), dydt=dydt, density=density, composition_error=np.nan,
    )
    x_of_y = partial.invert(y_grid.x, tolerance)
    error = float(np.max(np.abs(partial.y_at(x_of_y) - y_grid.x)))
    change = VariableChange(
        t=t, x_grid=grid, y_of_x=y_of_x, y_grid=y_grid, x_of_y=x_of_y,
        dydx=partial.dydx, dydt=dydt, density=density, composition_error=error,
    )
    logger.debug("Straightening %s at t=%g: y ∈ [%.4g, %.4g], error %.2e",
                 coeffs.name, t, y_of_x[0], y_of_x[-1], error)
    return change


# ── Field transport ──────────────────────────────────────


def _spline(nodes: np.ndarray, values: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    real = CubicSpline(nodes, values.real, extrapolate=False)
    imag = CubicSpline(nodes, values.imag, extrapolate=False)
    return lambda s: np.nan_to_num(real(s) + 1j * imag(s), nan=0.0)


def pushforward(u: Field, vc: VariableChange) -> Field:
    """v(y) = a₃^{−1/3}·u(x(y)) on the y-grid."""
    if u.grid != vc.x_grid:
        raise ValueError("field does not live on the map's x-grid")
    u_at = _spline(vc.x_grid.x, u.values)
    return Field(vc.y_grid, vc.density(vc.x_of_y) * u_at(vc.x_of_y), u.t)


def pullback(v: Field, vc: VariableChange) -> Field:
    """u(x) = a₃^{1/3}·v(y(x)) on the x-grid; zero where y(x) leaves the y-grid."""
    if v.grid != vc.y_grid:
        raise ValueError("field does not live on the map's y-grid")
    v_at = _spline(vc.y_grid.x, v.values)
    return Field(vc.x_grid, v_at(vc.y_of_x) / vc.dydx, v.t)


def comparability_check(u: Field, vc: VariableChange, coeffs: CoefficientSet) -> dict:
    """‖u‖²_{L²ₓ} against ∫ a₃|v|² dy with v the pushed-forward field."""
    v = pushforward(u, vc)
    a3_y = sample(coeffs.a3, vc.t, vc.x_of_y)
    lhs = l2_norm(u) ** 2
    rhs = float(vc.y_grid.h * np.sum(a3_y * np.abs(v.values) ** 2))
    lam, Lam = float(a3_y.min()), float(a3_y.max())
    v_sq = l2_norm(v) ** 2
    return {
        "x_norm_sq": lhs,
        "weighted_y_norm_sq": rhs,
        "relative_difference": abs(lhs - rhs) / lhs if lhs else 0.0,
        "lower": lam * v_sq,
        "upper": Lam * v_sq,
    }


# ── Reduced coefficients ─────────────────────────────────


def reduced_coefficients(
    coeffs: CoefficientSet,
    t: float,
    vc: VariableChange,
) -> CoefficientSet:
    """Coefficients (1, c₂, c₁, c₀) of the equation for v in y."""

    @lru_cache(maxsize=8)
    def change_at(tt: float) -> VariableChange:
        if coeffs.autonomous or tt == vc.t:
            return vc
        return straightening_map(coeffs, tt, vc.x_grid, y_grid=vc.y_grid)

    @lru_cache(maxsize=8)
    def table(tt: float, key: bytes) -> tuple[np.ndarray, ...]:
        y = np.frombuffer(key)
        change = change_at(tt)
        x = change.invert(y)
        a3, da3, d2a3, d3a3 = (sample(getattr(coeffs, n), tt, x)
                               for n in ("a3", "dx_a3", "dxx_a3", "dxxx_a3"))
        a2, a1, a0 = (sample(getattr(coeffs, n), tt, x) for n in ("a2", "a1", "a0"))
        dta3 = sample(coeffs.dt_a3, tt, x)
        p = a3 ** (-1.0 / 3.0)
        g1 = da3 / a3
        g2 = d2a3 / a3
        g3 = d3a3 / a3
        q1 = g1 / 3.0                                   # q'/q
        q2 = g2 / 3.0 - 2.0 * g1**2 / 9.0               # q''/q
        q3 = g3 / 3.0 - 2.0 * g1 * g2 / 3.0 + 10.0 * g1**3 / 27.0
        dp = -p * g1 / 3.0
        d2p = p * (-g2 / 3.0 + 4.0 * g1**2 / 9.0)
        dydt = np.interp(x, change.x_grid.x, change.dydt)
        c2 = a2 * p**2
        c1 = a3 * (3.0 * q2 * p + 3.0 * q1 * dp + d2p) + a2 * (2.0 * q1 * p + dp) + a1 * p + dydt
        c0 = a3 * q3 + a2 * q2 + a1 * q1 + a0 + dta3 / (3.0 * a3)
        return c2, c1, c0

    def component(index: int):
        def evaluate(tt: float, y: np.ndarray) -> np.ndarray:
            y = np.asarray(y, dtype=float)
            flat = np.ascontiguousarray(y.ravel())
            return table(float(tt), flat.tobytes())[index].reshape(y.shape)
        return evaluate

    return CoefficientSet(
        a3=constant(1.0),
        dx_a3=ZERO, dxx_a3=ZERO, dxxx_a3=ZERO,
        a2=component(0),
        a1=component(1),
        a0=component(2),
        sign=1,
        autonomous=coeffs.autonomous,
        name=f"{coeffs.name}-reduced",
        params=dict(coeffs.params),
    )


def reduced_forcing(coeffs: CoefficientSet, forcing, vc: VariableChange):
    """g(t, y) = a₃^{−1/3}·f(t, x(y))."""

    def evaluate(tt: float, y: np.ndarray) -> np.ndarray:
        x = vc.invert(y)
        return sample(coeffs.a3, tt, x) ** (-1.0 / 3.0) * np.asarray(forcing(tt, x))

    return evaluate
