"""
KdV Lab — Spatial Grid, Finite Differences and Norms.

A uniform periodic grid on [−L, L) with x = 0 always on-grid, 4th-order
centered stencils for ∂x, ∂x², ∂x³, trapezoidal quadrature, Fourier-multiplier
Sobolev norms and the weighted local-smoothing seminorm.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.fft
from scipy import sparse
from scipy.integrate import cumulative_trapezoid

logger = logging.getLogger("kdvlab.grid.spatial")

# offsets → weights (times h^-order)
STENCILS: dict[int, dict[int, float]] = {
    1: {-2: 1 / 12, -1: -2 / 3, 1: 2 / 3, 2: -1 / 12},
    2: {-2: -1 / 12, -1: 4 / 3, 0: -5 / 2, 1: 4 / 3, 2: -1 / 12},
    3: {-3: 1 / 8, -2: -1.0, -1: 13 / 8, 1: -13 / 8, 2: 1.0, 3: -1 / 8},
}

MIN_POINTS = 16


def japanese_bracket(x: np.ndarray) -> np.ndarray:
    """⟨x⟩ = √(1 + x²)."""
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid xᵢ = −L + i·h, 0 ≤ i < n, h = 2L/n."""

    half_length: float
    point_count: int

    def __post_init__(self) -> None:
        if not self.half_length > 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        if self.point_count < MIN_POINTS or self.point_count % 2:
            raise ValueError(
                f"point_count must be even and >= {MIN_POINTS}, got {self.point_count}"
            )

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / self.point_count

    @property
    def origin_index(self) -> int:
        """Index of the node x = 0."""
        return self.point_count // 2

    @cached_property
    def x(self) -> np.ndarray:
        nodes = -self.half_length + self.h * np.arange(self.point_count)
        nodes[self.origin_index] = 0.0
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Discrete frequencies ξₖ = πk/L in FFT ordering."""
        xi = 2.0 * np.pi * scipy.fft.fftfreq(self.point_count, d=self.h)
        xi.setflags(write=False)
        return xi

    @property
    def nyquist(self) -> float:
        return np.pi / self.h

    def safe_interior(self, margin: float) -> tuple[float, float]:
        """Interval left after removing margin·2L at each end."""
        width = margin * 2.0 * self.half_length
        return -self.half_length + width, self.half_length - width

    def difference_matrix(self, order: int) -> sparse.csr_matrix:
        """Circulant sparse matrix of the order-th derivative stencil."""
        return self._difference_matrices[_check_order(order)]

    @cached_property
    def _difference_matrices(self) -> dict[int, sparse.csr_matrix]:
        n = self.point_count
        mats: dict[int, sparse.csr_matrix] = {}
        for order, stencil in STENCILS.items():
            scale = self.h ** -order
            diagonals, offsets = [], []
            for k, w in stencil.items():
                # wrap-around corner of the same periodic diagonal
                diagonals.append(np.full(n - abs(k), w * scale))
                offsets.append(k)
                if k:
                    diagonals.append(np.full(abs(k), w * scale))
                    offsets.append(k - n if k > 0 else k + n)
            mats[order] = sparse.diags(diagonals, offsets, shape=(n, n), format="csr")
        return mats

    def info(self) -> dict:
        return {"half_length": self.half_length, "point_count": self.point_count, "h": self.h}


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on a grid at time t."""

    grid: SpatialGrid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.point_count,):
            raise ValueError(
                f"values must have shape ({self.grid.point_count},), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: SpatialGrid, func, t: float = 0.0) -> "Field":
        return cls(grid, func(grid.x), t)

    @classmethod
    def zeros(cls, grid: SpatialGrid, t: float = 0.0) -> "Field":
        return cls(grid, np.zeros(grid.point_count, dtype=complex), t)

    def replace(self, values: np.ndarray, t: Optional[float] = None) -> "Field":
        return Field(self.grid, values, self.t if t is None else t)

    def __add__(self, other: "Field") -> "Field":
        return self.replace(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return self.replace(self.values - other.values)

    def __mul__(self, scalar: Union[complex, float, np.ndarray]) -> "Field":
        return self.replace(self.values * scalar)

    __rmul__ = __mul__


def _check_order(order: int) -> int:
    if order not in STENCILS:
        raise ValueError(f"unsupported derivative order {order}; expected 1, 2 or 3")
    return order


# ── Derivatives ──────────────────────────────────────────


def derivative_values(values: np.ndarray, grid: SpatialGrid, order: int) -> np.ndarray:
    """Periodic 4th-order centered ∂xʲ of raw samples."""
    stencil = STENCILS[_check_order(order)]
    out = np.zeros_like(values, dtype=np.result_type(values, float))
    for k, w in stencil.items():
        out = out + w * np.roll(values, -k)
    return out / grid.h ** order


def derivative(u: Field, order: int) -> Field:
    """4th-order centered periodic approximation of ∂xʲu."""
    return u.replace(derivative_values(u.values, u.grid, order))


# ── Quadrature & norms ───────────────────────────────────


def inner(u: Field, w: Field) -> complex:
    """(u, w) = ∫ u·w̄ by the trapezoidal rule."""
    return complex(u.grid.h * np.vdot(w.values, u.values))


def l2_norm(u: Field) -> float:
    return float(np.sqrt(u.grid.h) * np.linalg.norm(u.values))


def hs_norm(u: Field, s: float) -> float:
    """‖⟨ξ⟩^s û‖ through the discrete Fourier transform."""
    if s == 0:
        return l2_norm(u)
    spectrum = scipy.fft.fft(u.values)
    weights = japanese_bracket(u.grid.wavenumbers) ** (2.0 * s)
    n = u.grid.point_count
    return float(np.sqrt(u.grid.h / n * np.sum(weights * np.abs(spectrum) ** 2)))


def weighted_smoothing_seminorm(u: Field, delta: float) -> float:
    """‖⟨x⟩^{−δ}∂x u‖ at a single time."""
    if delta <= 0.5:
        raise ValueError(f"delta must exceed 1/2, got {delta}")
    weighted = japanese_bracket(u.grid.x) ** (-delta) * derivative_values(u.values, u.grid, 1)
    return float(np.sqrt(u.grid.h) * np.linalg.norm(weighted))


def cumulative_integral(samples: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Trapezoidal antiderivative anchored so that F(0) = 0."""
    samples = np.asarray(samples, dtype=float)
    running = cumulative_trapezoid(samples, dx=grid.h, initial=0.0)
    return running - running[grid.origin_index]


# ── Spectral diagnostics ─────────────────────────────────


def spectral_tail(u: Field, fraction: float = 2 / 3) -> float:
    """Share of ‖u‖² carried by |ξ| above fraction·Nyquist."""
    spectrum = np.abs(scipy.fft.fft(u.values)) ** 2
    total = spectrum.sum()
    if total == 0.0:
        return 0.0
    mask = np.abs(u.grid.wavenumbers) > fraction * u.grid.nyquist
    return float(spectrum[mask].sum() / total)


def spectral_cutoff(
    values: np.ndarray, grid: SpatialGrid, fraction: float, taper: float = 0.0,
) -> np.ndarray:
    """
    Zero every Fourier mode with |ξ| > fraction·Nyquist.

    With taper > 0 the top share of the kept band rolls off along a raised
    cosine instead of a hard edge, so the filtered field has no slowly
    decaying ringing away from its support.
    """
    if not 0.0 <= taper < 1.0:
        raise ValueError(f"taper must lie in [0, 1), got {taper}")
    cutoff = fraction * grid.nyquist
    k = np.abs(grid.wavenumbers)
    mask = (k <= cutoff).astype(float)
    if taper > 0.0:
        start = (1.0 - taper) * cutoff
        band = (k > start) & (k <= cutoff)
        mask[band] = 0.5 * (1.0 + np.cos(np.pi * (k[band] - start) / (cutoff - start)))
    return scipy.fft.ifft(scipy.fft.fft(values) * mask)


def boundary_mass_fraction(u: Field, margin: float) -> float:
    """Share of ‖u‖² located within margin·2L of ±L."""
    mass = np.abs(u.values) ** 2
    total = mass.sum()
    if total == 0.0:
        return 0.0
    lo, hi = u.grid.safe_interior(margin)
    edge = (u.grid.x < lo) | (u.grid.x > hi)
    return float(mass[edge].sum() / total)
