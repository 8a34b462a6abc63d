"""
KdV Lab — Crank–Nicolson Stepper.

Advances ∂tu + L(t)u = f by

    (I + Δt/2·L(t+Δt)) u⁺ = (I − Δt/2·L(t)) u + Δt·f(t+Δt/2)

with a sparse LU factorization. For autonomous coefficients the
factorization is reused while Δt stays fixed.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from src.coefficients.model import CoefficientSet, Evaluator
from src.errors import StepError
from src.grid.spatial import Field, SpatialGrid
from src.solver.operator import assemble_operator

logger = logging.getLogger("kdvlab.solver.stepper")


class CrankNicolsonStepper:
    """Holds the operator factorizations for one coefficient set and grid."""

    def __init__(self, coeffs: CoefficientSet, grid: SpatialGrid) -> None:
        self.coeffs = coeffs
        self.grid = grid
        self._identity = sparse.identity(grid.point_count, format="csc")
        self._cache_key: Optional[tuple] = None
        self._lu = None
        self._explicit: Optional[sparse.csr_matrix] = None
        self._factorizations = 0

    @property
    def factorizations(self) -> int:
        return self._factorizations

    def _prepare(self, t: float, dt: float) -> None:
        key = (dt,) if self.coeffs.autonomous else (t, dt)
        if key == self._cache_key:
            return
        L_new = assemble_operator(self.coeffs, t + dt, self.grid)
        L_old = L_new if self.coeffs.autonomous else assemble_operator(self.coeffs, t, self.grid)
        implicit = sparse.csc_matrix(self._identity + 0.5 * dt * L_new)
        try:
            self._lu = splu(implicit)
        except RuntimeError as exc:
            raise StepError("implicit Crank–Nicolson matrix is singular", t=t, dt=dt) from exc
        self._explicit = sparse.csr_matrix(self._identity - 0.5 * dt * L_old)
        self._cache_key = key
        self._factorizations += 1

    def step(self, u: Field, dt: float, forcing: Optional[Evaluator] = None) -> Field:
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if u.grid != self.grid:
            raise ValueError("field lives on a different grid than the stepper")
        t = u.t
        self._prepare(t, dt)
        rhs = self._explicit @ u.values
        if forcing is not None:
            rhs = rhs + dt * np.asarray(forcing(t + 0.5 * dt, self.grid.x))
        # real and imaginary parts share the real factorization
        solved = self._lu.solve(np.column_stack([rhs.real, rhs.imag]))
        values = solved[:, 0] + 1j * solved[:, 1]
        if not np.all(np.isfinite(values)):
            raise StepError("non-finite values after Crank–Nicolson step", t=t, dt=dt)
        return Field(self.grid, values, t + dt)


def step(
    u: Field,
    coeffs: CoefficientSet,
    forcing: Optional[Evaluator],
    t: float,
    dt: float,
) -> Field:
    """Single Crank–Nicolson step from time t."""
    return CrankNicolsonStepper(coeffs, u.grid).step(u.replace(u.values, t), dt, forcing)
