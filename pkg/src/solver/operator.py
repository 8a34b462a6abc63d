"""
KdV Lab — Spatial Operator.

L(t) = a₃∂x³ + a₂∂x² + a₁∂x + a₀ assembled from the periodic
fourth-order difference matrices of the grid.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from src.coefficients.model import CoefficientSet
from src.grid.spatial import Field, SpatialGrid


def assemble_operator(coeffs: CoefficientSet, t: float, grid: SpatialGrid) -> sparse.csr_matrix:
    """Sparse matrix of L(t) on the grid."""
    a0, a1, a2, a3 = coeffs.operator_coefficients(t, grid.x)
    L = sparse.diags(a0)
    for order, a in ((1, a1), (2, a2), (3, a3)):
        if np.any(a != 0.0):
            L = L + sparse.diags(a) @ grid.difference_matrix(order)
    return sparse.csr_matrix(L)


def apply_L(u: Field, coeffs: CoefficientSet, t: float) -> Field:
    """L(t)u with the same finite differences the solver uses."""
    L = assemble_operator(coeffs, t, u.grid)
    return u.replace(L @ u.values)
