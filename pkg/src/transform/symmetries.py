"""
KdV Lab — Operator Symmetries.

Formal adjoint, time reversal and the reflection x ↦ −x, each returning a
new CoefficientSet with analytic derivative evaluators where the parent
set has them.
"""

from __future__ import annotations

import numpy as np

from src.coefficients.model import DERIVATIVES, CoefficientSet
from src.grid.spatial import Field


def adjoint(coeffs: CoefficientSet) -> CoefficientSet:
    """L* = −a₃∂x³ + (a₂ − 3a₃')∂x² + (−a₁ + 2a₂' − 3a₃'')∂x + (a₀ − a₁' + a₂'' − a₃''')."""
    c = coeffs

    def combo(*terms):
        return lambda t, x: sum(w * c.evaluate(n, t, x) for w, n in terms)

    return c.derived(
        name=f"{c.name}*",
        sign=-c.sign,
        a3=combo((-1, "a3")),
        dx_a3=combo((-1, "dx_a3")),
        dxx_a3=combo((-1, "dxx_a3")),
        dxxx_a3=combo((-1, "dxxx_a3")),
        dt_a3=combo((-1, "dt_a3")),
        a2=combo((1, "a2"), (-3, "dx_a3")),
        dx_a2=combo((1, "dx_a2"), (-3, "dxx_a3")),
        dxx_a2=combo((1, "dxx_a2"), (-3, "dxxx_a3")),
        a1=combo((-1, "a1"), (2, "dx_a2"), (-3, "dxx_a3")),
        dx_a1=combo((-1, "dx_a1"), (2, "dxx_a2"), (-3, "dxxx_a3")),
        a0=combo((1, "a0"), (-1, "dx_a1"), (1, "dxx_a2"), (-1, "dxxx_a3")),
    )


def time_reversal(coeffs: CoefficientSet, T: float) -> CoefficientSet:
    """L̃(t) = −L(T − t), so that u(T − t) solves the reversed problem."""
    c = coeffs
    changes = {}
    for name in ("a3", "a2", "a1", "a0", *DERIVATIVES):
        # ∂t picks up a second sign from t ↦ T − t
        weight = 1.0 if DERIVATIVES.get(name, (None, "x"))[1] == "t" else -1.0
        changes[name] = (lambda n, w: lambda t, x: w * c.evaluate(n, T - t, x))(name, weight)
    return c.derived(name=f"{c.name}-reversed", sign=-c.sign, params={**c.params, "T": T}, **changes)


def _reflection_sign(name: str) -> float:
    """(−1)^j for a_j, times (−1)^k for the k-th x-derivative."""
    if name in DERIVATIVES:
        parent, variable, order = DERIVATIVES[name]
        base = _reflection_sign(parent)
        return base * (-1.0) ** order if variable == "x" else base
    return (-1.0) ** int(name[1])


def space_reflection(coeffs: CoefficientSet) -> CoefficientSet:
    """a_j(t, x) ↦ (−1)^j a_j(t, −x); flips the sign of a₃."""
    c = coeffs
    changes = {
        name: (lambda n, w: lambda t, x: w * c.evaluate(n, t, -np.asarray(x, dtype=float)))(
            name, _reflection_sign(name)
        )
        for name in ("a3", "a2", "a1", "a0", *DERIVATIVES)
    }
    return c.derived(name=f"{c.name}-reflected", sign=-c.sign, **changes)


def reflect_field(u: Field) -> Field:
    """u(−x) on the same grid (xᵢ ↦ x₋ᵢ mod n)."""
    return u.replace(np.roll(u.values[::-1], 1))
