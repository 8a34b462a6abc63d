"""
KdV Lab — Coefficient Set.

Evaluators aⱼ(t, x) of the operator L = a₃∂x³ + a₂∂x² + a₁∂x + a₀ together
with the x/t derivatives consumed by the gauge, energy and transform code.
Derivatives that are not supplied are filled with 4th-order centered
differences of their parent; validate_derivatives guards both kinds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np

from src.grid.spatial import STENCILS

logger = logging.getLogger("kdvlab.coefficients.model")

Evaluator = Callable[[float, np.ndarray], np.ndarray]

# name → (parent, variable, order relative to the parent)
DERIVATIVES: dict[str, tuple[str, str, int]] = {
    "dx_a3": ("a3", "x", 1),
    "dxx_a3": ("a3", "x", 2),
    "dxxx_a3": ("a3", "x", 3),
    "dx_a2": ("a2", "x", 1),
    "dxx_a2": ("a2", "x", 2),
    "dx_a1": ("a1", "x", 1),
    "dt_a3": ("a3", "t", 1),
    "dt_a2": ("a2", "t", 1),
}

# Parent used when checking a supplied evaluator one order at a time.
VALIDATION_PARENT: dict[str, str] = {
    "dx_a3": "a3",
    "dxx_a3": "dx_a3",
    "dxxx_a3": "dxx_a3",
    "dx_a2": "a2",
    "dxx_a2": "dx_a2",
    "dx_a1": "a1",
    "dt_a3": "a3",
    "dt_a2": "a2",
}

# Step sizes balancing truncation against roundoff per derivative order.
FALLBACK_STEPS = {1: 1e-3, 2: 5e-3, 3: 1e-2}


def constant(value: float) -> Evaluator:
    """Evaluator returning value everywhere."""
    return lambda t, x: np.full(np.shape(x), float(value))


ZERO = constant(0.0)


def finite_difference(parent: Evaluator, variable: str, order: int) -> Evaluator:
    """Centered 4th-order difference of parent in x or t."""
    step = FALLBACK_STEPS[order]
    stencil = STENCILS[order]

    def evaluate(t: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros(np.shape(x))
        for k, w in stencil.items():
            if variable == "x":
                total = total + w * sample(parent, t, x + k * step)
            else:
                total = total + w * sample(parent, t + k * step, x)
        return total / step ** order

    return evaluate


def sample(evaluator: Evaluator, t: float, x: np.ndarray) -> np.ndarray:
    """Evaluate and broadcast to the shape of x as a float array."""
    x = np.asarray(x, dtype=float)
    return np.array(np.broadcast_to(np.asarray(evaluator(t, x), dtype=float), x.shape))


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Immutable bundle of coefficient evaluators and metadata."""

    a3: Evaluator
    a2: Evaluator = ZERO
    a1: Evaluator = ZERO
    a0: Evaluator = ZERO
    dx_a3: Optional[Evaluator] = None
    dxx_a3: Optional[Evaluator] = None
    dxxx_a3: Optional[Evaluator] = None
    dx_a2: Optional[Evaluator] = None
    dxx_a2: Optional[Evaluator] = None
    dx_a1: Optional[Evaluator] = None
    dt_a3: Optional[Evaluator] = None
    dt_a2: Optional[Evaluator] = None
    sign: int = 1
    autonomous: bool = True
    name: str = "custom"
    params: dict = field(default_factory=dict)
    supplied: frozenset = field(default=frozenset(), repr=False)

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        supplied = set(self.supplied)
        for name, (parent, variable, order) in DERIVATIVES.items():
            if getattr(self, name) is not None:
                supplied.add(name)
                continue
            if variable == "t" and self.autonomous:
                object.__setattr__(self, name, ZERO)
                supplied.add(name)
                continue
            fallback = finite_difference(getattr(self, parent), variable, order)
            object.__setattr__(self, name, fallback)
        object.__setattr__(self, "supplied", frozenset(supplied))

    # ── Evaluation ───────────────────────────────────────

    def evaluate(self, name: str, t: float, x: np.ndarray) -> np.ndarray:
        return sample(getattr(self, name), t, x)

    def operator_coefficients(self, t: float, x: np.ndarray) -> tuple[np.ndarray, ...]:
        """(a₀, a₁, a₂, a₃) sampled at time t."""
        return tuple(self.evaluate(f"a{j}", t, x) for j in range(4))

    def sup_norm(self, t: float, x: np.ndarray) -> float:
        return float(max(np.max(np.abs(a)) for a in self.operator_coefficients(t, x)))

    def has_positive_diffusion(self, t: float, x: np.ndarray) -> bool:
        """True when a₂ > 0 somewhere, i.e. the second-order term amplifies."""
        return bool(np.any(self.evaluate("a2", t, x) > 0.0))

    def derived(self, **changes) -> "CoefficientSet":
        """Copy with replaced evaluators; missing derivatives are re-derived."""
        base = {f.name: getattr(self, f.name) for f in fields(self)}
        reset = {"supplied": frozenset()}
        for name, (parent, _, _) in DERIVATIVES.items():
            if parent in changes and name not in changes:
                reset[name] = None
        kept = {
            name: base[name]
            for name in DERIVATIVES
            if name in self.supplied and name not in reset and name not in changes
        }
        unresolved = {name: None for name in DERIVATIVES if name not in kept}
        return replace(self, **{**unresolved, **kept, **reset, **changes})

    def info(self) -> dict:
        return {
            "name": self.name,
            "params": dict(self.params),
            "sign": self.sign,
            "autonomous": self.autonomous,
            "fallback_derivatives": sorted(set(DERIVATIVES) - set(self.supplied)),
        }
