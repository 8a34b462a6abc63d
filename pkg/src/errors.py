"""
KdV Lab — Exception Hierarchy.

Every failure the experiment runner distinguishes has its own class; the CLI
maps them onto exit statuses.
"""

from __future__ import annotations

from typing import Any


class KdvLabError(Exception):
    """Base class for all laboratory errors."""

    exit_code = 2

    def __init__(self, message: str, **diagnostics: Any) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "diagnostics": {k: _plain(v) for k, v in self.diagnostics.items()},
        }


class ConfigValidationError(KdvLabError):
    """Experiment configuration is malformed or violates an invariant."""


class DegenerateDispersionError(KdvLabError):
    """a₃ changes sign or comes too close to zero on the window."""


class InconsistentDerivativeError(KdvLabError):
    """A supplied derivative evaluator disagrees with its parent."""


class ResolutionError(KdvLabError):
    """A field or bump is not resolved by the grid."""


class WindowError(KdvLabError):
    """A packet or integration window leaves the admissible region."""


class StepError(KdvLabError):
    """A time step failed (singular system or non-finite values)."""

    exit_code = 3


def _plain(value: Any) -> Any:
    if hasattr(value, "item"):
        try:
            return value.item()
        except (ValueError, AttributeError):
            pass
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value
