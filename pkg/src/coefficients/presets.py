"""
KdV Lab — Coefficient Presets.

Named coefficient families (constant, trig, rational in ⟨x⟩, modulated)
with analytic derivatives. Built-in presets are always registered; YAML files
in the presets directory add or override entries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import yaml

from src.coefficients.model import CoefficientSet, constant
from src.config import settings
from src.errors import ConfigValidationError

logger = logging.getLogger("kdvlab.coefficients.presets")


# ── Families ─────────────────────────────────────────────


def constant_family(c3: float = 1.0, c2: float = 0.0, c1: float = 0.0,
                    c0: float = 0.0) -> dict[str, Any]:
    zero = constant(0.0)
    return dict(
        a3=constant(c3), a2=constant(c2), a1=constant(c1), a0=constant(c0),
        dx_a3=zero, dxx_a3=zero, dxxx_a3=zero, dx_a2=zero, dxx_a2=zero, dx_a1=zero,
        sign=1 if c3 >= 0 else -1,
    )


def trig_family(alpha: float = 1.0, beta: float = 0.0, gamma: float = 0.0,
                k: float = 1.0, mu: float = 0.0, nu: float = 0.0) -> dict[str, Any]:
    """a₃ = α + β sin kx, a₂ = γ cos kx, a₁ = μ, a₀ = ν."""
    return dict(
        a3=lambda t, x: alpha + beta * np.sin(k * x),
        dx_a3=lambda t, x: beta * k * np.cos(k * x),
        dxx_a3=lambda t, x: -beta * k**2 * np.sin(k * x),
        dxxx_a3=lambda t, x: -beta * k**3 * np.cos(k * x),
        a2=lambda t, x: gamma * np.cos(k * x),
        dx_a2=lambda t, x: -gamma * k * np.sin(k * x),
        dxx_a2=lambda t, x: -gamma * k**2 * np.cos(k * x),
        a1=constant(mu), dx_a1=constant(0.0), a0=constant(nu),
        sign=1 if alpha >= 0 else -1,
    )


def rational_family(c3: float = 1.0, gamma: float = 0.0, p: float = 2.0,
                    mu: float = 0.0, nu: float = 0.0) -> dict[str, Any]:
    """a₃ = c₃, a₂ = γ⟨x⟩^{−p}, a₁ = μ·x⟨x⟩^{−2}, a₀ = ν."""
    q = p / 2.0

    def a2(t, x):
        return gamma * (1.0 + x**2) ** (-q)

    def dx_a2(t, x):
        return -p * gamma * x * (1.0 + x**2) ** (-q - 1.0)

    def dxx_a2(t, x):
        r = 1.0 + x**2
        return -p * gamma * (r ** (-q - 1.0) - (p + 2.0) * x**2 * r ** (-q - 2.0))

    zero = constant(0.0)
    return dict(
        a3=constant(c3), dx_a3=zero, dxx_a3=zero, dxxx_a3=zero,
        a2=a2, dx_a2=dx_a2, dxx_a2=dxx_a2,
        a1=lambda t, x: mu * x / (1.0 + x**2),
        dx_a1=lambda t, x: mu * (1.0 - x**2) / (1.0 + x**2) ** 2,
        a0=constant(nu),
        sign=1 if c3 >= 0 else -1,
    )


def modulated_family(alpha: float = 2.0, beta: float = 0.5, omega: float = 1.0,
                     gamma: float = 0.0) -> dict[str, Any]:
    """a₃ = α + β sin x cos ωt, a₂ = γ cos x cos ωt."""
    return dict(
        a3=lambda t, x: alpha + beta * np.sin(x) * np.cos(omega * t),
        dx_a3=lambda t, x: beta * np.cos(x) * np.cos(omega * t),
        dxx_a3=lambda t, x: -beta * np.sin(x) * np.cos(omega * t),
        dxxx_a3=lambda t, x: -beta * np.cos(x) * np.cos(omega * t),
        dt_a3=lambda t, x: -beta * omega * np.sin(x) * np.sin(omega * t),
        a2=lambda t, x: gamma * np.cos(x) * np.cos(omega * t),
        dx_a2=lambda t, x: -gamma * np.sin(x) * np.cos(omega * t),
        dxx_a2=lambda t, x: -gamma * np.cos(x) * np.cos(omega * t),
        dt_a2=lambda t, x: -gamma * omega * np.cos(x) * np.sin(omega * t),
        sign=1 if alpha >= 0 else -1,
        autonomous=False,
    )


FAMILIES: dict[str, Callable[..., dict[str, Any]]] = {
    "constant": constant_family,
    "trig": trig_family,
    "rational": rational_family,
    "modulated": modulated_family,
}


# ── Registry ─────────────────────────────────────────────


@dataclass
class Preset:
    """A named family instantiation."""
    name: str
    family: str
    params: dict[str, float] = field(default_factory=dict)
    exhibits: list[str] = field(default_factory=list)
    description: str = ""

    def build(self, **overrides: float) -> CoefficientSet:
        params = {**self.params, **overrides}
        try:
            spec = FAMILIES[self.family](**params)
        except TypeError as exc:
            raise ConfigValidationError(
                f"invalid parameters for preset {self.name!r}: {exc}", params=params,
            ) from exc
        return CoefficientSet(name=self.name, params=params, **spec)


BUILTIN_PRESETS: list[Preset] = [
    Preset("airy", "constant", {"c3": 1.0}, ["A1", "A3"],
           "a₃ ≡ 1, a₂ ≡ 0: norm-conserving Airy flow"),
    Preset("reverse-airy", "constant", {"c3": -1.0}, ["A1", "A3"],
           "a₃ ≡ −1: negative dispersion, normalized by reflection"),
    Preset("anti-diffusion-constant", "constant", {"c3": 1.0, "c2": 1.0}, ["A1", "A3N"],
           "a₂ ≡ 1: Mizohata integral diverges linearly, witness family"),
    Preset("good-diffusion", "constant", {"c3": 1.0, "c2": -1.0}, ["A1", "A3"],
           "a₂ ≡ −1: dissipative second-order term"),
    Preset("variable-dispersion", "trig", {"alpha": 2.0, "beta": 1.0}, ["A1", "A3"],
           "a₃ = 2 + sin x"),
    Preset("oscillating-diffusion", "trig", {"alpha": 1.0, "gamma": 1.0}, ["A1", "A3"],
           "a₂ = cos x: sign-changing diffusion with bounded Mizohata integral"),
    Preset("decaying-diffusion", "rational", {"c3": 1.0, "gamma": 1.0, "p": 2.0},
           ["A1", "A3"], "a₂ = ⟨x⟩^{−2}: integrable anti-diffusion"),
    Preset("decaying-transport", "rational", {"c3": 1.0, "mu": 1.0}, ["A1", "A3"],
           "a₁ = x⟨x⟩^{−2}: variable transport"),
    Preset("modulated-dispersion", "modulated",
           {"alpha": 2.0, "beta": 0.5, "omega": 1.0, "gamma": 0.0}, ["A1", "A3"],
           "a₃ = 2 + ½ sin x cos t: time-dependent dispersion"),
]


class PresetRegistry:
    """Loads and builds named coefficient presets."""

    def __init__(self) -> None:
        self._presets: dict[str, Preset] = {p.name: p for p in BUILTIN_PRESETS}

    @property
    def names(self) -> list[str]:
        return sorted(self._presets)

    def get(self, name: str) -> Preset:
        try:
            return self._presets[name]
        except KeyError:
            raise ConfigValidationError(
                f"unknown preset {name!r}", available=self.names,
            ) from None

    def build(self, name: str, **overrides: float) -> CoefficientSet:
        return self.get(name).build(**overrides)

    def register(self, preset: Preset) -> None:
        if preset.family not in FAMILIES:
            raise ConfigValidationError(
                f"preset {preset.name!r} uses unknown family {preset.family!r}",
                families=sorted(FAMILIES),
            )
        self._presets[preset.name] = preset

    def load_from_directory(self, presets_dir: Optional[str] = None) -> int:
        """Load all YAML files from the presets directory. Returns count loaded."""
        directory = Path(presets_dir or settings.presets_dir)
        if not directory.exists():
            logger.warning("Presets directory not found: %s", directory)
            return 0

        loaded = 0
        for pattern in ("*.yml", "*.yaml"):
            for path in sorted(directory.glob(pattern)):
                try:
                    self._load_file(path)
                    loaded += 1
                except Exception:
                    logger.exception("Failed to load preset file: %s", path)

        logger.info("Loaded %d preset file(s) from %s", loaded, directory)
        return loaded

    def listing(self) -> str:
        """Human-readable table of presets and the assumptions they exhibit."""
        lines = []
        for name in self.names:
            p = self._presets[name]
            params = ", ".join(f"{k}={v:g}" for k, v in sorted(p.params.items()))
            lines.append(
                f"{name:<26} {p.family:<10} [{'+'.join(p.exhibits)}]  {params}"
                + (f"\n{'':<26} {p.description}" if p.description else "")
            )
        return "\n".join(lines)

    # ── Internal ─────────────────────────────────────────

    def _load_file(self, path: Path) -> None:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)

        if not data or "presets" not in data:
            return

        for raw in data["presets"]:
            preset = self._parse_preset(raw)
            self.register(preset)
            logger.debug("Loaded preset: %s", preset.name)

    def _parse_preset(self, raw: dict[str, Any]) -> Preset:
        return Preset(
            name=str(raw["name"]),
            family=str(raw.get("family", "constant")),
            params={k: float(v) for k, v in (raw.get("params") or {}).items()},
            exhibits=[str(e) for e in raw.get("exhibits", [])],
            description=str(raw.get("description", "")),
        )


# Singleton
preset_registry = PresetRegistry()


def list_presets() -> str:
    return preset_registry.listing()
