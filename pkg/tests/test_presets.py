"""
Tests for the preset registry and YAML preset loading.
"""

from pathlib import Path

import numpy as np
import pytest

from src.coefficients.presets import PresetRegistry, list_presets, preset_registry
from src.errors import ConfigValidationError


@pytest.fixture
def registry(tmp_path: Path):
    """Registry with an extra preset file loaded from disk."""
    preset_file = tmp_path / "extra.yml"
    preset_file.write_text("""
presets:
  - name: "steep"
    family: trig
    params: {alpha: 3.0, beta: 2.0}
    exhibits: [A1, A3]
    description: "a₃ = 3 + 2 sin x"

  - name: "airy"
    family: constant
    params: {c3: 2.0}
    exhibits: [A1, A3]
""")
    (tmp_path / "broken.yaml").write_text("presets:\n  - family: constant\n")
    reg = PresetRegistry()
    reg.load_from_directory(str(tmp_path))
    return reg


def test_builtin_listing_mentions_core_presets():
    """The listing names the presets and their assumptions."""
    text = list_presets()
    assert "airy" in text and "[A1+A3]" in text
    assert "anti-diffusion-constant" in text and "A3N" in text
    assert "variable-dispersion" in text and "2 + sin x" in text


def test_load_from_directory(registry):
    """YAML presets are added; a broken file is skipped."""
    assert "steep" in registry.names
    x = np.array([np.pi / 2])
    assert registry.build("steep").evaluate("a3", 0.0, x)[0] == pytest.approx(5.0)


def test_yaml_overrides_builtin(registry):
    """A YAML preset with a builtin name replaces it."""
    assert registry.build("airy").evaluate("a3", 0.0, np.zeros(1))[0] == 2.0


def test_missing_directory_loads_nothing(tmp_path: Path):
    """A missing presets directory is not an error."""
    assert PresetRegistry().load_from_directory(str(tmp_path / "nope")) == 0


def test_unknown_preset():
    """Unknown names raise a validation error listing the alternatives."""
    with pytest.raises(ConfigValidationError) as info:
        preset_registry.get("no-such-preset")
    assert "airy" in info.value.diagnostics["available"]


def test_bad_parameters():
    """Parameters the family does not take are rejected."""
    with pytest.raises(ConfigValidationError):
        preset_registry.build("airy", bogus=1.0)


def test_overrides_apply():
    """Keyword overrides replace preset parameters."""
    coeffs = preset_registry.build("anti-diffusion-constant", c2=3.0)
    assert coeffs.evaluate("a2", 0.0, np.zeros(2)).tolist() == [3.0, 3.0]
    assert coeffs.params["c2"] == 3.0


def test_reverse_airy_sign():
    """Negative dispersion presets declare sign −1."""
    assert preset_registry.build("reverse-airy").sign == -1


def test_repository_presets_load():
    """The shipped presets/ directory parses."""
    reg = PresetRegistry()
    root = Path(__file__).resolve().parent.parent / "presets"
    assert reg.load_from_directory(str(root)) >= 1
    assert "log-divergent-diffusion" in reg.names
