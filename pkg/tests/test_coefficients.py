"""
Tests for coefficient sets, nondegeneracy and derivative validation.
"""

import numpy as np
import pytest

from src.coefficients.checks import Window, check_nondegeneracy, require_nondegenerate, validate_derivatives
from src.coefficients.model import DERIVATIVES, CoefficientSet, constant
from src.coefficients.presets import preset_registry
from src.errors import DegenerateDispersionError, InconsistentDerivativeError


@pytest.fixture
def variable_dispersion():
    return preset_registry.build("variable-dispersion")


def test_missing_derivatives_fall_back_to_differences():
    """A set built from a₃ alone gets accurate numerical derivatives."""
    coeffs = CoefficientSet(a3=lambda t, x: 2.0 + np.sin(x))
    x = np.linspace(-3, 3, 61)
    np.testing.assert_allclose(coeffs.evaluate("dx_a3", 0.0, x), np.cos(x), atol=1e-8)
    np.testing.assert_allclose(coeffs.evaluate("dxxx_a3", 0.0, x), -np.cos(x), atol=1e-4)
    assert "dx_a3" not in coeffs.supplied
    assert "dt_a3" in coeffs.supplied, "autonomous sets have exact zero t-derivatives"


def test_operator_coefficients_order(variable_dispersion):
    """operator_coefficients returns (a₀, a₁, a₂, a₃)."""
    x = np.array([0.0, np.pi / 2])
    a0, a1, a2, a3 = variable_dispersion.operator_coefficients(0.0, x)
    np.testing.assert_allclose(a3, [2.0, 3.0])
    assert not np.any(a0) and not np.any(a1) and not np.any(a2)


def test_derived_rederives_dependents():
    """Replacing a₃ drops derivatives that belonged to the old a₃."""
    coeffs = preset_registry.build("airy")
    changed = coeffs.derived(a3=lambda t, x: 1.0 + 0.5 * np.sin(x))
    x = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(changed.evaluate("dx_a3", 0.0, x), 0.5 * np.cos(x), atol=1e-8)


def test_sign_must_be_unit():
    """sign is ±1."""
    with pytest.raises(ValueError):
        CoefficientSet(a3=constant(1.0), sign=0)


def test_nondegeneracy_bounds(variable_dispersion):
    """a₃ = 2 + sin x has λ = 1, Λ = 3 over a long window."""
    bounds = check_nondegeneracy(variable_dispersion, Window(x=(-10.0, 10.0)), sample_density=64)
    assert bounds.lam == pytest.approx(1.0, abs=1e-3)
    assert bounds.Lam == pytest.approx(3.0, abs=1e-3)


def test_nondegeneracy_rejects_sign_change():
    """a₃ = sin x vanishes and is rejected."""
    coeffs = CoefficientSet(a3=lambda t, x: np.sin(x))
    with pytest.raises(DegenerateDispersionError):
        check_nondegeneracy(coeffs, Window(x=(-1.0, 1.0)))


def test_nondegeneracy_rejects_wrong_declared_sign():
    """A negative a₃ declared positive is inconsistent."""
    coeffs = CoefficientSet(a3=constant(-1.0), sign=1)
    with pytest.raises(DegenerateDispersionError):
        require_nondegenerate(coeffs, 0.0, np.zeros(4))


def test_nondegeneracy_requires_sample_density(variable_dispersion):
    """Sampling sparser than 8 points per unit length is refused."""
    with pytest.raises(ValueError):
        check_nondegeneracy(variable_dispersion, Window(x=(0.0, 1.0)), sample_density=4)


def test_nondegeneracy_scans_time():
    """Time-dependent a₃ is checked over the whole time window."""
    coeffs = preset_registry.build("modulated-dispersion", beta=1.5)
    bounds = check_nondegeneracy(coeffs, Window(x=(-4.0, 4.0), t=(0.0, np.pi)))
    assert bounds.lam < 1.0 < 3.0 < bounds.Lam


def test_validate_derivatives_accepts_presets():
    """Every built-in preset supplies consistent derivatives."""
    window = Window(x=(-5.0, 5.0), t=(0.0, 1.0))
    for name in preset_registry.names:
        report = validate_derivatives(preset_registry.build(name), window)
        assert report.passed, f"{name}: worst {report.worst}"
        assert set(report.mismatches) == set(DERIVATIVES)


def test_validate_derivatives_catches_wrong_evaluator():
    """A supplied ∂xa₃ with the wrong sign is reported by name."""
    coeffs = CoefficientSet(
        a3=lambda t, x: 2.0 + np.sin(x),
        dx_a3=lambda t, x: -np.cos(x),
    )
    with pytest.raises(InconsistentDerivativeError) as info:
        validate_derivatives(coeffs, Window(x=(-2.0, 2.0)))
    assert info.value.diagnostics["evaluator"] in {"dx_a3", "dxx_a3"}
