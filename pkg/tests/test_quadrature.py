from __future__ import annotations

import math

import numpy as np
import pytest

from src.helium.errors import ConvergenceError, IntegrationError, RootBracketError
from src.helium.quadrature import IntegrationSpec, RootSpec, find_root, fixed_point, integrate


def test_integrate_smooth_function():
    result = integrate(math.sin, (0.0, math.pi))
    assert result.value == pytest.approx(2.0, rel=1e-12)
    assert result.error < 1e-9


def test_integrate_log_endpoint_singularity():
    result = integrate(lambda x: math.log(x), (0.0, 1.0))
    assert result.value == pytest.approx(-1.0, rel=1e-10)


def test_integrate_interior_singular_point():
    spec = IntegrationSpec(singular_points=(0.0,))
    result = integrate(lambda x: math.log(abs(x)) if x != 0.0 else 0.0, (-1.0, 1.0), spec)
    assert result.value == pytest.approx(-2.0, rel=1e-9)


def test_integrate_semi_infinite():
    result = integrate(lambda x: math.exp(-x), (0.0, np.inf))
    assert result.value == pytest.approx(1.0, rel=1e-10)


def test_integrate_gaussian_tail_from_offset():
    result = integrate(lambda x: math.exp(-x * x), (0.0, np.inf))
    assert result.value == pytest.approx(0.5 * math.sqrt(math.pi), rel=1e-10)


def test_empty_interval_is_zero():
    assert integrate(math.exp, (1.5, 1.5)).value == 0.0


def test_divergent_integral_raises():
    with pytest.raises(IntegrationError) as info:
        integrate(lambda x: 1.0 / x, (0.0, 1.0))
    assert isinstance(info.value, RuntimeError)
    assert info.value.error > 0


@pytest.mark.parametrize("kwargs", [{"rel_tol": 0.0}, {"abs_tol": -1.0}, {"max_subdivisions": 0}])
def test_integration_spec_validation(kwargs):
    with pytest.raises(ValueError):
        IntegrationSpec(**kwargs)


def test_find_root_brent():
    root = find_root(lambda x: x * x - 2.0, RootSpec(bracket=(0.0, 2.0)))
    assert root == pytest.approx(math.sqrt(2.0), abs=1e-13)


def test_find_root_without_sign_change():
    with pytest.raises(RootBracketError) as info:
        find_root(lambda x: x * x + 1.0, RootSpec(bracket=(-1.0, 1.0)))
    assert info.value.bracket == (-1.0, 1.0)


def test_root_spec_rejects_reversed_bracket():
    with pytest.raises(ValueError):
        RootSpec(bracket=(2.0, 1.0))


def test_fixed_point_converges_with_history():
    result = fixed_point(math.cos, 1.0, damping=0.5, tol=1e-12)
    assert result.value == pytest.approx(0.7390851332151607, abs=1e-11)
    assert result.iterations == len(result.history)
    residuals = [r for _, r in result.history]
    assert residuals[-1] <= 1e-12
    assert residuals[-1] < residuals[0]


def test_fixed_point_budget_exhausted():
    with pytest.raises(ConvergenceError) as info:
        fixed_point(math.cos, 1.0, damping=0.5, tol=1e-15, max_iter=3)
    assert len(info.value.history) == 3


def test_fixed_point_rejects_bad_damping():
    with pytest.raises(ValueError):
        fixed_point(math.cos, 1.0, damping=0.0)
