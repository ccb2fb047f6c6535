from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from src.helium.core import ZETA_3_2, ZETA_5_2, SystemParams
from src.helium.ideal_gas import (
    _pair_kernel,
    bose_function,
    critical_temperature,
    degeneracy,
    dlnz_dbeta,
    ds0_dbeta,
    g32,
    g52,
    ideal_energy,
    ideal_state,
    ln_z0_ideal,
    occupation,
    s0_excess,
    solve_fugacity,
    structure_factor,
)


def he4_at(temperature: float) -> SystemParams:
    return SystemParams.from_preset("he4", temperature=temperature)


def brute_series(s: float, z: float, terms: int = 20000) -> float:
    k = np.arange(1, terms + 1, dtype=float)
    return float(np.sum(z**k / k**s))


# --------------------------------------------------------------------
# Bose functions
# --------------------------------------------------------------------


def test_bose_function_at_unit_fugacity():
    assert g32(1.0) == pytest.approx(ZETA_3_2, rel=1e-14)
    assert g52(1.0) == pytest.approx(ZETA_5_2, rel=1e-14)
    assert math.isinf(bose_function(0.5, 1.0))
    assert bose_function(1.5, 0.0) == 0.0


@pytest.mark.parametrize("s", [0.5, 1.5, 2.5])
@pytest.mark.parametrize("z", [0.2, 0.5, 0.50001, 0.7, 0.9, 0.99])
def test_bose_function_matches_series(s, z):
    assert bose_function(s, z) == pytest.approx(brute_series(s, z), rel=1e-10)


@pytest.mark.parametrize("s", [0.5, 1.5, 2.5])
@pytest.mark.parametrize("z", [0.05, 0.5, 0.8, 0.999, 0.999999])
def test_bose_function_matches_polylog(s, z):
    assert bose_function(s, z) == pytest.approx(float(mpmath.polylog(s, z)), rel=1e-10)


@pytest.mark.parametrize("z", [-0.1, 1.01])
def test_bose_function_domain(z):
    with pytest.raises(ValueError):
        bose_function(1.5, z)


# --------------------------------------------------------------------
# State
# --------------------------------------------------------------------


def test_critical_temperature_he4():
    t_c = critical_temperature(he4_at(1.0))
    assert t_c == pytest.approx(3.13, abs=0.01)
    # T_c scales as 1/m*
    assert critical_temperature(he4_at(1.0), m_star=2.0 * he4_at(1.0).mass) == pytest.approx(0.5 * t_c)


def test_fugacity_above_and_below_tc():
    hot = he4_at(6.0)
    z = solve_fugacity(hot)
    assert 0.0 < z < 1.0
    assert g32(z) == pytest.approx(degeneracy(hot), rel=1e-10)
    assert solve_fugacity(he4_at(2.0)) == 1.0


def test_ideal_state_condensate_fraction():
    state = ideal_state(he4_at(2.0))
    assert state.condensed
    assert state.condensate_fraction == pytest.approx(1.0 - (2.0 / state.t_c) ** 1.5)
    hot = ideal_state(he4_at(4.0))
    assert not hot.condensed
    assert hot.condensate_fraction == 0.0


def test_ideal_state_needs_positive_temperature():
    with pytest.raises(ValueError):
        ideal_state(he4_at(0.0))


def test_occupation_is_bose_einstein():
    state = ideal_state(he4_at(4.0))
    q = np.array([0.3, 1.0])
    x = state.a * q * q
    expected = 1.0 / (np.exp(x) / state.z0 - 1.0)
    np.testing.assert_allclose(occupation(q, state), expected, rtol=1e-12)


# --------------------------------------------------------------------
# Structure factor
# --------------------------------------------------------------------


@pytest.mark.parametrize("temperature", [1.5, 4.0])
def test_structure_factor_bunching_and_large_q(temperature):
    state = ideal_state(he4_at(temperature))
    q = np.array([0.2, 0.5, 1.0, 6.0])
    s0 = structure_factor(q, state)
    assert np.all(s0 > 1.0 - 1e-12)
    assert np.all(np.diff(s0) < 0)
    assert s0[-1] == pytest.approx(1.0, abs=1e-8)


def test_structure_factor_scalar_and_domain():
    state = ideal_state(he4_at(4.0))
    assert isinstance(structure_factor(0.5, state), float)
    with pytest.raises(ValueError):
        structure_factor(np.array([0.0, 0.5]), state)


@pytest.mark.parametrize("temperature", [2.0, 2.5, 5.0])
def test_s0_excess_consistent_with_structure_factor(temperature):
    state = ideal_state(he4_at(temperature))
    q = np.array([0.3, 0.8, 1.5])
    x = state.a * q * q
    expected = structure_factor(q, state) - 1.0 / np.tanh(0.5 * x)
    np.testing.assert_allclose(s0_excess(q, state), expected, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("t_ratio", [0.3, 0.6, 0.9, 0.99])
@pytest.mark.parametrize("q", [1e-4, 1e-3, 1e-2, 5e-2])
def test_structure_factor_small_q_below_tc(t_ratio, q):
    state = ideal_state(he4_at(t_ratio * critical_temperature(he4_at(1.0))))
    assert state.condensed
    s0 = structure_factor(q, state)
    assert math.isfinite(s0) and s0 > 1.0
    assert math.isfinite(s0_excess(q, state))


def test_pair_kernel_small_k_limit():
    assert _pair_kernel(1e-5, 0.0) == pytest.approx(math.pi**2, rel=1e-3)


@pytest.mark.parametrize(
    "temperature, q",
    [(1.0, [1e-3, 0.02, 0.3]), (2.0, [0.01, 0.3, 1.0]), (4.0, [0.3, 1.0]), (4.7, [1.0])],
)
def test_ds0_dbeta_against_finite_difference(temperature, q):
    params = he4_at(temperature)
    beta = params.beta
    h = 1e-5 * beta
    q = np.asarray(q)
    up = structure_factor(q, ideal_state(params.at_temperature(1.0 / (beta + h))))
    down = structure_factor(q, ideal_state(params.at_temperature(1.0 / (beta - h))))
    fd = (up - down) / (2.0 * h)
    np.testing.assert_allclose(ds0_dbeta(q, ideal_state(params)), fd, rtol=1e-5)


def test_ds0_dbeta_fixed_mass_default():
    state = ideal_state(he4_at(2.5))
    q = np.array([0.4, 0.9])
    np.testing.assert_array_equal(ds0_dbeta(q, state), ds0_dbeta(q, state, m_star_star=state.m_star))


# --------------------------------------------------------------------
# Thermodynamics
# --------------------------------------------------------------------


def test_dlnz_dbeta():
    assert dlnz_dbeta(ideal_state(he4_at(2.0))) == 0.0
    params = he4_at(5.0)
    beta = params.beta
    h = 1e-5 * beta
    up = ideal_state(params.at_temperature(1.0 / (beta + h))).log_z
    down = ideal_state(params.at_temperature(1.0 / (beta - h))).log_z
    assert dlnz_dbeta(ideal_state(params)) == pytest.approx((up - down) / (2.0 * h), rel=1e-6)


@pytest.mark.parametrize("temperature", [1.0, 2.5, 4.0, 8.0])
def test_ideal_energy_is_beta_derivative(temperature):
    params = he4_at(temperature)
    beta = params.beta
    h = 1e-5 * beta
    up = ln_z0_ideal(ideal_state(params.at_temperature(1.0 / (beta + h))))
    down = ln_z0_ideal(ideal_state(params.at_temperature(1.0 / (beta - h))))
    assert ideal_energy(ideal_state(params)) == pytest.approx(-(up - down) / (2.0 * h), rel=1e-6)


def test_classical_limit_of_ideal_energy():
    state = ideal_state(he4_at(500.0))
    assert ideal_energy(state) == pytest.approx(1.5 * 500.0, rel=1e-3)
