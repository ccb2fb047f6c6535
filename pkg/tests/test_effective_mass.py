from __future__ import annotations

import math

import numpy as np
import pytest

from src.helium.errors import DataError, UnphysicalMassError
from src.helium.ideal_gas import critical_temperature
from src.helium.pair_theory import alpha_q, zero_potential
from src.helium.effective_mass import (
    MASS_METHODS,
    MassSolution,
    closure_sides,
    effective_liquid_potential,
    impurity_classical_thermo,
    impurity_mass,
    m_star_bogoliubov,
    m_star_classical,
    m_star_self_consistent,
    m_star_sewed,
    m_star_zero_t,
    mass_solution,
    mass_table,
)


def test_bogoliubov_chain(he4, gaussian, small_grid):
    impurity = impurity_mass(he4.mass, gaussian, gaussian, he4, "zero_T", small_grid)
    bogoliubov = m_star_bogoliubov(gaussian, he4, small_grid)
    zero_t = m_star_zero_t(lambda q: 1.0 / alpha_q(q, gaussian, he4), he4, small_grid)
    assert bogoliubov > he4.mass
    assert impurity == pytest.approx(bogoliubov, rel=1e-12)
    assert zero_t == pytest.approx(bogoliubov, rel=1e-12)


def test_limiting_masses_are_ordered(he4, he4_sq, small_grid):
    m_zero = m_star_zero_t(he4_sq, he4, small_grid)
    m_classical = m_star_classical(he4_sq, he4, small_grid)
    assert he4.mass < m_zero < m_classical


def test_uncorrelated_liquid_keeps_bare_mass(he4, small_grid):
    flat = lambda q: np.ones_like(q)
    assert m_star_zero_t(flat, he4, small_grid) == he4.mass
    assert m_star_classical(flat, he4, small_grid) == he4.mass


def test_unphysical_renormalization(he4, small_grid):
    peaked = lambda q: 1.0 + 30.0 * np.exp(-((q - 2.0) ** 2))
    with pytest.raises(UnphysicalMassError) as info:
        m_star_classical(peaked, he4, small_grid)
    assert info.value.total >= 1.0
    assert info.value.method == "classical"


def test_non_positive_structure_factor(he4, small_grid):
    with pytest.raises(DataError):
        m_star_zero_t(lambda q: np.where(q > 3.0, -0.1, 0.5), he4, small_grid)


# --------------------------------------------------------------------
# Impurity
# --------------------------------------------------------------------


def test_heavy_impurity_is_renormalized_less(he4, gaussian, small_grid):
    light = impurity_mass(he4.mass, gaussian, gaussian, he4, "zero_T", small_grid)
    heavy_mass = 40.0 * he4.mass
    heavy = impurity_mass(heavy_mass, gaussian, gaussian, he4, "zero_T", small_grid)
    assert 1.0 - heavy_mass / heavy < 1.0 - he4.mass / light


@pytest.mark.parametrize("mass, mode", [(0.0, "zero_T"), (4.0, "quantum")])
def test_impurity_argument_errors(he4, gaussian, small_grid, mass, mode):
    with pytest.raises(ValueError):
        impurity_mass(mass, gaussian, gaussian, he4, mode, small_grid)


def test_decoupled_classical_impurity(he4, gaussian, small_grid):
    thermo = impurity_classical_thermo(3.0, zero_potential(), gaussian, he4, small_grid)
    assert thermo.ln_z_excess == 0.0
    assert thermo.delta_energy == pytest.approx(1.5 * he4.temperature)
    assert thermo.effective_mass == 3.0


def test_classical_impurity_mass_increases_with_coupling(he4, gaussian, small_grid):
    weak = impurity_classical_thermo(3.0, gaussian.scaled(0.1), gaussian, he4, small_grid)
    strong = impurity_classical_thermo(3.0, gaussian.scaled(0.5), gaussian, he4, small_grid)
    assert 3.0 < weak.effective_mass < strong.effective_mass
    assert strong.ln_z_excess < weak.ln_z_excess < 0.0


def test_effective_liquid_potential(he4, gaussian):
    mbar_nu = gaussian.scaled(0.5)
    n = 100
    dressed = effective_liquid_potential(mbar_nu, gaussian, he4, n)
    q = np.array([0.5, 1.0])
    volume = n / he4.density
    extra = he4.beta * mbar_nu(q) ** 2 / (volume * (1.0 + he4.beta * he4.density * gaussian(q)))
    np.testing.assert_allclose(dressed(q), gaussian(q) + extra, rtol=1e-14)
    assert dressed.nu_0 == gaussian.nu_0
    with pytest.raises(ValueError):
        effective_liquid_potential(mbar_nu, gaussian, he4, 0)


# --------------------------------------------------------------------
# Temperature-dependent prescriptions
# --------------------------------------------------------------------


def test_sewed_mass_interpolates(he4, he4_sq, small_grid):
    m_zero = m_star_zero_t(he4_sq, he4, small_grid)
    m_classical = m_star_classical(he4_sq, he4, small_grid)
    t_ref = critical_temperature(he4)
    assert m_star_sewed(he4_sq, he4, 0.0, grid=small_grid) == m_zero
    assert m_star_sewed(he4_sq, he4, 1e4 * t_ref, grid=small_grid) == pytest.approx(m_classical, rel=1e-12)
    middle = m_zero + (m_classical - m_zero) * (1.0 - math.exp(-1.0))
    assert m_star_sewed(he4_sq, he4, t_ref, grid=small_grid) == pytest.approx(middle, rel=1e-12)
    with pytest.raises(ValueError):
        m_star_sewed(he4_sq, he4, -1.0, grid=small_grid)


@pytest.mark.slow
def test_self_consistent_mass_closes(he4, he4_sq, small_grid):
    solution = m_star_self_consistent(he4_sq, he4, 2.0, small_grid)
    assert solution.method == "self_consistent"
    assert solution.iterations < 200
    assert solution.residual < 1e-8
    assert len(solution.history) == solution.iterations

    left, right_ideal, thermal = closure_sides(he4_sq, he4, solution.m_star, small_grid)
    assert left == pytest.approx(right_ideal + thermal, rel=1e-8)

    record = solution.to_record(he4.mass)
    assert record["m_star_over_m"] == pytest.approx(solution.m_star / he4.mass)


def test_self_consistent_needs_temperature(he4, he4_sq, small_grid):
    with pytest.raises(ValueError):
        m_star_self_consistent(he4_sq, he4, 0.0, small_grid)


def test_mass_solution_dispatch(he4, he4_sq, small_grid):
    solution = mass_solution(he4_sq, he4, 1.5, "classical", small_grid)
    assert isinstance(solution, MassSolution)
    assert solution.m_star == m_star_classical(he4_sq, he4, small_grid)
    assert solution.iterations == 0
    with pytest.raises(ValueError):
        mass_solution(he4_sq, he4, 1.5, "variational", small_grid)
    assert "self_consistent" in MASS_METHODS


def test_mass_table_per_temperature(he4, he4_sq, small_grid):
    table = mass_table(he4_sq, he4, [1.0, 2.0, 3.0], "sewed", small_grid)
    assert [s.temperature for s in table] == [1.0, 2.0, 3.0]
    masses = [s.m_star for s in table]
    assert masses == sorted(masses)
