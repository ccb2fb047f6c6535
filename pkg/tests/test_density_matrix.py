from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import logsumexp

from src.helium.core import SystemParams
from src.helium.density_matrix import (
    MAX_PARTICLES,
    Configuration,
    DmValue,
    _log_axis_kernel,
    box_modes,
    box_spectrum,
    density_matrix,
    factorization_residual,
    ground_state_log,
    ideal_dm,
    ideal_penrose_dm,
    penrose_feenberg_dm,
    potential_energy_config,
    random_configuration,
)
from src.helium.pair_theory import gaussian_potential

SIDE = 8.0
SEEDS = (1729, 1730, 1731, 1732)


@pytest.fixture(scope="module")
def modes():
    return box_modes(SIDE, 1)


@pytest.fixture(scope="module")
def configs():
    return [random_configuration(3, SIDE, seed) for seed in SEEDS]


# --------------------------------------------------------------------
# Configurations and modes
# --------------------------------------------------------------------


@pytest.mark.parametrize(
    "coords, primed, side",
    [
        (np.zeros((2, 3)), np.zeros((3, 3)), SIDE),
        (np.zeros((2, 2)), np.zeros((2, 2)), SIDE),
        (np.zeros((MAX_PARTICLES + 1, 3)), np.zeros((MAX_PARTICLES + 1, 3)), SIDE),
        (np.zeros((2, 3)), np.zeros((2, 3)), 0.0),
        (np.full((2, 3), SIDE), np.zeros((2, 3)), SIDE),
        (np.zeros((2, 3)), np.full((2, 3), -0.5), SIDE),
    ],
)
def test_configuration_validation(coords, primed, side):
    with pytest.raises(ValueError):
        Configuration(coords, primed, side)


def test_random_configuration_is_seeded():
    first = random_configuration(4, SIDE, 7)
    second = random_configuration(4, SIDE, 7)
    np.testing.assert_array_equal(first.coords, second.coords)
    np.testing.assert_array_equal(first.coords_primed, second.coords_primed)
    assert first.n == 4 and first.volume == SIDE**3
    diagonal = random_configuration(4, SIDE, 7, diagonal=True)
    np.testing.assert_array_equal(diagonal.coords, diagonal.coords_primed)


def test_configuration_transforms():
    config = random_configuration(3, SIDE, 11)
    swapped = config.swapped()
    np.testing.assert_array_equal(swapped.coords, config.coords_primed)
    relabeled = config.relabeled((2, 0, 1), (0, 1, 2))
    np.testing.assert_array_equal(relabeled.coords[0], config.coords[2])
    np.testing.assert_array_equal(relabeled.coords_primed, config.coords_primed)
    np.testing.assert_array_equal(config.diagonal(primed=True).coords, config.coords_primed)


@pytest.mark.parametrize("shell_max, count", [(1, 6), (2, 18), (3, 26), (4, 32)])
def test_box_mode_shells(shell_max, count):
    modes = box_modes(SIDE, shell_max)
    assert len(modes) == count
    np.testing.assert_allclose(np.sort(modes.magnitudes)[0], 2.0 * math.pi / SIDE)
    # the set is closed under q -> -q
    as_set = {tuple(np.round(v, 12)) for v in modes.vectors}
    assert all(tuple(np.round(-v, 12)) in as_set for v in modes.vectors)


def test_box_modes_reject_empty_shell():
    with pytest.raises(ValueError):
        box_modes(SIDE, 0)


# --------------------------------------------------------------------
# Ideal factor
# --------------------------------------------------------------------


@pytest.mark.parametrize("c", [0.005, 0.04, 0.2])
def test_axis_kernel_matches_image_sum(c):
    d = np.array([0.0, 1.3, 3.9, 7.5])
    shifts = SIDE * np.arange(-60, 61)
    brute = logsumexp(-c * (d[:, None] + shifts) ** 2, axis=1)
    np.testing.assert_allclose(_log_axis_kernel(d, c, SIDE), brute, rtol=1e-12)


@pytest.mark.parametrize("temperature", [0.2, 2.0])
def test_single_particle_trace_is_box_partition_function(temperature):
    params = SystemParams.from_preset("he4", temperature=temperature)
    config = random_configuration(1, SIDE, 5, diagonal=True)
    trace = math.exp(ideal_dm(config, params, None, params.beta)) * config.volume
    n = np.arange(-200, 201)
    levels = params.beta * 0.5 * params.hbar2_over_m * (2.0 * math.pi * n / SIDE) ** 2
    assert trace == pytest.approx(np.sum(np.exp(-levels)) ** 3, rel=1e-10)


def test_ideal_dm_needs_positive_beta(he4):
    with pytest.raises(ValueError):
        ideal_dm(random_configuration(2, SIDE, 1), he4, None, 0.0)


# --------------------------------------------------------------------
# Full density matrix
# --------------------------------------------------------------------


def test_switched_off_pair_factor(he4, zero, modes, configs):
    for config in configs:
        value = density_matrix(config, zero, he4, None, modes)
        assert isinstance(value, DmValue)
        assert value.log_p == 0.0
        assert value.log_r == value.log_r0


def test_exchange_and_time_reversal_symmetry(he4, gaussian, modes, configs):
    for config in configs:
        reference = density_matrix(config, gaussian, he4, None, modes).log_r
        for variant in (config.swapped(), config.relabeled((2, 0, 1)), config.relabeled((1, 2, 0), (0, 1, 2))):
            value = density_matrix(variant, gaussian, he4, None, modes).log_r
            assert value == pytest.approx(reference, rel=1e-12, abs=1e-12)


def test_ratio_identity_with_comparison_forms(he4, gaussian, modes, configs):
    spec = box_spectrum(gaussian, he4, modes, 3)
    for config in configs:
        value = density_matrix(config, gaussian, he4, None, modes)
        composed = (
            value.log_r0
            + penrose_feenberg_dm(config, spec, he4.beta)
            - ideal_penrose_dm(config, he4, he4.beta, modes)
        )
        assert composed == pytest.approx(value.log_r, abs=1e-10)


def test_low_temperature_factorization(he4, modes, configs):
    weak = gaussian_potential(260.0, 1.0)
    spec = box_spectrum(weak, he4, modes, 3)
    cold = he4.at_temperature(float(np.min(spec.energy)) / 30.0)
    for config in configs:
        assert factorization_residual(config, weak, cold, modes) < 1e-6


def test_classical_diagonal_ratio_is_boltzmann(modes, configs):
    params = SystemParams.from_preset("he4", temperature=50.0, hbar_scale=1e-2)
    strong = gaussian_potential(3160.0, 1.0)
    for config in configs:
        left, right = config.diagonal(), config.diagonal(primed=True)
        model = (
            density_matrix(left, strong, params, None, modes).log_p
            - density_matrix(right, strong, params, None, modes).log_p
        )
        boltzmann = -params.beta * (
            potential_energy_config(left.coords, strong, modes) - potential_energy_config(right.coords, strong, modes)
        )
        assert abs(model - boltzmann) / max(1.0, abs(boltzmann)) < 1e-3


# --------------------------------------------------------------------
# Configuration observables
# --------------------------------------------------------------------


def test_pair_potential_energy_of_two_particles(gaussian, modes):
    positions = np.array([[1.0, 2.0, 3.0], [2.5, 2.0, 0.5]])
    volume = SIDE**3
    separation = positions[0] - positions[1]
    expected = (gaussian.nu_0 + np.sum(gaussian(modes.magnitudes) * np.cos(modes.vectors @ separation))) / volume
    assert potential_energy_config(positions, gaussian, modes) == pytest.approx(expected, rel=1e-12)
    assert potential_energy_config(positions[:1], gaussian, modes) == pytest.approx(0.0, abs=1e-15)


def test_ground_state_is_permutation_invariant(he4, gaussian, modes):
    spec = box_spectrum(gaussian, he4, modes, 3)
    positions = random_configuration(3, SIDE, 3).coords
    reference = ground_state_log(positions, spec)
    assert ground_state_log(positions[[1, 2, 0]], spec) == pytest.approx(reference, rel=1e-13)
