"""
Verification suites for the thermodynamics library.

Four suites are available:
- limits: reference constants, switch-off, Bogoliubov and classical limits
- consistency: E against -∂β ln Z, ∂S₀/∂β against finite differences and the
  coefficient identities of the evolved trial exponent
- density-matrix: the finite-box laboratory on seeded configuration pairs
- mass: the effective-mass chain, ordering and the self-consistent closure

Every check yields a CheckResult; a SuiteReport serializes to deterministic
JSON through src.utils.data_io.to_json_text.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from src.helium.core import DEFAULT_Q_MAX, DEFAULT_Q_MIN, ZETA_3_2, QGrid, SystemParams, log_grid
from src.helium.density_matrix import (
    box_modes,
    box_spectrum,
    density_matrix,
    factorization_residual,
    ideal_penrose_dm,
    penrose_feenberg_dm,
    potential_energy_config,
    random_configuration,
)
from src.helium.effective_mass import (
    impurity_mass,
    m_star_bogoliubov,
    m_star_classical,
    m_star_self_consistent,
    m_star_zero_t,
)
from src.helium.errors import HeliumError
from src.helium.ideal_gas import (
    critical_temperature,
    ds0_dbeta,
    ideal_energy,
    ideal_state,
    ln_z0_ideal,
    structure_factor as ideal_structure_factor,
)
from src.helium.pair_theory import (
    PairPotential,
    a_coefficients,
    alpha_q,
    bogoliubov_energy,
    gaussian_potential,
    make_potential,
    spectrum,
    zero_potential,
)
from src.helium.quadrature import PHYSICS_SPEC, integrate
from src.helium.thermo import (
    energy,
    ln_partition,
    rpa_energy,
    rpa_ln_partition,
    rpa_structure_factor,
    structure_factor,
)
from src.utils.data_io import load_bundled_sq

logger = logging.getLogger(__name__)

SUITE_NAMES: Tuple[str, ...] = ("limits", "consistency", "density-matrix", "mass")
DEFAULT_SEED = 1729
SUITE_NODES = 200

TABLE_ZETA_3_2 = 2.612375
HE4_TC_EXPECTED = 3.13

# Finite-box laboratory settings
LAB_PARTICLES = 3
LAB_BOX_SIDE = 8.0
LAB_SHELL_MAX = 1
LAB_PAIRS = 20
LAB_TEMPERATURE = 2.0
CLASSICAL_TEMPERATURE = 50.0
CLASSICAL_HBAR_SCALE = 1.0e-2
CLASSICAL_NU_0 = 3160.0
FACTORIZATION_NU_0 = 260.0
FACTORIZATION_BETA_E = 30.0

RPA_HBAR_SCALES: Tuple[float, ...] = (1.0, 0.3, 0.1, 0.03)


class CheckResult(BaseModel):
    """One named check: the measured deviation against its tolerance."""

    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


class SuiteReport(BaseModel):
    suite: str
    seed: int
    passed: bool
    checks: List[CheckResult]

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]


# -------------------------------------------------------------------
# Helpers
# -------------------------------------------------------------------


def suite_grid(n: int = SUITE_NODES) -> QGrid:
    """Reduced log grid used by the suites."""
    return log_grid(DEFAULT_Q_MIN, DEFAULT_Q_MAX, n)


def _he4(temperature: float, hbar_scale: float = 1.0) -> SystemParams:
    return SystemParams.from_preset("he4", temperature=temperature, hbar_scale=hbar_scale)


def _check(name: str, value: float, tolerance: float, detail: str = "") -> CheckResult:
    value = float(value)
    passed = bool(np.isfinite(value) and value <= tolerance)
    if not passed:
        logger.warning("Check %s failed: %.3g > %.3g %s", name, value, tolerance, detail)
    return CheckResult(name=name, passed=passed, value=value, tolerance=tolerance, detail=detail)


def _guarded(name: str, tolerance: float, measure: Callable[[], Tuple[float, str]]) -> CheckResult:
    """Run measure(); a numerical or data failure becomes a failed check."""
    try:
        value, detail = measure()
    except HeliumError as exc:
        logger.error("Check %s raised", name, exc_info=True)
        return CheckResult(name=name, passed=False, value=float("inf"), tolerance=tolerance, detail=str(exc))
    return _check(name, value, tolerance, detail)


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _scaled(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))


# -------------------------------------------------------------------
# Limits
# -------------------------------------------------------------------


def _switch_off(grid: QGrid) -> List[CheckResult]:
    zero = zero_potential()
    t_c = critical_temperature(_he4(1.0))
    temperatures = t_c * np.geomspace(0.1, 4.0, 8)
    worst_s = worst_e = worst_z = 0.0
    q = grid.nodes
    for temperature in temperatures:
        state = _he4(float(temperature))
        ideal = ideal_state(state)
        s0 = ideal_structure_factor(q, ideal)
        s = structure_factor(q, zero, state, ideal=ideal)
        worst_s = max(worst_s, float(np.max(np.abs(s - s0) / s0)))
        e0 = ideal_energy(ideal)
        worst_e = max(worst_e, _relative(energy(zero, state, None, None, grid, ideal), e0))
        worst_z = max(worst_z, abs(ln_partition(zero, state, None, grid, ideal) - ln_z0_ideal(ideal)))
    detail = f"{len(temperatures)} temperatures in [{temperatures[0]:.4g}, {temperatures[-1]:.4g}] K"
    return [
        _check("switch_off_structure_factor", worst_s, 1e-12, detail),
        _check("switch_off_energy", worst_e, 1e-8, detail),
        _check("switch_off_ln_partition", worst_z, 1e-10, detail),
    ]


def _phonon_gas(potential: PairPotential, state: SystemParams, grid: QGrid) -> float:
    """
    (1/N)Σ_q E(q)/(e^{βE(q)} - 1) by adaptive quadrature on the Bogoliubov
    spectrum, with panels scaled by T/c and c the slope at the first node.
    """
    table = spectrum(potential, state, grid)
    scale = state.temperature * grid.nodes[0] / table.energy[0]
    edges = [0.0] + [f * scale for f in (1.0, 10.0, 100.0) if f * scale < grid.q_max] + [grid.q_max]

    def g(q: float) -> float:
        e = float(bogoliubov_energy(q, potential, state))
        x = state.beta * e
        return q * q * e * math.exp(-x) / -math.expm1(-x)

    total = sum(integrate(g, (lo, hi), PHYSICS_SPEC).value for lo, hi in zip(edges[:-1], edges[1:]))
    return total / (2.0 * math.pi**2 * state.density)


def _bogoliubov_limit(grid: QGrid) -> List[CheckResult]:
    potential = make_potential("gaussian")
    temperature = 1e-3 * critical_temperature(_he4(1.0))
    state = _he4(temperature)
    ideal = ideal_state(state)
    q = grid.nodes

    def structure() -> Tuple[float, str]:
        s = structure_factor(q, potential, state, ideal=ideal)
        return float(np.max(np.abs(s - 1.0 / alpha_q(q, potential, state)))), f"T={temperature:.4g} K"

    def phonon_gas() -> Tuple[float, str]:
        e0 = spectrum(potential, state, grid).e0_per_n
        gas = _phonon_gas(potential, state, grid)
        excess = energy(potential, state, None, None, grid, ideal) - e0
        return abs(excess - gas), f"E0/N={e0:.10g} K, phonon gas {gas:.4g} K"

    return [
        _guarded("bogoliubov_structure_factor", 1e-6, structure),
        _guarded("bogoliubov_energy", 1e-9, phonon_gas),
    ]


def _rpa_deviations(potential: PairPotential, hbar_scale: float, grid: QGrid) -> Tuple[float, float, float]:
    state = _he4(CLASSICAL_TEMPERATURE, hbar_scale)
    ideal = ideal_state(state)
    q = grid.nodes
    s_rpa = rpa_structure_factor(q, potential, state)
    s = structure_factor(q, potential, state, ideal=ideal)
    dev_s = float(np.max(np.abs(s - s_rpa) / s_rpa))
    dev_e = _relative(
        energy(potential, state, None, None, grid, ideal), rpa_energy(potential, state, grid, ideal)
    )
    dev_z = _relative(
        ln_partition(potential, state, None, grid, ideal), rpa_ln_partition(potential, state, grid, ideal)
    )
    logger.debug("RPA deviations at hbar scale %g: S %.3g E %.3g lnZ %.3g", hbar_scale, dev_s, dev_e, dev_z)
    return dev_s, dev_e, dev_z


def _classical_limit(grid: QGrid) -> List[CheckResult]:
    potential = make_potential("gaussian")
    try:
        rows = np.array([_rpa_deviations(potential, lam, grid) for lam in RPA_HBAR_SCALES])
    except HeliumError as exc:
        logger.error("Classical limit sweep raised", exc_info=True)
        return [CheckResult(name="rpa_limit", passed=False, value=float("inf"), tolerance=1e-3, detail=str(exc))]

    increase = float(np.max(np.diff(rows, axis=0)))
    detail = "hbar scales " + ", ".join(f"{lam:g}" for lam in RPA_HBAR_SCALES)
    last = rows[-1]
    return [
        _check("rpa_monotone", max(increase, 0.0), 0.0, detail),
        _check("rpa_structure_factor", last[0], 1e-3, f"hbar scale {RPA_HBAR_SCALES[-1]:g}"),
        _check("rpa_energy", last[1], 1e-3, f"hbar scale {RPA_HBAR_SCALES[-1]:g}"),
        _check("rpa_ln_partition", last[2], 1e-3, f"hbar scale {RPA_HBAR_SCALES[-1]:g}"),
    ]


def limits_suite(grid: Optional[QGrid] = None, seed: int = DEFAULT_SEED) -> List[CheckResult]:
    grid = suite_grid() if grid is None else grid
    t_c = critical_temperature(_he4(1.0))
    checks = [
        _check("zeta_3_2", abs(ZETA_3_2 - TABLE_ZETA_3_2), 5e-7, f"zeta(3/2)={ZETA_3_2:.9f}"),
        _check("he4_critical_temperature", abs(t_c - HE4_TC_EXPECTED), 0.01, f"T_c={t_c:.6f} K"),
    ]
    checks += _switch_off(grid)
    checks += _bogoliubov_limit(grid)
    checks += _classical_limit(grid)
    return checks


# -------------------------------------------------------------------
# Consistency
# -------------------------------------------------------------------


def _energy_vs_partition(grid: QGrid, temperatures: Sequence[float] = (1.5, 2.5, 4.0, 6.0)) -> CheckResult:
    potential = make_potential("gaussian")

    def measure() -> Tuple[float, str]:
        worst = 0.0
        for temperature in temperatures:
            state = _he4(temperature)
            beta = state.beta
            h = 1e-5 * beta
            up = ln_partition(potential, state.at_temperature(1.0 / (beta + h)), None, grid)
            down = ln_partition(potential, state.at_temperature(1.0 / (beta - h)), None, grid)
            finite_difference = -(up - down) / (2.0 * h)
            worst = max(worst, _relative(finite_difference, energy(potential, state, None, None, grid)))
        return worst, "T = " + ", ".join(f"{t:g}" for t in temperatures) + " K"

    return _guarded("energy_vs_ln_partition", 1e-5, measure)


def _s0_gradient(
    q_values: Sequence[float] = (0.02, 0.1, 0.3, 1.0),
    temperatures: Sequence[float] = (1.5, 2.5, 4.0, 6.0),
) -> CheckResult:
    q = np.asarray(q_values, dtype=float)

    def measure() -> Tuple[float, str]:
        worst = 0.0
        for temperature in temperatures:
            state = _he4(temperature)
            beta = state.beta
            h = 1e-5 * beta
            up = ideal_structure_factor(q, ideal_state(state.at_temperature(1.0 / (beta + h))))
            down = ideal_structure_factor(q, ideal_state(state.at_temperature(1.0 / (beta - h))))
            analytic = ds0_dbeta(q, ideal_state(state))
            fd = (up - down) / (2.0 * h)
            worst = max(worst, float(np.max(np.abs(analytic - fd) / np.maximum(np.abs(analytic), 1e-8))))
        return worst, f"{q.size * len(temperatures)} (q, T) points"

    return _guarded("ds0_dbeta_gradient", 1e-5, measure)


def _coefficient_identities() -> List[CheckResult]:
    potential = make_potential("gaussian")
    q = np.geomspace(0.2, 3.0, 8)
    worst: Dict[str, float] = {"a1": 0.0, "a2": 0.0, "lambda2": 0.0, "a0": 0.0}
    for temperature in np.geomspace(0.5, 10.0, 8):
        coeffs = a_coefficients(q, potential, _he4(float(temperature)))
        c1b, c2b = coeffs.c1_bar, coeffs.c2_bar
        worst["a1"] = max(worst["a1"], _scaled(coeffs.a1_over_lambda, c1b / c2b))
        worst["a2"] = max(worst["a2"], _scaled(coeffs.a2, c1b * c1b / c2b - c2b + 1.0))
        worst["lambda2"] = max(worst["lambda2"], _scaled(coeffs.lambda2, 0.5 / c2b))
        worst["a0"] = max(worst["a0"], _scaled(coeffs.a0_modes, coeffs.c0_modes))
    detail = "64 (q, T) points"
    return [_check(f"coefficient_identity_{key}", value, 1e-12, detail) for key, value in worst.items()]


def consistency_suite(grid: Optional[QGrid] = None, seed: int = DEFAULT_SEED) -> List[CheckResult]:
    grid = suite_grid() if grid is None else grid
    return [_energy_vs_partition(grid), _s0_gradient()] + _coefficient_identities()


# -------------------------------------------------------------------
# Density-matrix laboratory
# -------------------------------------------------------------------


def _lab_seeds(seed: int) -> range:
    return range(seed, seed + LAB_PAIRS)


def density_matrix_suite(grid: Optional[QGrid] = None, seed: int = DEFAULT_SEED) -> List[CheckResult]:
    modes = box_modes(LAB_BOX_SIDE, LAB_SHELL_MAX)
    configs = [random_configuration(LAB_PARTICLES, LAB_BOX_SIDE, s) for s in _lab_seeds(seed)]
    params = _he4(LAB_TEMPERATURE)
    potential = make_potential("gaussian")
    detail = f"N={LAB_PARTICLES}, L={LAB_BOX_SIDE:g}, {len(modes)} modes, seeds {seed}..{seed + LAB_PAIRS - 1}"

    def switch_off() -> Tuple[float, str]:
        zero = zero_potential()
        worst = 0.0
        for config in configs:
            value = density_matrix(config, zero, params, None, modes)
            worst = max(worst, abs(value.log_r - value.log_r0))
        return worst, detail

    def symmetry() -> Tuple[float, str]:
        worst = 0.0
        for config in configs:
            reference = density_matrix(config, potential, params, None, modes).log_r
            variants = (config.swapped(), config.relabeled((2, 0, 1)), config.relabeled((1, 2, 0), (0, 1, 2)))
            for variant in variants:
                value = density_matrix(variant, potential, params, None, modes).log_r
                worst = max(worst, abs(value - reference) / max(1.0, abs(reference)))
        return worst, detail

    def classical() -> Tuple[float, str]:
        state = _he4(CLASSICAL_TEMPERATURE, CLASSICAL_HBAR_SCALE)
        strong = gaussian_potential(CLASSICAL_NU_0, 1.0)
        worst = 0.0
        for config in configs:
            left, right = config.diagonal(), config.diagonal(primed=True)
            value_left = density_matrix(left, strong, state, None, modes)
            value_right = density_matrix(right, strong, state, None, modes)
            model = value_left.log_p - value_right.log_p
            boltzmann = -state.beta * (
                potential_energy_config(left.coords, strong, modes)
                - potential_energy_config(right.coords, strong, modes)
            )
            worst = max(worst, abs(model - boltzmann) / max(1.0, abs(boltzmann)))
        return worst, f"T={CLASSICAL_TEMPERATURE:g} K, hbar scale {CLASSICAL_HBAR_SCALE:g}"

    def ratio_identity() -> Tuple[float, str]:
        spec = box_spectrum(potential, params, modes, LAB_PARTICLES)
        worst = 0.0
        for config in configs:
            value = density_matrix(config, potential, params, None, modes)
            composed = (
                value.log_r0
                + penrose_feenberg_dm(config, spec, params.beta)
                - ideal_penrose_dm(config, params, params.beta, modes)
            )
            worst = max(worst, abs(composed - value.log_r))
        return worst, detail

    def factorization() -> Tuple[float, str]:
        weak = gaussian_potential(FACTORIZATION_NU_0, 1.0)
        spec = box_spectrum(weak, params, modes, LAB_PARTICLES)
        temperature = float(np.min(spec.energy)) / FACTORIZATION_BETA_E
        cold = params.at_temperature(temperature)
        worst = max(factorization_residual(config, weak, cold, modes) for config in configs)
        return worst, f"T={temperature:.6g} K (beta*E_min={FACTORIZATION_BETA_E:g})"

    return [
        _guarded("dm_switch_off", 1e-12, switch_off),
        _guarded("dm_symmetry", 1e-12, symmetry),
        _guarded("dm_classical_ratio", 1e-3, classical),
        _guarded("dm_ratio_identity", 1e-10, ratio_identity),
        _guarded("dm_ground_state_factorization", 1e-6, factorization),
    ]


# -------------------------------------------------------------------
# Effective mass
# -------------------------------------------------------------------


def mass_suite(grid: Optional[QGrid] = None, seed: int = DEFAULT_SEED) -> List[CheckResult]:
    grid = suite_grid() if grid is None else grid
    params = _he4(LAB_TEMPERATURE)
    potential = make_potential("gaussian")

    def chain() -> Tuple[float, str]:
        impurity = impurity_mass(params.mass, potential, potential, params, "zero_T", grid)
        bogoliubov = m_star_bogoliubov(potential, params, grid)
        zero_t = m_star_zero_t(lambda q: 1.0 / alpha_q(q, potential, params), params, grid)
        values = (impurity, bogoliubov, zero_t)
        spread = max(_relative(a, b) for a in values for b in values)
        return spread, f"m*/m={bogoliubov / params.mass:.12g}"

    def ordering() -> Tuple[float, str]:
        s_exp = load_bundled_sq()
        m_zero = m_star_zero_t(s_exp, params, grid)
        m_classical = m_star_classical(s_exp, params, grid)
        violation = max(0.0, m_zero - m_classical, params.mass - m_zero)
        return violation / params.mass, f"zero_T {m_zero / params.mass:.6g}, classical {m_classical / params.mass:.6g}"

    def self_consistent() -> Tuple[float, str]:
        solution = m_star_self_consistent(load_bundled_sq(), params, LAB_TEMPERATURE, grid)
        detail = f"m*/m={solution.m_star / params.mass:.10g}, {solution.iterations} iterations"
        if solution.iterations >= 200:
            return float("inf"), detail
        return solution.residual, detail

    return [
        _guarded("mass_chain", 1e-12, chain),
        _guarded("mass_ordering", 0.0, ordering),
        _guarded("mass_self_consistent", 1e-8, self_consistent),
    ]


# -------------------------------------------------------------------
# Entry point
# -------------------------------------------------------------------

_SUITES: Dict[str, Callable[..., List[CheckResult]]] = {
    "limits": limits_suite,
    "consistency": consistency_suite,
    "density-matrix": density_matrix_suite,
    "mass": mass_suite,
}


def run_verify(suite: str, seed: int = DEFAULT_SEED, grid: Optional[QGrid] = None) -> SuiteReport:
    """
    Run one suite and collect its checks.

    Raises:
        ValueError: unknown suite name
    """
    if suite not in _SUITES:
        raise ValueError(f"Unknown suite '{suite}'. Available: {list(SUITE_NAMES)}")
    logger.info("Running verification suite '%s' (seed %d)", suite, seed)
    checks = _SUITES[suite](grid=grid, seed=seed)
    report = SuiteReport(suite=suite, seed=seed, passed=all(c.passed for c in checks), checks=checks)
    logger.info("Suite '%s': %d/%d checks passed", suite, len(checks) - len(report.failures()), len(checks))
    return report
