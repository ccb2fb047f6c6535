"""
Thermodynamics of the interacting liquid in the pair-correlation
approximation: partition function, internal energy, S(q, T), potential and
kinetic energy per particle, plus the classical random-phase forms used as
limit checks.

All q-sums are per-particle thermodynamic-limit integrals on the grid's
quadrature nodes; the ideal-gas parts are closed forms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from src.helium.core import Extrapolation, QGrid, SystemParams, TabulatedFunction, sum_to_integral
from src.helium.errors import ThermoInstability
from src.helium.ideal_gas import (
    IdealGasState,
    ds0_dbeta,
    ideal_energy,
    ideal_state,
    ln_z0_ideal,
    s0_excess,
    structure_factor as ideal_structure_factor,
)
from src.helium.pair_theory import (
    PairPotential,
    alpha_q,
    free_energy_q,
    ground_state_energy,
    log_one_minus_exp,
    safe_csch,
    safe_sech2,
)

logger = logging.getLogger(__name__)

# Below this q the correlation logarithm is assembled as ln S₀ + ln(D/S₀)
Q_SWITCH: float = 0.05

ENERGY_TERMS = ("ground", "bogoliubov", "ideal_difference", "sinh", "correlation")


def _log_tanh_half(y: np.ndarray) -> np.ndarray:
    """ln tanh(y/2) for y > 0."""
    return log_one_minus_exp(y) - np.log1p(np.exp(-y))


def _tanh_half(y: np.ndarray) -> np.ndarray:
    return np.tanh(0.5 * y)


@dataclass(frozen=True, eq=False)
class _Modes:
    """Per-q ingredients shared by the partition function, S(q) and energy."""

    q: np.ndarray
    alpha: np.ndarray
    energy: np.ndarray
    beta_e: np.ndarray
    x: np.ndarray
    s0: np.ndarray
    delta: np.ndarray
    d_over_s0: np.ndarray
    fused: np.ndarray

    @property
    def log_d(self) -> np.ndarray:
        """ln[1 + S₀Δ]."""
        direct = np.log1p(self.s0 * self.delta)
        return np.where(self.fused, np.log(self.s0) + np.log(self.d_over_s0), direct)

    @property
    def structure_factor(self) -> np.ndarray:
        direct = self.s0 / (1.0 + self.s0 * self.delta)
        return np.where(self.fused, 1.0 / self.d_over_s0, direct)


def _resolve_ideal(params: SystemParams, m_star: Optional[float], ideal: Optional[IdealGasState]) -> IdealGasState:
    if ideal is None:
        return ideal_state(params, m_star)
    if m_star is not None and ideal.m_star != m_star:
        raise ValueError(f"Ideal state built for m*={ideal.m_star}, requested m*={m_star}")
    return ideal


def _modes(
    q: np.ndarray,
    potential: PairPotential,
    params: SystemParams,
    ideal: IdealGasState,
) -> _Modes:
    beta = params.beta
    alpha = np.atleast_1d(alpha_q(q, potential, params))
    energy = alpha * free_energy_q(q, params)
    beta_e = beta * energy
    x = ideal.a * q * q
    s0 = np.atleast_1d(ideal_structure_factor(q, ideal))
    delta = alpha * _tanh_half(beta_e) - _tanh_half(x)

    fused = q < Q_SWITCH
    d_over_s0 = 1.0 / s0 + delta
    if np.any(fused):
        excess = np.atleast_1d(s0_excess(q[fused], ideal))
        d_over_s0[fused] = alpha[fused] * _tanh_half(beta_e[fused]) - _tanh_half(x[fused]) * excess / s0[fused]

    bad = np.nonzero(~(d_over_s0 > 0))[0]
    if bad.size:
        i = int(bad[0])
        raise ThermoInstability(float(q[i]), params.temperature, float(d_over_s0[i]))
    return _Modes(q, alpha, energy, beta_e, x, s0, delta, d_over_s0, fused)


# --------------------------------------------------------------------
# Partition function and structure factor
# --------------------------------------------------------------------


def ln_partition(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    grid: QGrid,
    ideal: Optional[IdealGasState] = None,
) -> float:
    """
    ln Z_N / N = ln Z⁰/N - βE₀/N + (1/N)Σ_q [t₁ + t₂ + t₃] with

        t₁ = ln(1 - e^{-βε*}) - ln(1 - e^{-βE})
        t₂ = ½ ln[α tanh(βE/2) / tanh(βε*/2)]
        t₃ = -½ ln[1 + S₀(α tanh(βE/2) - tanh(βε*/2))]

    Raises:
        ThermoInstability: the last logarithm's argument is not positive
    """
    ideal = _resolve_ideal(params, m_star, ideal)
    modes = _modes(grid.quadrature_nodes, potential, params, ideal)
    t1 = log_one_minus_exp(modes.x) - log_one_minus_exp(modes.beta_e)
    t2 = 0.5 * (np.log(modes.alpha) + _log_tanh_half(modes.beta_e) - _log_tanh_half(modes.x))
    t3 = -0.5 * modes.log_d
    correlation = sum_to_integral(t1 + t2 + t3, params, grid)
    e0 = ground_state_energy(potential, params, grid)
    return ln_z0_ideal(ideal) - params.beta * e0 + correlation


def free_energy(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    grid: QGrid,
    ideal: Optional[IdealGasState] = None,
) -> float:
    return -params.temperature * ln_partition(potential, params, m_star, grid, ideal)


def structure_factor(
    q: np.ndarray,
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float] = None,
    ideal: Optional[IdealGasState] = None,
) -> np.ndarray:
    """S(q) = S₀/[1 + S₀(α tanh(βE/2) - tanh(βε*/2))]."""
    ideal = _resolve_ideal(params, m_star, ideal)
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    values = _modes(q_arr, potential, params, ideal).structure_factor
    return float(values[0]) if np.ndim(q) == 0 else values


# --------------------------------------------------------------------
# Energies
# --------------------------------------------------------------------


def _per_mode_energy(
    q: np.ndarray,
    potential: PairPotential,
    params: SystemParams,
    ideal: IdealGasState,
    m_ss: float,
) -> Dict[str, np.ndarray]:
    """Per-mode integrands of the q-sum terms of E/N on q; ideal_difference holds its sum part."""
    modes = _modes(q, potential, params, ideal)
    eps_ss = free_energy_q(q, params, m_ss)

    d_delta = 0.5 * (modes.alpha * modes.energy * safe_sech2(0.5 * modes.beta_e) - eps_ss * safe_sech2(0.5 * modes.x))
    ds0 = np.atleast_1d(ds0_dbeta(q, ideal, m_ss))
    return {
        "bogoliubov": modes.energy / np.expm1(modes.beta_e),
        "ideal_difference": -eps_ss / np.expm1(modes.x),
        "sinh": -0.5 * (modes.energy * safe_csch(modes.beta_e) - eps_ss * safe_csch(modes.x)),
        "correlation": 0.5 * (d_delta + ds0 / modes.s0 * modes.delta) / modes.d_over_s0,
    }


def _energy_breakdown(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    m_star_star: Optional[float],
    grid: QGrid,
    ideal: Optional[IdealGasState],
) -> Tuple[float, Dict[str, float]]:
    """
    E/N and its five contributions, keyed by ENERGY_TERMS.

    The q-sum terms are integrated as one fused integrand; only that sum is
    checked for a truncation tail. The contributions are diagnostics on the
    same nodes and add up to the total to rounding.
    """
    ideal = _resolve_ideal(params, m_star, ideal)
    m_ss = ideal.m_star if m_star_star is None else float(m_star_star)
    q = grid.quadrature_nodes
    per_mode = _per_mode_energy(q, potential, params, ideal, m_ss)

    ground = ground_state_energy(potential, params, grid)
    closed_form = ideal.m_star / m_ss * ideal_energy(ideal)
    total = ground + closed_form + sum_to_integral(sum(per_mode.values()), params, grid)

    prefactor = 1.0 / (2.0 * math.pi**2 * params.density)
    terms = {name: prefactor * grid.integrate(q * q * values) for name, values in per_mode.items()}
    terms["ideal_difference"] += closed_form
    terms["ground"] = ground
    return total, {name: terms[name] for name in ENERGY_TERMS}


def energy_terms(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    m_star_star: Optional[float],
    grid: QGrid,
    ideal: Optional[IdealGasState] = None,
) -> Dict[str, float]:
    """
    The five contributions to E/N, keyed by ENERGY_TERMS.

    m_star_star enters through ε**_q = ħ²q²/2m**; it equals m* when the
    effective mass does not depend on temperature.
    """
    return _energy_breakdown(potential, params, m_star, m_star_star, grid, ideal)[1]


def energy(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    m_star_star: Optional[float],
    grid: QGrid,
    ideal: Optional[IdealGasState] = None,
) -> float:
    return _energy_breakdown(potential, params, m_star, m_star_star, grid, ideal)[0]


def _potential_from_s(potential: PairPotential, params: SystemParams, grid: QGrid, s: np.ndarray) -> float:
    q = grid.quadrature_nodes
    return 0.5 * params.density * (potential.nu_0 + sum_to_integral(potential(q) * (s - 1.0), params, grid))


def potential_energy(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    grid: QGrid,
    ideal: Optional[IdealGasState] = None,
) -> float:
    """⟨Φ⟩/N = ρν₀/2 + (ρ/2)(1/N)Σ_q ν_q[S(q) - 1]."""
    ideal = _resolve_ideal(params, m_star, ideal)
    s = _modes(grid.quadrature_nodes, potential, params, ideal).structure_factor
    return _potential_from_s(potential, params, grid, s)


# --------------------------------------------------------------------
# Classical random-phase forms
# --------------------------------------------------------------------


def rpa_structure_factor(q: np.ndarray, potential: PairPotential, params: SystemParams) -> np.ndarray:
    """S(q) = 1/(1 + βρν_q)."""
    return 1.0 / (1.0 + params.beta * params.density * potential(q))


def rpa_ln_partition(
    potential: PairPotential,
    params: SystemParams,
    grid: QGrid,
    ideal: Optional[IdealGasState] = None,
) -> float:
    """ln Z⁰/N - βρν₀/2 - ½(1/N)Σ_q[ln(1 + βρν_q) - βρν_q]."""
    ideal = _resolve_ideal(params, None, ideal)
    u = params.beta * params.density * potential(grid.quadrature_nodes)
    correction = sum_to_integral(np.log1p(u) - u, params, grid)
    return ln_z0_ideal(ideal) - 0.5 * params.beta * params.density * potential.nu_0 - 0.5 * correction


def rpa_energy(
    potential: PairPotential,
    params: SystemParams,
    grid: QGrid,
    ideal: Optional[IdealGasState] = None,
) -> float:
    """E⁰/N + ρν₀/2 - (T/2)(1/N)Σ_q (βρν_q)²/(1 + βρν_q)."""
    ideal = _resolve_ideal(params, None, ideal)
    u = params.beta * params.density * potential(grid.quadrature_nodes)
    correction = sum_to_integral(u * u / (1.0 + u), params, grid)
    return ideal_energy(ideal) + 0.5 * params.density * potential.nu_0 - 0.5 * params.temperature * correction


# --------------------------------------------------------------------
# Temperature-dependent effective mass
# --------------------------------------------------------------------


def m_star_star_table(temperatures: Sequence[float], m_stars: Sequence[float]) -> np.ndarray:
    """
    m** = m*/(1 + βm*·∂(1/m*)/∂β), the derivative by centered differences
    over the table (one-sided at the ends). Returned in input order.
    """
    temps = np.asarray(temperatures, dtype=float)
    masses = np.asarray(m_stars, dtype=float)
    if temps.shape != masses.shape:
        raise ValueError("temperatures and m_stars must have equal length")
    if temps.size < 2:
        return masses.copy()
    order = np.argsort(1.0 / temps)
    betas = 1.0 / temps[order]
    inverse = 1.0 / masses[order]
    slope = np.gradient(inverse, betas)
    result = np.empty_like(masses)
    result[order] = masses[order] / (1.0 + betas * masses[order] * slope)
    return result


# --------------------------------------------------------------------
# Report
# --------------------------------------------------------------------


class ThermoRow(BaseModel):
    """One output row per temperature."""

    temperature: float
    ln_z_per_n: Optional[float] = None
    free_energy_per_n: Optional[float] = None
    energy_per_n: Optional[float] = None
    potential_per_n: Optional[float] = None
    kinetic_per_n: Optional[float] = None
    m_star: float
    m_star_star: float
    fugacity: Optional[float] = None
    condensate_fraction: Optional[float] = None
    status: str = "ok"
    message: str = ""


@dataclass(frozen=True, eq=False)
class ThermoReport:
    temperature: float
    ln_z_per_n: float
    free_energy_per_n: float
    energy_per_n: float
    potential_per_n: float
    kinetic_per_n: float
    s_of_q: TabulatedFunction
    m_star: float
    m_star_star: float
    fugacity: float
    condensate_fraction: float
    terms: Dict[str, float] = field(default_factory=dict)

    def to_record(self) -> ThermoRow:
        return ThermoRow(
            temperature=self.temperature,
            ln_z_per_n=self.ln_z_per_n,
            free_energy_per_n=self.free_energy_per_n,
            energy_per_n=self.energy_per_n,
            potential_per_n=self.potential_per_n,
            kinetic_per_n=self.kinetic_per_n,
            m_star=self.m_star,
            m_star_star=self.m_star_star,
            fugacity=self.fugacity,
            condensate_fraction=self.condensate_fraction,
        )

    def s_rows(self) -> List[Dict[str, float]]:
        return [
            {"temperature": self.temperature, "q": float(q), "s": float(s)}
            for q, s in zip(self.s_of_q.grid.nodes, self.s_of_q.values)
        ]


def thermo_report(
    potential: PairPotential,
    params: SystemParams,
    grid: QGrid,
    m_star: Optional[float] = None,
    m_star_star: Optional[float] = None,
) -> ThermoReport:
    """All thermodynamic outputs at params.temperature."""
    ideal = ideal_state(params, m_star)
    m_ss = ideal.m_star if m_star_star is None else float(m_star_star)

    ln_z = ln_partition(potential, params, ideal.m_star, grid, ideal)
    e_total, terms = _energy_breakdown(potential, params, ideal.m_star, m_ss, grid, ideal)
    s_quad = _modes(grid.quadrature_nodes, potential, params, ideal).structure_factor
    phi = _potential_from_s(potential, params, grid, s_quad)

    s_table = TabulatedFunction(
        grid=grid,
        values=grid.on_nodes(s_quad),
        low=Extrapolation("linear"),
        high=Extrapolation("constant", value=1.0),
    )
    logger.info(
        "T=%.4g K: lnZ/N=%.8g E/N=%.8g K Phi/N=%.8g K", params.temperature, ln_z, e_total, phi
    )
    return ThermoReport(
        temperature=params.temperature,
        ln_z_per_n=ln_z,
        free_energy_per_n=-params.temperature * ln_z,
        energy_per_n=e_total,
        potential_per_n=phi,
        kinetic_per_n=e_total - phi,
        s_of_q=s_table,
        m_star=ideal.m_star,
        m_star_star=m_ss,
        fugacity=ideal.z0,
        condensate_fraction=ideal.condensate_fraction,
        terms=terms,
    )
