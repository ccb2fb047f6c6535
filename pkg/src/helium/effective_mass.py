"""
Effective mass m* of the liquid atoms and M* of an impurity atom.

Every route has the form m/m* = 1 - (1/3N)Σ_q K(q) with a method-specific
kernel K, except the self-consistent route which solves the integral
closure between the measured S(q) and the ideal-gas S₀(q; m*).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.helium.core import ZETA_3_2, QFunction, QGrid, SystemParams, log_grid, sum_to_integral
from src.helium.errors import ConvergenceError, DataError, UnphysicalMassError
from src.helium.ideal_gas import critical_temperature, ideal_state, structure_factor as ideal_structure_factor
from src.helium.pair_theory import PairPotential, alpha_minus_one, alpha_q, free_energy_q
from src.helium.quadrature import fixed_point

logger = logging.getLogger(__name__)

MASS_METHODS: Tuple[str, ...] = ("zero_T", "classical", "sewed", "self_consistent")

# ∫_0^∞ q²[1 - tanh(βħ²q²/4m*)] dq = CLOSURE_CONSTANT·(m*/βħ²)^{3/2}
CLOSURE_CONSTANT: float = math.sqrt(math.pi) * (math.sqrt(2.0) - 1.0) * ZETA_3_2


@dataclass(frozen=True)
class MassSolution:
    m_star: float
    method: str
    temperature: float
    residual: float = 0.0
    iterations: int = 0
    history: List[Tuple[float, float]] = field(default_factory=list)

    def to_record(self, mass: float) -> Dict[str, float]:
        return {
            "temperature": self.temperature,
            "method": self.method,
            "m_star": self.m_star,
            "m_star_over_m": self.m_star / mass,
            "residual": self.residual,
            "iterations": self.iterations,
        }


def _grid(grid: Optional[QGrid]) -> QGrid:
    return grid if grid is not None else log_grid()


def _sample(f: QFunction, q: np.ndarray) -> np.ndarray:
    return np.asarray(f(q), dtype=float) * np.ones_like(q)


def _check_positive(s: np.ndarray, q: np.ndarray) -> None:
    bad = np.nonzero(~(s > 0))[0]
    if bad.size:
        i = int(bad[0])
        raise DataError(f"S(q) must be positive; S({q[i]:.6g}) = {s[i]:.6g}", q=float(q[i]))


def _renormalized(mass: float, kernel: np.ndarray, params: SystemParams, grid: QGrid, method: str) -> float:
    total = sum_to_integral(kernel, params, grid) / 3.0
    if total >= 1.0:
        raise UnphysicalMassError(method, total)
    logger.debug("%s: renormalization sum %.10g", method, total)
    return mass / (1.0 - total)


# --------------------------------------------------------------------
# Limiting formulas
# --------------------------------------------------------------------


def m_star_zero_t(s_of_q: QFunction, params: SystemParams, grid: Optional[QGrid] = None) -> float:
    """m/m* = 1 - (1/3N)Σ[S(q) - 1]²/[S(q) + 1]."""
    grid = _grid(grid)
    q = grid.quadrature_nodes
    s = _sample(s_of_q, q)
    _check_positive(s, q)
    return _renormalized(params.mass, (s - 1.0) ** 2 / (s + 1.0), params, grid, "zero_T")


def m_star_classical(s_of_q: QFunction, params: SystemParams, grid: Optional[QGrid] = None) -> float:
    """m/m* = 1 - (1/3N)Σ[S(q) - 1]²."""
    grid = _grid(grid)
    q = grid.quadrature_nodes
    s = _sample(s_of_q, q)
    _check_positive(s, q)
    return _renormalized(params.mass, (s - 1.0) ** 2, params, grid, "classical")


def m_star_bogoliubov(potential: PairPotential, params: SystemParams, grid: Optional[QGrid] = None) -> float:
    """m/m* = 1 - (1/3N)Σ(α_q - 1)²/[α_q(α_q + 1)]."""
    grid = _grid(grid)
    q = grid.quadrature_nodes
    alpha = alpha_q(q, potential, params)
    am1 = alpha_minus_one(q, potential, params)
    return _renormalized(params.mass, am1 * am1 / (alpha * (alpha + 1.0)), params, grid, "bogoliubov")


def impurity_mass(
    impurity_mass_amu: float,
    mbar_nu: PairPotential,
    potential: PairPotential,
    params: SystemParams,
    mode: str = "zero_T",
    grid: Optional[QGrid] = None,
) -> float:
    """
    Effective mass M* of an impurity of bare mass M coupled to the liquid by ν̄_q.

    zero_T: M/M* = 1 - (1/3N)Σ g²/[α(1 + αμ)]·[1 - (1 - μ)/(1 + αμ)]² with
    μ = M/m and g = 2ρν̄_q/(ħ²q²/2m)/(α_q + 1), which is α_q - 1 for ν̄ = ν.

    classical: M/M* = 1 - (1/3N)Σ[βρν̄_q/(1 + βρν_q)]².
    """
    if impurity_mass_amu <= 0:
        raise ValueError(f"Impurity mass must be positive, got {impurity_mass_amu}")
    grid = _grid(grid)
    q = grid.quadrature_nodes
    nu_bar = mbar_nu(q)

    if mode == "zero_T":
        mu = impurity_mass_amu / params.mass
        alpha = alpha_q(q, potential, params)
        g = 2.0 * params.density * nu_bar / free_energy_q(q, params) / (alpha + 1.0)
        one_plus = 1.0 + alpha * mu
        kernel = g * g / (alpha * one_plus) * (1.0 - (1.0 - mu) / one_plus) ** 2
    elif mode == "classical":
        if params.temperature <= 0:
            raise ValueError("Classical impurity mass needs T > 0")
        coupling = params.beta * params.density
        one_plus = 1.0 + coupling * potential(q)
        if np.any(one_plus <= 0):
            i = int(np.nonzero(one_plus <= 0)[0][0])
            raise DataError(f"1 + beta*rho*nu_q <= 0 at q={q[i]:.6g}", q=float(q[i]))
        kernel = (coupling * nu_bar / one_plus) ** 2
    else:
        raise ValueError(f"Unknown impurity mode '{mode}'. Use 'zero_T' or 'classical'")
    return _renormalized(impurity_mass_amu, kernel, params, grid, f"impurity_{mode}")


# --------------------------------------------------------------------
# Classical impurity thermodynamics
# --------------------------------------------------------------------


@dataclass(frozen=True)
class ImpurityThermo:
    """Excess ln Z_i over V(M/2πβħ²)^{3/2}, the added energy ΔE and M*."""

    ln_z_excess: float
    delta_energy: float
    effective_mass: float


def impurity_classical_thermo(
    impurity_mass_amu: float,
    mbar_nu: PairPotential,
    potential: PairPotential,
    params: SystemParams,
    grid: Optional[QGrid] = None,
) -> ImpurityThermo:
    grid = _grid(grid)
    q = grid.quadrature_nodes
    beta, rho, temperature = params.beta, params.density, params.temperature
    u_bar = beta * rho * mbar_nu(q)
    one_plus = 1.0 + beta * rho * potential(q)

    first = sum_to_integral(u_bar * u_bar / one_plus, params, grid)
    second = sum_to_integral((u_bar / one_plus) ** 2, params, grid)
    ln_z_excess = -beta * rho * mbar_nu.nu_0 + 0.5 * first
    delta_energy = 1.5 * temperature + rho * mbar_nu.nu_0 - 0.5 * temperature * (first + second)
    m_eff = impurity_mass(impurity_mass_amu, mbar_nu, potential, params, mode="classical", grid=grid)
    return ImpurityThermo(ln_z_excess=ln_z_excess, delta_energy=delta_energy, effective_mass=m_eff)


def effective_liquid_potential(
    mbar_nu: PairPotential,
    potential: PairPotential,
    params: SystemParams,
    n_particles: int,
) -> PairPotential:
    """ν̃_q = ν_q + βν̄_q²/[V(1 + βρν_q)] for N liquid atoms; ν₀ is unchanged."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    volume = n_particles / params.density
    beta, rho = params.beta, params.density

    def nu(q: np.ndarray) -> np.ndarray:
        nu_q = potential(q)
        return nu_q + beta * mbar_nu(q) ** 2 / (volume * (1.0 + beta * rho * nu_q))

    return PairPotential(name=f"{potential.name}+impurity", nu=nu, nu_0=potential.nu_0)


# --------------------------------------------------------------------
# Temperature-dependent prescriptions
# --------------------------------------------------------------------


def m_star_sewed(
    s_exp: QFunction,
    params: SystemParams,
    temperature: float,
    t_ref: Optional[float] = None,
    grid: Optional[QGrid] = None,
) -> float:
    """m*_0 + (m*_cl - m*_0)(1 - e^{-T/T_ref}); T_ref defaults to T_c of the bare gas."""
    if temperature < 0:
        raise ValueError("Temperature must be >= 0")
    t_ref = critical_temperature(params) if t_ref is None else float(t_ref)
    if t_ref <= 0:
        raise ValueError("T_ref must be positive")
    m_zero = m_star_zero_t(s_exp, params, grid)
    m_classical = m_star_classical(s_exp, params, grid)
    weight = -math.expm1(-temperature / t_ref)
    return m_zero + (m_classical - m_zero) * weight


def closure_sides(
    s_exp: QFunction, params: SystemParams, m_star: float, grid: QGrid
) -> Tuple[float, float, float]:
    """
    Terms of the self-consistency condition at params.temperature:

        A = ∫q²{1/S - α tanh(βE/2)} dq with α = 1/S, E = αħ²q²/2m
        B = ∫q²[1/S₀(q; m*) - 1] dq
        C = CLOSURE_CONSTANT·(m*T/ħ²)^{3/2}

    The condition is A = B + C.
    """
    q = grid.quadrature_nodes
    s = _sample(s_exp, q)
    _check_positive(s, q)
    beta_e = params.beta * free_energy_q(q, params) / s
    # 1 - tanh(y/2) = 2e^{-y}/(1 + e^{-y})
    decay = np.exp(-beta_e)
    left = grid.integrate(q * q / s * 2.0 * decay / (1.0 + decay))
    s0 = ideal_structure_factor(q, ideal_state(params, m_star))
    right_ideal = grid.integrate(q * q * (1.0 / s0 - 1.0))
    thermal = CLOSURE_CONSTANT * (params.temperature / params.hbar2_over(m_star)) ** 1.5
    return left, right_ideal, thermal


def m_star_self_consistent(
    s_exp: QFunction,
    params: SystemParams,
    temperature: Optional[float] = None,
    grid: Optional[QGrid] = None,
    damping: float = 0.5,
    tol: float = 1.0e-12,
    max_iter: int = 200,
) -> MassSolution:
    """
    Solve A = B(m*) + C(m*) for m* by damped iteration seeded at m_star_zero_t.

    Each step takes C = A - B(m*) and inverts C(m*') = C for m*'.

    Raises:
        ConvergenceError: no fixed point within max_iter (history attached)
        DataError: A - B(m*) not positive, so the closure has no solution
    """
    grid = _grid(grid)
    if temperature is not None:
        params = params.at_temperature(temperature)
    if params.temperature <= 0:
        raise ValueError("The self-consistent mass needs T > 0")

    def update(m_star: float) -> float:
        left, right_ideal, _ = closure_sides(s_exp, params, m_star, grid)
        target = left - right_ideal
        if target <= 0:
            raise DataError(
                f"Closure target {target:.6g} <= 0 at m*={m_star:.6g}; S(q) inconsistent with T={params.temperature:g} K"
            )
        return params.mass * (target / CLOSURE_CONSTANT) ** (2.0 / 3.0) * params.hbar2_over_m / params.temperature

    seed = m_star_zero_t(s_exp, params, grid)
    try:
        result = fixed_point(update, seed, damping=damping, tol=tol * params.mass, max_iter=max_iter)
    except ConvergenceError:
        logger.error("Self-consistent m* did not converge at T=%.4g K", params.temperature, exc_info=True)
        raise

    left, right_ideal, thermal = closure_sides(s_exp, params, result.value, grid)
    residual = abs(left - right_ideal - thermal) / abs(left)
    logger.info(
        "Self-consistent m*/m=%.10g at T=%.4g K after %d iterations (residual %.2g)",
        result.value / params.mass,
        params.temperature,
        result.iterations,
        residual,
    )
    return MassSolution(
        m_star=result.value,
        method="self_consistent",
        temperature=params.temperature,
        residual=residual,
        iterations=result.iterations,
        history=result.history,
    )


def mass_solution(
    s_exp: QFunction,
    params: SystemParams,
    temperature: float,
    method: str,
    grid: Optional[QGrid] = None,
    t_ref: Optional[float] = None,
) -> MassSolution:
    if method == "zero_T":
        return MassSolution(m_star_zero_t(s_exp, params, grid), method, temperature)
    if method == "classical":
        return MassSolution(m_star_classical(s_exp, params, grid), method, temperature)
    if method == "sewed":
        return MassSolution(m_star_sewed(s_exp, params, temperature, t_ref, grid), method, temperature)
    if method == "self_consistent":
        return m_star_self_consistent(s_exp, params, temperature, grid)
    raise ValueError(f"Unknown mass method '{method}'. Available: {list(MASS_METHODS)}")


def mass_table(
    s_exp: QFunction,
    params: SystemParams,
    temperatures: Sequence[float],
    method: str,
    grid: Optional[QGrid] = None,
) -> List[MassSolution]:
    """One MassSolution per temperature."""
    return [mass_solution(s_exp, params, float(t), method, grid) for t in temperatures]
