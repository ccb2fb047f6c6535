"""
Ideal Bose gas of particles with (possibly renormalized) mass m* at the
liquid density: fugacity, condensate fraction, structure factor S₀(q), its
β-derivative and the canonical free energy and energy per particle.

Kernel integrals are done in the dimensionless variables s = p·sqrt(a),
k = q·sqrt(a) with a = βħ²/(2m*), and cached on (k, ln z).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, List, Optional, Union

import numpy as np
from scipy.special import gamma, zetac

from src.helium.core import ZETA_3_2, SystemParams
from src.helium.quadrature import PHYSICS_SPEC, RootSpec, find_root, integrate

logger = logging.getLogger(__name__)

_SERIES_TERMS = 60
_ASYMPTOTIC_TERMS = 40
# e^{-690} is below the smallest normal double
_EXP_CUTOFF = 690.0

ArrayLike = Union[float, np.ndarray]


# --------------------------------------------------------------------
# Bose functions
# --------------------------------------------------------------------


def bose_function(s: float, z: float) -> float:
    """
    g_s(z) = Σ_{k≥1} z^k / k^s for 0 <= z <= 1.

    Power series for z <= 0.5; otherwise the expansion in α = -ln z around
    z = 1, Γ(1-s)α^{s-1} + Σ_k ζ(s-k)(-α)^k/k!, valid for non-integer s.
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"Fugacity must lie in [0, 1], got {z}")
    if z == 0.0:
        return 0.0
    if z <= 0.5:
        k = np.arange(1, _SERIES_TERMS + 1, dtype=float)
        return float(np.sum(z**k / k**s))

    alpha = -math.log(z)
    if alpha == 0.0:
        if s <= 1.0:
            return math.inf
        return float(zetac(s) + 1.0)
    total = float(gamma(1.0 - s)) * alpha ** (s - 1.0)
    term = 1.0
    for k in range(_ASYMPTOTIC_TERMS + 1):
        if k:
            term *= -alpha / k
        total += float(zetac(s - k) + 1.0) * term
    return total


def g12(z: float) -> float:
    return bose_function(0.5, z)


def g32(z: float) -> float:
    return bose_function(1.5, z)


def g52(z: float) -> float:
    return bose_function(2.5, z)


# --------------------------------------------------------------------
# State
# --------------------------------------------------------------------


def critical_temperature(params: SystemParams, m_star: Optional[float] = None) -> float:
    """T_c = 2πħ²/m* · (ρ/ζ(3/2))^{2/3}."""
    return 2.0 * math.pi * params.hbar2_over(m_star) * (params.density / ZETA_3_2) ** (2.0 / 3.0)


def degeneracy(params: SystemParams, m_star: Optional[float] = None) -> float:
    """ρλ_T³ for particles of mass m*."""
    return params.density * params.thermal_wavelength(m_star) ** 3


def solve_fugacity(params: SystemParams, m_star: Optional[float] = None) -> float:
    """
    Fugacity z of the ideal gas from g_{3/2}(z) = ρλ³; z = 1 when ρλ³ >= ζ(3/2).

    Raises:
        RootBracketError: the bracket did not straddle the root
    """
    t = degeneracy(params, m_star)
    if t >= ZETA_3_2:
        return 1.0
    lo = 0.5 * t / (1.0 + t)
    hi = min(1.0, t)
    return find_root(lambda z: g32(z) - t, RootSpec(bracket=(lo, hi)))


@dataclass(frozen=True)
class IdealGasState:
    params: SystemParams
    m_star: float
    z0: float
    t_c: float
    condensate_fraction: float

    @property
    def log_z(self) -> float:
        return math.log(self.z0)

    @property
    def a(self) -> float:
        """βħ²/(2m*) in Å²; β·ε*_q = a·q²."""
        return 0.5 * self.params.beta * self.params.hbar2_over(self.m_star)

    @property
    def lambda3(self) -> float:
        return self.params.thermal_wavelength(self.m_star) ** 3

    @property
    def degeneracy(self) -> float:
        return self.params.density * self.lambda3

    @property
    def condensed(self) -> bool:
        return self.z0 == 1.0


def ideal_state(params: SystemParams, m_star: Optional[float] = None) -> IdealGasState:
    if params.temperature <= 0:
        raise ValueError("The ideal reference gas needs T > 0")
    m_star = params.mass if m_star is None else float(m_star)
    z0 = solve_fugacity(params, m_star)
    t_c = critical_temperature(params, m_star)
    f0 = max(0.0, 1.0 - (params.temperature / t_c) ** 1.5)
    logger.debug("ideal state T=%.4g m*=%.5g: z=%.12g f0=%.6g", params.temperature, m_star, z0, f0)
    return IdealGasState(params=params, m_star=m_star, z0=z0, t_c=t_c, condensate_fraction=f0)


# --------------------------------------------------------------------
# Kernels
# --------------------------------------------------------------------

# Geometric growth of the panels between s = 2k and the cutoff
_PANEL_RATIO = 8.0
# Later panels only need to resolve this fraction of rel_tol·|running total|
_PANEL_SHARE = 1.0e-2


def _log_ratio(s: float, k: float, log_z: float) -> float:
    """
    ln[(1 - z e^{-(s+k)²}) / (1 - z e^{-(s-k)²})], written as
    log1p(z e^{-(s-k)²}(1 - e^{-4sk}) / (1 - z e^{-(s-k)²})) so that s << k
    and s >> k keep full relative precision.
    """
    den = -math.expm1(log_z - (s - k) ** 2)
    gap = -math.exp(log_z - (s - k) ** 2) * math.expm1(-4.0 * s * k)
    return math.log1p(gap / den)


def _cutoff(log_z: float) -> float:
    return math.sqrt(_EXP_CUTOFF + log_z)


def _panel_edges(k: float, s_cut: float) -> List[float]:
    """0, k, 2k, then geometric up to the cutoff; the log singularity sits on an edge."""
    if k >= s_cut:
        return [0.0, s_cut]
    edges = [0.0, k]
    edge = 2.0 * k
    while edge < s_cut:
        edges.append(edge)
        edge *= _PANEL_RATIO
    edges.append(s_cut)
    return edges


def _split_integral(g: Callable[[float], float], k: float, log_z: float) -> float:
    """
    ∫_0^{s_cut} g over panels with edges at the singular point s = k.

    The integrands are positive; each panel after the first is integrated to
    an absolute floor taken from the running total.
    """
    edges = _panel_edges(k, _cutoff(log_z))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        spec = PHYSICS_SPEC
        if total > 0.0:
            spec = replace(PHYSICS_SPEC, abs_tol=_PANEL_SHARE * PHYSICS_SPEC.rel_tol * total)
        total += integrate(g, (lo, hi), spec).value
    return total


@lru_cache(maxsize=65536)
def _pair_kernel(k: float, log_z: float) -> float:
    """J(k) = ∫ s n(s) L(s, k) ds; J -> π² as k -> 0 when z = 1."""

    def g(s: float) -> float:
        return s / math.expm1(s * s - log_z) * _log_ratio(s, k, log_z)

    return _split_integral(g, k, log_z)


@lru_cache(maxsize=65536)
def _derivative_kernel(power: int, k: float, log_z: float) -> float:
    """K_n(k) = ∫ s^n L(s, k) / sinh²((s² - ln z)/2) ds."""

    def g(s: float) -> float:
        half = 0.5 * (s * s - log_z)
        if half > 0.5 * _EXP_CUTOFF:
            return 0.0
        return s**power * _log_ratio(s, k, log_z) / math.sinh(half) ** 2

    return _split_integral(g, k, log_z)


# --------------------------------------------------------------------
# Structure factor
# --------------------------------------------------------------------


def occupation(q: ArrayLike, state: IdealGasState) -> ArrayLike:
    """Bose occupation n_q = 1/(z⁻¹ e^{βε*_q} - 1)."""
    q = np.asarray(q, dtype=float)
    return 1.0 / np.expm1(state.a * q * q - state.log_z)


def _exchange_term(q: np.ndarray, state: IdealGasState) -> np.ndarray:
    """(1/N)Σ_p n_p n_{p+q}, excited states only."""
    sqrt_a = math.sqrt(state.a)
    prefactor = 1.0 / (8.0 * math.pi**2 * state.params.density * state.a**1.5)
    out = np.empty_like(q)
    for i, q_i in enumerate(q.flat):
        k = float(q_i) * sqrt_a
        out.flat[i] = prefactor * _pair_kernel(k, state.log_z) / k
    return out


def structure_factor(q: ArrayLike, state: IdealGasState) -> ArrayLike:
    """S₀(q) = 1 + 2 f₀ n_q + (1/N)Σ_p n_p n_{p+q}."""
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(q_arr <= 0):
        raise ValueError("S0(q) is defined for q > 0 only")
    values = 1.0 + 2.0 * state.condensate_fraction * occupation(q_arr, state) + _exchange_term(q_arr, state)
    return float(values[0]) if np.ndim(q) == 0 else values


def s0_excess(q: ArrayLike, state: IdealGasState) -> ArrayLike:
    """S₀(q) - coth(βε*_q/2), finite as q -> 0 above T_c and free of cancellation below."""
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    x = state.a * q_arr * q_arr
    values = 2.0 * (state.condensate_fraction * occupation(q_arr, state) - 1.0 / np.expm1(x))
    values = values + _exchange_term(q_arr, state)
    return float(values[0]) if np.ndim(q) == 0 else values


def ds0_dbeta(
    q: ArrayLike, state: IdealGasState, m_star_star: Optional[float] = None
) -> ArrayLike:
    """
    ∂S₀/∂β at fixed density.

    With a temperature-dependent m*, βε*_q differentiates to ε**_q where
    1/m** = ∂(β/m*)/∂β; m_star_star defaults to m* (fixed mass).
    """
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    params = state.params
    beta = params.beta
    m_ss = state.m_star if m_star_star is None else float(m_star_star)
    r = state.m_star / m_ss
    eps_ss = 0.5 * params.hbar2_over(m_ss) * q_arr * q_arr
    x = state.a * q_arr * q_arr
    n_q = occupation(q_arr, state)

    values = np.zeros_like(q_arr)
    if state.condensed:
        t_ratio = (params.temperature / state.t_c) ** 1.5
        values += 3.0 * params.temperature * t_ratio * n_q
        values -= 0.5 * eps_ss * state.condensate_fraction / np.sinh(0.5 * x) ** 2
        d_log_z = 0.0
    else:
        d_log_z = r * dlnz_dbeta(state)

    sqrt_a = math.sqrt(state.a)
    prefactor = 1.0 / (16.0 * math.pi**2 * params.density * state.a**1.5)
    for i, q_i in enumerate(q_arr.flat):
        k = float(q_i) * sqrt_a
        bracket = r / beta * _derivative_kernel(3, k, state.log_z)
        if d_log_z:
            bracket -= d_log_z * _derivative_kernel(1, k, state.log_z)
        values.flat[i] -= prefactor * bracket / k
    return float(values[0]) if np.ndim(q) == 0 else values


# --------------------------------------------------------------------
# Thermodynamics
# --------------------------------------------------------------------


def dlnz_dbeta(state: IdealGasState) -> float:
    """∂ ln z₀/∂β at fixed density and mass; zero in the condensed phase."""
    if state.condensed:
        return 0.0
    return 1.5 / state.params.beta * g32(state.z0) / g12(state.z0)


def ln_z0_ideal(state: IdealGasState) -> float:
    """Canonical ln Z⁰/N = g_{5/2}(z)/(ρλ³) - ln z."""
    return g52(state.z0) / state.degeneracy - state.log_z


def ideal_energy(state: IdealGasState) -> float:
    """E⁰/N = (3/2) T g_{5/2}(z)/(ρλ³)."""
    return 1.5 * state.params.temperature * g52(state.z0) / state.degeneracy
