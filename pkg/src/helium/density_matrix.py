"""
Finite-box laboratory for the N-particle density matrix.

A handful of particles (N <= 8) in a periodic cube of side L; wave vectors
are the multiples of 2π/L inside a shell |n|² <= shell_max, and every q-sum
is a finite sum over those vectors (both q and -q included). The ideal-gas
factor R⁰ sums over all N! permutations in the log domain.

Only configuration ratios and factorization structure are meaningful here;
the absolute normalization of the finite-box forms is not checked.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from src.helium.core import SystemParams, rho_q
from src.helium.pair_theory import (
    PairPotential,
    alpha_minus_one,
    alpha_q,
    c0_terms,
    c_functions,
    free_energy_q,
    log_one_minus_exp,
    safe_coth,
    safe_csch,
)

logger = logging.getLogger(__name__)

MAX_PARTICLES = 8
_IMAGE_TERMS = 8


# --------------------------------------------------------------------
# Types
# --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Configuration:
    """Two position sets x (coords) and x' (coords_primed) in a periodic cube."""

    coords: np.ndarray
    coords_primed: np.ndarray
    box_side: float
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.coords, dtype=float))
        xp = np.atleast_2d(np.asarray(self.coords_primed, dtype=float))
        if x.shape != xp.shape or x.ndim != 2 or x.shape[1] != 3:
            raise ValueError(f"coords and coords_primed must both be (n, 3), got {x.shape} and {xp.shape}")
        if not 1 <= x.shape[0] <= MAX_PARTICLES:
            raise ValueError(f"Particle count must lie in [1, {MAX_PARTICLES}], got {x.shape[0]}")
        if self.box_side <= 0:
            raise ValueError("box_side must be positive")
        for name, arr in (("coords", x), ("coords_primed", xp)):
            if np.any(arr < 0) or np.any(arr >= self.box_side):
                raise ValueError(f"{name} must lie in [0, {self.box_side})")
        object.__setattr__(self, "coords", x)
        object.__setattr__(self, "coords_primed", xp)

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    @property
    def volume(self) -> float:
        return self.box_side**3

    def swapped(self) -> "Configuration":
        return Configuration(self.coords_primed, self.coords, self.box_side, self.seed)

    def relabeled(self, order: Sequence[int], order_primed: Optional[Sequence[int]] = None) -> "Configuration":
        order_primed = order if order_primed is None else order_primed
        return Configuration(
            self.coords[list(order)], self.coords_primed[list(order_primed)], self.box_side, self.seed
        )

    def diagonal(self, primed: bool = False) -> "Configuration":
        """x = x' taken from coords (or coords_primed)."""
        base = self.coords_primed if primed else self.coords
        return Configuration(base, base, self.box_side, self.seed)


def random_configuration(n: int, box_side: float, seed: int, diagonal: bool = False) -> Configuration:
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, box_side, size=(n, 3))
    primed = coords.copy() if diagonal else rng.uniform(0.0, box_side, size=(n, 3))
    return Configuration(coords, primed, box_side, seed)


@dataclass(frozen=True)
class DmValue:
    log_r0: float
    log_p: float

    @property
    def log_r(self) -> float:
        return self.log_r0 + self.log_p


@dataclass(frozen=True, eq=False)
class BoxModes:
    box_side: float
    shell_max: int
    vectors: np.ndarray
    magnitudes: np.ndarray

    def __len__(self) -> int:
        return int(self.magnitudes.size)


def box_modes(box_side: float, shell_max: int) -> BoxModes:
    """All q = 2πn/L with 0 < |n|² <= shell_max."""
    if shell_max < 1:
        raise ValueError("shell_max must be >= 1")
    reach = int(math.isqrt(shell_max))
    span = np.arange(-reach, reach + 1)
    n = np.array(np.meshgrid(span, span, span, indexing="ij")).reshape(3, -1).T
    norm2 = np.sum(n * n, axis=1)
    n = n[(norm2 > 0) & (norm2 <= shell_max)]
    vectors = 2.0 * math.pi / box_side * n.astype(float)
    return BoxModes(box_side, shell_max, vectors, np.linalg.norm(vectors, axis=1))


@dataclass(frozen=True, eq=False)
class BoxSpectrum:
    """α_q, E(q) on the box vectors and the extensive ground-state energy."""

    modes: BoxModes
    n_particles: int
    alpha: np.ndarray
    energy: np.ndarray
    e0: float

    @property
    def volume(self) -> float:
        return self.modes.box_side**3


@dataclass(frozen=True, eq=False)
class BoxCoefficients:
    c0: float
    c1: np.ndarray
    c2: np.ndarray
    spectrum: BoxSpectrum


# --------------------------------------------------------------------
# Ideal factor
# --------------------------------------------------------------------


def _log_axis_kernel(d: np.ndarray, c: float, box_side: float) -> np.ndarray:
    """ln Σ_n exp[-c(d + nL)²], by images or by the Poisson-dual cosine series."""
    d = np.asarray(d, dtype=float)
    if c * box_side**2 >= math.pi:
        shifts = box_side * np.arange(-_IMAGE_TERMS, _IMAGE_TERMS + 1)
        return logsumexp(-c * (d[..., None] + shifts) ** 2, axis=-1)
    k = np.arange(1, _IMAGE_TERMS + 1)
    weights = np.exp(-(math.pi * k) ** 2 / (c * box_side**2))
    series = 1.0 + 2.0 * np.sum(weights * np.cos(2.0 * math.pi * k * d[..., None] / box_side), axis=-1)
    return 0.5 * math.log(math.pi / c) - math.log(box_side) + np.log(series)


def ideal_dm(config: Configuration, params: SystemParams, m_star: Optional[float], beta: float) -> float:
    """
    ln R⁰_N(x'|x) = (3N/2) ln(m*/2πβħ²) - ln N!
                    + ln Σ_Q exp[-(m*/2βħ²) Σ_j (r'_j - r_Qj)²],
    distances taken over periodic images.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    h2ms = params.hbar2_over(m_star)
    c = 1.0 / (2.0 * beta * h2ms)
    n = config.n
    diff = config.coords_primed[:, None, :] - config.coords[None, :, :]
    pair_log = _log_axis_kernel(diff, c, config.box_side).sum(axis=-1)

    perms = np.array(list(itertools.permutations(range(n))))
    per_perm = pair_log[np.arange(n)[None, :], perms].sum(axis=1)
    prefactor = 1.5 * n * math.log(c / math.pi)
    return float(prefactor + logsumexp(per_perm) - math.lgamma(n + 1))


# --------------------------------------------------------------------
# Pair factor
# --------------------------------------------------------------------


def box_spectrum(potential: PairPotential, params: SystemParams, modes: BoxModes, n_particles: int) -> BoxSpectrum:
    """Spectrum at the box density N/L³; E₀ = N(N-1)ν₀/2V - Σ_q (ħ²q²/8m)(α_q - 1)²."""
    volume = modes.box_side**3
    box_params = params.with_density(n_particles / volume)
    q = modes.magnitudes
    eps = free_energy_q(q, box_params)
    alpha = alpha_q(q, potential, box_params)
    am1 = alpha_minus_one(q, potential, box_params)
    e0 = n_particles * (n_particles - 1) * potential.nu_0 / (2.0 * volume) - float(np.sum(0.25 * eps * am1 * am1))
    return BoxSpectrum(modes, n_particles, alpha, alpha * eps, e0)


def box_coefficients(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    modes: BoxModes,
    n_particles: int,
) -> BoxCoefficients:
    """c₀ (extensive), c₁ and c₂ on the box vectors at params.temperature."""
    spec = box_spectrum(potential, params, modes, n_particles)
    box_params = params.with_density(n_particles / spec.volume)
    c1, c2 = c_functions(modes.magnitudes, potential, box_params, m_star)
    c0 = -box_params.beta * spec.e0 + float(np.sum(c0_terms(modes.magnitudes, potential, box_params, m_star)))
    return BoxCoefficients(c0=c0, c1=c1, c2=c2, spectrum=spec)


def _collective(config: Configuration, modes: BoxModes) -> Tuple[np.ndarray, np.ndarray]:
    return rho_q(config.coords, modes.vectors), rho_q(config.coords_primed, modes.vectors)


def pair_factor(config: Configuration, coefficients: BoxCoefficients, modes: BoxModes) -> float:
    """ln P_N = c₀ - ½Σ_q c₂(|ρ_q|² + |ρ'_q|²) + Σ_q c₁ Re(ρ_q ρ'*_q)."""
    rho, rho_p = _collective(config, modes)
    squares = np.abs(rho) ** 2 + np.abs(rho_p) ** 2
    cross = np.real(rho * np.conj(rho_p))
    return float(coefficients.c0 - 0.5 * np.sum(coefficients.c2 * squares) + np.sum(coefficients.c1 * cross))


def density_matrix(
    config: Configuration,
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    modes: BoxModes,
) -> DmValue:
    """R_N = R⁰_N·P_N for the configuration pair at params.temperature."""
    coefficients = box_coefficients(potential, params, m_star, modes, config.n)
    log_r0 = ideal_dm(config, params, m_star, params.beta)
    log_p = pair_factor(config, coefficients, modes)
    logger.debug("N=%d seed=%s T=%.4g: ln R0=%.10g ln P=%.10g", config.n, config.seed, params.temperature, log_r0, log_p)
    return DmValue(log_r0=log_r0, log_p=log_p)


# --------------------------------------------------------------------
# Comparison forms
# --------------------------------------------------------------------


def _penrose(
    config: Configuration,
    modes: BoxModes,
    alpha: np.ndarray,
    energy: np.ndarray,
    e0: float,
    beta: float,
) -> float:
    rho, rho_p = _collective(config, modes)
    squares = np.abs(rho) ** 2 + np.abs(rho_p) ** 2
    cross = np.real(rho * np.conj(rho_p))
    be = beta * energy
    log_tanh = log_one_minus_exp(be) - np.log1p(np.exp(-be))
    constant = (
        -config.n * math.log(config.volume)
        - beta * e0
        + 0.5 * np.sum(np.log(alpha) + log_tanh)
        - np.sum(log_one_minus_exp(be))
    )
    quadratic = 0.25 * np.sum(squares) - 0.25 * np.sum(
        alpha * safe_coth(be) * squares - 2.0 * alpha * safe_csch(be) * cross
    )
    return float(constant + quadratic)


def penrose_feenberg_dm(config: Configuration, spectrum: BoxSpectrum, beta: float) -> float:
    """Low-temperature comparison form of ln R_N built from α_q, E(q) and E₀, normalized to V^{-N}."""
    return _penrose(config, spectrum.modes, spectrum.alpha, spectrum.energy, spectrum.e0, beta)


def ideal_penrose_dm(
    config: Configuration,
    params: SystemParams,
    beta: float,
    modes: BoxModes,
    m_star: Optional[float] = None,
) -> float:
    """The same form with α_q = 1, E(q) = ħ²q²/2m*, E₀ = 0."""
    energy = free_energy_q(modes.magnitudes, params, m_star)
    return _penrose(config, modes, np.ones_like(energy), energy, 0.0, beta)


def ground_state_log(positions: np.ndarray, spectrum: BoxSpectrum) -> float:
    """ln ψ₀ = -(N/2) ln V + ¼Σ_q ln α_q - ¼Σ_q(α_q - 1)|ρ_q|²."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    rho = rho_q(positions, spectrum.modes.vectors)
    n = positions.shape[0]
    return float(
        -0.5 * n * math.log(spectrum.volume)
        + 0.25 * np.sum(np.log(spectrum.alpha))
        - 0.25 * np.sum((spectrum.alpha - 1.0) * np.abs(rho) ** 2)
    )


def factorization_residual(
    config: Configuration,
    potential: PairPotential,
    params: SystemParams,
    modes: BoxModes,
    m_star: Optional[float] = None,
) -> float:
    """|ln R_N(x'|x) - [-βE₀ + ln ψ₀(x) + ln ψ₀(x')]|; vanishes as β -> ∞."""
    value = density_matrix(config, potential, params, m_star, modes)
    spec = box_spectrum(potential, params, modes, config.n)
    target = (
        -params.beta * spec.e0
        + ground_state_log(config.coords, spec)
        + ground_state_log(config.coords_primed, spec)
    )
    return abs(value.log_r - target)


def potential_energy_config(positions: np.ndarray, potential: PairPotential, modes: BoxModes) -> float:
    """Φ = N(N-1)ν₀/2V + (N/2V)Σ_q ν_q(|ρ_q|² - 1)."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    n = positions.shape[0]
    volume = modes.box_side**3
    rho = rho_q(positions, modes.vectors)
    nu = potential(modes.magnitudes)
    return float(
        n * (n - 1) * potential.nu_0 / (2.0 * volume) + n / (2.0 * volume) * np.sum(nu * (np.abs(rho) ** 2 - 1.0))
    )
