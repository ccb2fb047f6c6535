"""
Interaction layer: Fourier potential ν_q, Bogoliubov factor α_q, spectrum
E(q), ground-state energy E₀, the density-matrix coefficients c₀, c₁(q),
c₂(q), and the T = 0 inversion ν_q <- S(q).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.helium.core import (
    Extrapolation,
    QFunction,
    QGrid,
    SystemParams,
    TabulatedFunction,
    sum_to_integral,
)
from src.helium.errors import DataError, StabilityViolation

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Above this argument coth -> 1 and csch -> 2e^{-y}
ASYMPTOTIC_ARGUMENT = 700.0


# --------------------------------------------------------------------
# Overflow-safe hyperbolic functions (arguments >= 0)
# --------------------------------------------------------------------


def safe_coth(y: ArrayLike) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        e2 = np.exp(-2.0 * y)
        value = (1.0 + e2) / (-np.expm1(-2.0 * y))
    return np.where(y > ASYMPTOTIC_ARGUMENT, 1.0, value)


def safe_csch(y: ArrayLike) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        value = 2.0 * np.exp(-y) / (-np.expm1(-2.0 * y))
    return np.where(y > ASYMPTOTIC_ARGUMENT, 2.0 * np.exp(-np.minimum(y, 1.0e4)), value)


def safe_sech2(y: ArrayLike) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    e2 = np.exp(-2.0 * y)
    return 4.0 * e2 / (1.0 + e2) ** 2


def log_one_minus_exp(y: ArrayLike) -> np.ndarray:
    """ln(1 - e^{-y}) for y > 0; log1p branch above ln 2."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(y > np.log(2.0), np.log1p(-np.exp(-y)), np.log(-np.expm1(-y)))


# --------------------------------------------------------------------
# Potentials
# --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairPotential:
    """Fourier components ν_q (K·Å³) for q > 0 together with ν₀."""

    name: str
    nu: QFunction
    nu_0: float

    def __call__(self, q: ArrayLike) -> ArrayLike:
        q_arr = np.asarray(q, dtype=float)
        values = np.asarray(self.nu(q_arr), dtype=float) * np.ones_like(q_arr)
        return float(values) if values.ndim == 0 else values

    def truncated(self, q_cut: float) -> "PairPotential":
        """Same potential with ν_q = 0 for q > q_cut."""
        base = self.nu

        def nu(q: np.ndarray) -> np.ndarray:
            q = np.asarray(q, dtype=float)
            return np.where(q <= q_cut, np.asarray(base(q), dtype=float) * np.ones_like(q), 0.0)

        return replace(self, name=f"{self.name}<{q_cut:g}", nu=nu)

    def scaled(self, factor: float) -> "PairPotential":
        base = self.nu
        return PairPotential(
            name=f"{self.name}*{factor:g}",
            nu=lambda q: factor * np.asarray(base(q), dtype=float),
            nu_0=factor * self.nu_0,
        )


def gaussian_potential(nu_0: float, sigma: float) -> PairPotential:
    return PairPotential(
        name="gaussian",
        nu=lambda q: nu_0 * np.exp(-np.square(np.asarray(q, dtype=float) * sigma)),
        nu_0=nu_0,
    )


def yukawa_potential(nu_0: float, length: float) -> PairPotential:
    """Screened form ν₀/(1 + (qℓ)²)."""
    return PairPotential(
        name="yukawa",
        nu=lambda q: nu_0 / (1.0 + np.square(np.asarray(q, dtype=float) * length)),
        nu_0=nu_0,
    )


def shell_potential(amplitude: float, q_shell: float, width: float, nu_0: float = 0.0) -> PairPotential:
    """ν_q = amplitude on |q - q_shell| <= width, zero elsewhere."""

    def nu(q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.where(np.abs(q - q_shell) <= width, amplitude, 0.0)

    return PairPotential(name="shell", nu=nu, nu_0=nu_0)


def zero_potential() -> PairPotential:
    return PairPotential(name="zero", nu=lambda q: np.zeros_like(np.asarray(q, dtype=float)), nu_0=0.0)


def tabulated_potential(table: TabulatedFunction, nu_0: Optional[float] = None, name: str = "tabulated") -> PairPotential:
    """ν_q from a table; ν₀ defaults to the low-side extrapolation at q = 0."""
    return PairPotential(name=name, nu=table, nu_0=table.at_zero() if nu_0 is None else float(nu_0))


# Named models with default parameters (K·Å³, Å)
POTENTIAL_PRESETS: Dict[str, Dict[str, float]] = {
    "gaussian": {"nu_0": 1250.0, "sigma": 1.0},
    "yukawa": {"nu_0": 800.0, "length": 1.5},
    "shell": {"amplitude": 400.0, "q_shell": 0.785398, "width": 0.05, "nu_0": 0.0},
    "zero": {},
}

_FACTORIES: Dict[str, Callable[..., PairPotential]] = {
    "gaussian": gaussian_potential,
    "yukawa": yukawa_potential,
    "shell": shell_potential,
    "zero": zero_potential,
}


def make_potential(name: str, **overrides: float) -> PairPotential:
    """
    Build a named potential model, preset parameters overridden by keyword.

    Raises:
        KeyError: unknown model name
    """
    key = name.lower()
    if key not in POTENTIAL_PRESETS:
        raise KeyError(f"Unknown potential '{name}'. Available: {sorted(POTENTIAL_PRESETS)}")
    kwargs = {**POTENTIAL_PRESETS[key], **{k: float(v) for k, v in overrides.items()}}
    unknown = set(kwargs) - set(POTENTIAL_PRESETS[key])
    if unknown:
        raise KeyError(f"Unknown parameters for '{name}': {sorted(unknown)}")
    return _FACTORIES[key](**kwargs)


# --------------------------------------------------------------------
# Spectrum
# --------------------------------------------------------------------


def free_energy_q(q: ArrayLike, params: SystemParams, m_star: Optional[float] = None) -> ArrayLike:
    """ħ²q²/2m* in K."""
    q = np.asarray(q, dtype=float)
    return 0.5 * params.hbar2_over(m_star) * q * q


def _coupling(q: np.ndarray, potential: PairPotential, params: SystemParams) -> np.ndarray:
    """2ρν_q/(ħ²q²/2m)."""
    return 2.0 * params.density * potential(q) / free_energy_q(q, params)


def _check_stability(q: np.ndarray, radicand: np.ndarray) -> None:
    bad = np.nonzero(radicand < 0)[0]
    if bad.size:
        i = int(bad[0])
        raise StabilityViolation(float(q[i]), float(radicand[i]))


def alpha_q(q: ArrayLike, potential: PairPotential, params: SystemParams) -> ArrayLike:
    """
    α_q = sqrt(1 + 2ρν_q/(ħ²q²/2m)).

    Raises:
        StabilityViolation: negative radicand at the first offending q
    """
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    radicand = 1.0 + _coupling(q_arr, potential, params)
    _check_stability(q_arr, radicand)
    alpha = np.sqrt(radicand)
    return float(alpha[0]) if np.ndim(q) == 0 else alpha


def alpha_minus_one(q: ArrayLike, potential: PairPotential, params: SystemParams) -> ArrayLike:
    """α_q - 1 without cancellation for weak coupling."""
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    coupling = _coupling(q_arr, potential, params)
    _check_stability(q_arr, 1.0 + coupling)
    values = coupling / (np.sqrt(1.0 + coupling) + 1.0)
    return float(values[0]) if np.ndim(q) == 0 else values


def bogoliubov_energy(q: ArrayLike, potential: PairPotential, params: SystemParams) -> ArrayLike:
    """E(q) = α_q·ħ²q²/2m."""
    return alpha_q(q, potential, params) * free_energy_q(q, params)


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    grid: QGrid
    alpha: np.ndarray
    energy: np.ndarray
    e0_per_n: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"q": self.grid.nodes, "alpha": self.alpha, "energy": self.energy})


def ground_state_energy(potential: PairPotential, params: SystemParams, grid: QGrid) -> float:
    """E₀/N = ρν₀/2 - (1/N)Σ_q (ħ²q²/8m)(α_q - 1)²."""
    q = grid.quadrature_nodes
    am1 = alpha_minus_one(q, potential, params)
    correction = sum_to_integral(0.25 * free_energy_q(q, params) * am1 * am1, params, grid)
    return 0.5 * params.density * potential.nu_0 - correction


def classical_ground_energy(potential: PairPotential, params: SystemParams, grid: QGrid) -> float:
    """ρν₀/2 - (1/2N)Σ_q ρν_q."""
    q = grid.quadrature_nodes
    return 0.5 * params.density * (potential.nu_0 - sum_to_integral(potential(q), params, grid))


def spectrum(potential: PairPotential, params: SystemParams, grid: QGrid) -> SpectrumTable:
    alpha = alpha_q(grid.nodes, potential, params)
    energy = alpha * free_energy_q(grid.nodes, params)
    return SpectrumTable(
        grid=grid,
        alpha=alpha,
        energy=energy,
        e0_per_n=ground_state_energy(potential, params, grid),
    )


# --------------------------------------------------------------------
# Density-matrix coefficients
# --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CCoefficients:
    """c₀ per particle and c₁(q), c₂(q) on the grid nodes at fixed β and m*."""

    grid: QGrid
    c0: float
    c1: np.ndarray
    c2: np.ndarray
    beta: float
    m_star: float


def c_functions(
    q: ArrayLike,
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    c₁(q) = ½[α csch βE - csch βε*], c₂(q) = ½[α coth βE - coth βε*].
    """
    if params.temperature <= 0:
        raise ValueError("c-coefficients need T > 0")
    q = np.atleast_1d(np.asarray(q, dtype=float))
    beta = params.beta
    alpha = alpha_q(q, potential, params)
    be = beta * alpha * free_energy_q(q, params)
    x = beta * free_energy_q(q, params, m_star)
    c1 = 0.5 * (alpha * safe_csch(be) - safe_csch(x))
    c2 = 0.5 * (alpha * safe_coth(be) - safe_coth(x))
    return c1, c2


def c0_terms(
    q: np.ndarray,
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float] = None,
) -> np.ndarray:
    """Per-mode part of c₀: ½[ln(1 - e^{-2βε*}) - ln(1 - e^{-2βE})] + ½ ln α."""
    beta = params.beta
    alpha = alpha_q(q, potential, params)
    be = beta * alpha * free_energy_q(q, params)
    x = beta * free_energy_q(q, params, m_star)
    return 0.5 * (log_one_minus_exp(2.0 * x) - log_one_minus_exp(2.0 * be)) + 0.5 * np.log(alpha)


def c_coefficients(
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float],
    grid: QGrid,
) -> CCoefficients:
    """
    c₀/N = -βE₀/N + (1/N)Σ_q c0_terms(q), with c₁, c₂ on the grid nodes.
    """
    m_star = params.mass if m_star is None else float(m_star)
    c1, c2 = c_functions(grid.nodes, potential, params, m_star)
    mode_sum = sum_to_integral(c0_terms(grid.quadrature_nodes, potential, params, m_star), params, grid)
    c0 = -params.beta * ground_state_energy(potential, params, grid) + mode_sum
    logger.debug("c-coefficients at T=%.4g: c0/N=%.6g", params.temperature, c0)
    return CCoefficients(grid=grid, c0=c0, c1=c1, c2=c2, beta=params.beta, m_star=m_star)


# --------------------------------------------------------------------
# Inversion from S(q)
# --------------------------------------------------------------------


def invert_structure_factor(s_exp: TabulatedFunction, params: SystemParams) -> PairPotential:
    """
    ν_q from S(q) = 1/α_q: ν_q = (ħ²q²/2m)(1/S² - 1)/(2ρ).

    ν₀ is the linear extrapolation of ν_q to q = 0.

    Raises:
        DataError: S(q) <= 0 at a node
    """
    q = s_exp.grid.nodes
    s = s_exp.values
    bad = np.nonzero(s <= 0)[0]
    if bad.size:
        i = int(bad[0])
        raise DataError(f"S(q) must be positive; S({q[i]:.6g}) = {s[i]:.6g}", q=float(q[i]))
    nu = free_energy_q(q, params) * (1.0 / (s * s) - 1.0) / (2.0 * params.density)
    table = TabulatedFunction(
        grid=s_exp.grid,
        values=nu,
        low=Extrapolation("linear"),
        high=Extrapolation("constant", value=0.0),
    )
    potential = tabulated_potential(table, name="inverted")
    logger.info("Inverted S(q) on %d nodes: nu_0=%.6g K A^3", len(q), potential.nu_0)
    return potential


# --------------------------------------------------------------------
# Coefficients of the evolved trial exponent
# --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ACoefficients:
    """
    Per-mode coefficients of U = a₀ + Σ a₁ρ_q + ½Σ a₂ρ_qρ_{-q} evolved from
    a linear trial exponent Σλ(q)ρ_q, next to the combinations
    c̄₁ = c₁ + e^{-βε*}/(1 - e^{-2βε*}) and c̄₂ = c₂ + 1/(1 - e^{-2βε*})
    that the density-matrix side produces.
    """

    q: np.ndarray
    a0_modes: np.ndarray
    a1_over_lambda: np.ndarray
    a2: np.ndarray
    lambda2: np.ndarray
    c0_modes: np.ndarray
    c1_bar: np.ndarray
    c2_bar: np.ndarray


def a_coefficients(
    q: ArrayLike,
    potential: PairPotential,
    params: SystemParams,
    m_star: Optional[float] = None,
) -> ACoefficients:
    """
    a₀ per mode without -βE₀ and the λ² part, a₁/λ, a₂ and the λ² weight of a₀,
    together with the per-mode constant c0_terms - ½ln[1 + (1 - e^{-2βε*})c₂]
    that must reproduce a0_modes. Used by the consistency checks only.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    beta = params.beta
    alpha = alpha_q(q, potential, params)
    y = beta * alpha * free_energy_q(q, params)
    x = beta * free_energy_q(q, params, m_star)
    r = alpha_minus_one(q, potential, params) / (alpha + 1.0)

    decay = np.exp(-2.0 * y)
    denominator = 1.0 + r * decay
    a2 = -0.5 * (alpha - 1.0) * (-np.expm1(-2.0 * y)) / denominator
    a1 = 2.0 * alpha / (alpha + 1.0) * np.exp(-y) / denominator
    lambda2 = -np.expm1(-2.0 * y) / ((alpha + 1.0) * denominator)
    a0 = -0.5 * (np.log1p(r * decay) - np.log1p(r))

    c1, c2 = c_functions(q, potential, params, m_star)
    one_minus = -np.expm1(-2.0 * x)
    c1_bar = c1 + np.exp(-x) / one_minus
    c2_bar = c2 + 1.0 / one_minus
    c0 = c0_terms(q, potential, params, m_star) - 0.5 * np.log1p(one_minus * c2)
    return ACoefficients(
        q=q,
        a0_modes=a0,
        a1_over_lambda=a1,
        a2=a2,
        lambda2=lambda2,
        c0_modes=c0,
        c1_bar=c1_bar,
        c2_bar=c2_bar,
    )
