"""
Physical constants, unit conventions, system parameters, q-grids and the
tabulated-function abstraction shared by all physics modules.

Units: energies in Kelvin (k_B = 1), lengths in Angstrom, masses in amu.
ħ enters only through hbar2_over_m = ħ²/(m k_B Å²), in K·Å².
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import constants
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator
from scipy.special import zeta

from src.helium.errors import DataError, IntegrationError, TruncationError
from src.helium.quadrature import IntegrationSpec, integrate

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------
# Constants
# --------------------------------------------------------------------
# ħ²/(amu·k_B) expressed in K·Å²·amu
HBAR2_OVER_AMU: float = (
    constants.hbar**2
    / (constants.physical_constants["atomic mass constant"][0] * constants.k)
    * 1.0e20
)

ZETA_3_2: float = float(zeta(1.5))
ZETA_5_2: float = float(zeta(2.5))

# ħ²/m for 4He used by the preset, K·Å²
HE4_HBAR2_OVER_M: float = 12.1194
HE4_DENSITY: float = 0.02185

DEFAULT_Q_MIN: float = 0.02
DEFAULT_Q_MAX: float = 8.0
DEFAULT_NODES: int = 512
LOW_PANEL_ORDER: int = 12

SYSTEM_PRESETS: Dict[str, Dict[str, float]] = {
    "he4": {
        "mass": HBAR2_OVER_AMU / HE4_HBAR2_OVER_M,
        "density": HE4_DENSITY,
        "hbar2_over_m": HE4_HBAR2_OVER_M,
    },
}


# --------------------------------------------------------------------
# System parameters
# --------------------------------------------------------------------


class SystemParams(BaseModel):
    """Global physical context: particle mass, density, temperature, ħ scale."""

    model_config = ConfigDict(frozen=True)

    mass: float = Field(gt=0, description="particle mass, amu")
    density: float = Field(gt=0, description="number density, 1/A^3")
    temperature: float = Field(ge=0, description="temperature, K")
    hbar_scale: float = Field(default=1.0, gt=0, description="multiplier on hbar^2/m")
    hbar2_over_m: float = Field(default=0.0, description="hbar^2/m, K*A^2")

    @model_validator(mode="before")
    @classmethod
    def _fill_hbar2(cls, data):
        if isinstance(data, dict) and not data.get("hbar2_over_m"):
            data = dict(data)
            data["hbar2_over_m"] = (
                data.get("hbar_scale", 1.0) * HBAR2_OVER_AMU / float(data["mass"])
            )
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> "SystemParams":
        expected = self.hbar_scale * HBAR2_OVER_AMU / self.mass
        if abs(self.hbar2_over_m - expected) > 1.0e-12 * expected:
            raise ValueError(
                f"hbar2_over_m={self.hbar2_over_m} inconsistent with mass={self.mass} "
                f"(expected {expected})"
            )
        return self

    @classmethod
    def from_preset(cls, name: str, temperature: float, hbar_scale: float = 1.0) -> "SystemParams":
        if name not in SYSTEM_PRESETS:
            raise KeyError(f"Unknown system preset '{name}'. Available: {sorted(SYSTEM_PRESETS)}")
        params = cls(temperature=temperature, **SYSTEM_PRESETS[name])
        return params if hbar_scale == 1.0 else params.with_hbar_scale(hbar_scale)

    @property
    def beta(self) -> float:
        return math.inf if self.temperature == 0 else 1.0 / self.temperature

    def hbar2_over(self, m_star: Optional[float] = None) -> float:
        """ħ²/m* in K·Å²; returns hbar2_over_m unchanged when m* is the bare mass."""
        if m_star is None or m_star == self.mass:
            return self.hbar2_over_m
        if m_star <= 0:
            raise ValueError(f"m_star must be positive, got {m_star}")
        return self.hbar2_over_m * self.mass / m_star

    def thermal_wavelength(self, m_star: Optional[float] = None) -> float:
        """λ_T = sqrt(2πħ²/(m* T)) in Å."""
        if self.temperature <= 0:
            raise ValueError("Thermal wavelength needs T > 0")
        return math.sqrt(2.0 * math.pi * self.hbar2_over(m_star) / self.temperature)

    def at_temperature(self, temperature: float) -> "SystemParams":
        return self.model_copy(update={"temperature": float(temperature)})

    def with_density(self, density: float) -> "SystemParams":
        return self.model_copy(update={"density": float(density)})

    def with_hbar_scale(self, scale: float) -> "SystemParams":
        """Classical-limit knob: ħ²/m -> scale·ħ²/m with ν_q, ρ, T unchanged."""
        return SystemParams(
            mass=self.mass,
            density=self.density,
            temperature=self.temperature,
            hbar_scale=self.hbar_scale * scale,
            hbar2_over_m=self.hbar2_over_m * scale,
        )


# --------------------------------------------------------------------
# q-grid
# --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QGrid:
    """
    Strictly increasing wave numbers (1/Å), q = 0 excluded.

    Besides the nodes the grid carries a quadrature rule for ∫_0^{q_max} g dq:
    a Gauss-Legendre panel on [0, q_min] plus composite Simpson in ln q on
    the nodes.
    """

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise DataError("QGrid needs a 1-D array of at least 3 nodes")
        if not np.all(np.isfinite(nodes)) or nodes[0] <= 0:
            raise DataError("QGrid nodes must be finite and positive (q = 0 is excluded)")
        bad = np.nonzero(np.diff(nodes) <= 0)[0]
        if bad.size:
            i = int(bad[0]) + 1
            raise DataError(f"QGrid nodes not strictly increasing at index {i} (q={nodes[i]:.6g})")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def q_min(self) -> float:
        return float(self.nodes[0])

    @property
    def q_max(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return int(self.nodes.size)

    @cached_property
    def _low_panel(self) -> Tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(LOW_PANEL_ORDER)
        half = 0.5 * self.q_min
        return half * (x + 1.0), half * w

    @cached_property
    def node_weights(self) -> np.ndarray:
        t = np.log(self.nodes)
        w_t = simpson(np.eye(self.nodes.size), x=t, axis=-1)
        return w_t * self.nodes

    @cached_property
    def quadrature_nodes(self) -> np.ndarray:
        return np.concatenate([self._low_panel[0], self.nodes])

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        return np.concatenate([self._low_panel[1], self.node_weights])

    def on_nodes(self, values: np.ndarray) -> np.ndarray:
        """Slice an array evaluated on quadrature_nodes back to the grid nodes."""
        return np.asarray(values)[LOW_PANEL_ORDER:]

    def integrate(self, values: np.ndarray) -> float:
        """∫_0^{q_max} g(q) dq for g sampled on quadrature_nodes."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.quadrature_nodes.shape:
            raise ValueError(
                f"Expected {self.quadrature_nodes.size} samples on quadrature nodes, got {values.shape}"
            )
        return float(np.dot(self.quadrature_weights, values))


def log_grid(
    q_min: float = DEFAULT_Q_MIN, q_max: float = DEFAULT_Q_MAX, n: int = DEFAULT_NODES
) -> QGrid:
    if not 0 < q_min < q_max:
        raise DataError(f"Need 0 < q_min < q_max, got {q_min}, {q_max}")
    return QGrid(np.geomspace(q_min, q_max, n))


# --------------------------------------------------------------------
# Tabulated functions
# --------------------------------------------------------------------


@dataclass(frozen=True)
class Extrapolation:
    """
    Rule outside the tabulated range.

    constant: `value` (edge ordinate when None); linear: through the two edge
    nodes; power: asymptote + (edge - asymptote)·(q_edge/q)^exponent on the
    high side, (q/q_edge)^exponent on the low side.
    """

    kind: Literal["constant", "linear", "power"] = "constant"
    value: Optional[float] = None
    exponent: float = 2.0


@dataclass(frozen=True, eq=False)
class TabulatedFunction:
    grid: QGrid
    values: np.ndarray
    low: Extrapolation = field(default_factory=lambda: Extrapolation("linear"))
    high: Extrapolation = field(default_factory=Extrapolation)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise DataError(
                f"Tabulated values ({values.size}) do not match grid nodes ({len(self.grid)})"
            )
        if not np.all(np.isfinite(values)):
            i = int(np.nonzero(~np.isfinite(values))[0][0])
            raise DataError(f"Non-finite tabulated value at q={self.grid.nodes[i]:.6g}", q=float(self.grid.nodes[i]))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_interp", PchipInterpolator(self.grid.nodes, values, extrapolate=False))

    def _outside(self, q: np.ndarray, rule: Extrapolation, side: str) -> np.ndarray:
        nodes, values = self.grid.nodes, self.values
        i0, i1 = (0, 1) if side == "low" else (-1, -2)
        q_edge, v_edge = nodes[i0], values[i0]
        if rule.kind == "constant":
            level = v_edge if rule.value is None else rule.value
            return np.full_like(q, level)
        if rule.kind == "linear":
            slope = (values[i1] - v_edge) / (nodes[i1] - q_edge)
            return v_edge + slope * (q - q_edge)
        asymptote = 0.0 if rule.value is None else rule.value
        ratio = (q / q_edge) if side == "low" else (q_edge / q)
        return asymptote + (v_edge - asymptote) * ratio**rule.exponent

    def __call__(self, q: Union[float, np.ndarray]) -> np.ndarray:
        q_in = np.asarray(q, dtype=float)
        q_arr = np.atleast_1d(q_in).ravel()
        out = np.empty_like(q_arr)
        below = q_arr < self.grid.q_min
        above = q_arr > self.grid.q_max
        inside = ~(below | above)
        out[inside] = self._interp(q_arr[inside])
        out[below] = self._outside(q_arr[below], self.low, "low")
        out[above] = self._outside(q_arr[above], self.high, "high")
        return float(out[0]) if q_in.ndim == 0 else out.reshape(q_in.shape)

    def at_zero(self) -> float:
        """Value of the low-side extrapolation at q = 0."""
        return float(self._outside(np.array([0.0]), self.low, "low")[0])


QFunction = Union[Callable[[np.ndarray], np.ndarray], TabulatedFunction]


# --------------------------------------------------------------------
# Thermodynamic-limit sums
# --------------------------------------------------------------------


def sum_to_integral(
    f: Union[QFunction, np.ndarray],
    params: SystemParams,
    grid: QGrid,
    spec: Optional[IntegrationSpec] = None,
    tail_rtol: float = 1.0e-6,
) -> float:
    """
    Per-particle thermodynamic-limit value of (1/N)Σ_{q≠0} f(q):
    (1/(2π²ρ)) ∫_0^{q_max} q² f(q) dq.

    Args:
        f: vectorized q-function, TabulatedFunction, or samples on grid.quadrature_nodes
        params: supplies ρ
        grid: truncation cutoff and fixed quadrature rule
        spec: when given, f is integrated adaptively instead of on the grid rule
        tail_rtol: allowed truncation-tail estimate relative to the result

    Raises:
        IntegrationError: non-finite integrand sample (message names q)
        TruncationError: q²f does not decay toward q_max and the tail is significant
    """
    prefactor = 1.0 / (2.0 * math.pi**2 * params.density)
    q = grid.quadrature_nodes
    if isinstance(f, np.ndarray):
        values = np.asarray(f, dtype=float)
    else:
        values = np.asarray(f(q), dtype=float) * np.ones_like(q)

    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        q_bad = float(q[bad[0]])
        raise IntegrationError(f"Non-finite integrand at q={q_bad:.6g} 1/A")

    weighted = q * q * values
    if spec is not None and callable(f):
        result = integrate(lambda x: x * x * float(f(x)), (0.0, grid.q_max), spec).value
    else:
        result = grid.integrate(weighted)

    mid = int(np.searchsorted(q, 0.5 * grid.q_max))
    tail = grid.q_max * abs(weighted[-1])
    if abs(weighted[-1]) >= abs(weighted[mid]) and tail > tail_rtol * max(abs(result), 1e-300):
        raise TruncationError(
            f"Integrand q^2 f(q) not decaying at q_max={grid.q_max:.4g}; tail estimate {tail:.3g}",
            tail,
        )
    logger.debug("sum_to_integral: tail estimate %.3g", tail)
    return prefactor * result


# --------------------------------------------------------------------
# Collective variables
# --------------------------------------------------------------------


def rho_q(positions: np.ndarray, q: np.ndarray) -> Union[complex, np.ndarray]:
    """
    ρ_q = N^{-1/2} Σ_j exp(-i q·r_j).

    Args:
        positions: (n, 3) particle coordinates
        q: a single wave vector (3,) or a stack (M, 3)

    Returns:
        complex scalar for a single q, complex array (M,) otherwise
    """
    r = np.atleast_2d(np.asarray(positions, dtype=float))
    if r.shape[0] < 1:
        raise ValueError("rho_q needs at least one particle")
    vectors = np.asarray(q, dtype=float)
    single = vectors.ndim == 1
    vectors = np.atleast_2d(vectors)
    if np.any(np.all(vectors == 0.0, axis=1)):
        raise ValueError("q = 0 is excluded from the collective variables")
    phases = np.exp(-1j * (vectors @ r.T))
    values = phases.sum(axis=1) / math.sqrt(r.shape[0])
    return complex(values[0]) if single else values
