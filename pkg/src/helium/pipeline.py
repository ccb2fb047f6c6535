"""
Table-producing wrappers used by the CLI: temperature sweeps, structure
factor inversion, effective-mass comparison and the density-matrix
laboratory. Each returns pandas DataFrames with a fixed column order.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.helium.core import QGrid, SystemParams, TabulatedFunction
from src.helium.density_matrix import (
    box_modes,
    box_spectrum,
    density_matrix,
    ideal_penrose_dm,
    penrose_feenberg_dm,
    potential_energy_config,
    random_configuration,
)
from src.helium.effective_mass import MASS_METHODS, mass_solution
from src.helium.errors import NumericalError, ThermoInstability
from src.helium.pair_theory import PairPotential, invert_structure_factor, spectrum
from src.helium.thermo import ThermoRow, m_star_star_table, thermo_report

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS: List[str] = list(ThermoRow.model_fields) + ["mass_method", "q_min", "q_max", "n_nodes"]
S_COLUMNS: List[str] = ["temperature", "q", "s", "mass_method"]
SPECTRUM_COLUMNS: List[str] = ["q", "s", "nu", "alpha", "energy"]
MASS_COLUMNS: List[str] = ["temperature", "method", "m_star", "m_star_over_m", "residual", "iterations"]
DM_COLUMNS: List[str] = [
    "seed",
    "n",
    "box_side",
    "temperature",
    "log_r0",
    "log_p",
    "log_r",
    "log_penrose",
    "log_penrose_ideal",
    "phi_x",
    "phi_x_primed",
]

FIXED_MASS = "fixed"


def resolve_masses(
    temperatures: Sequence[float],
    method: str,
    params: SystemParams,
    s_exp: Optional[TabulatedFunction] = None,
    grid: Optional[QGrid] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    m* and m** per temperature. `fixed` keeps the bare mass; the other methods
    need an S(q) table. m** differs from m* only for temperature-dependent methods.
    """
    temps = np.asarray(temperatures, dtype=float)
    if method == FIXED_MASS:
        masses = np.full_like(temps, params.mass)
        return masses, masses.copy()
    if method not in MASS_METHODS:
        raise ValueError(f"Unknown mass method '{method}'. Available: {[FIXED_MASS, *MASS_METHODS]}")
    if s_exp is None:
        raise ValueError(f"Mass method '{method}' needs an S(q) table")
    masses = np.array(
        [mass_solution(s_exp, params.at_temperature(t), float(t), method, grid).m_star for t in temps]
    )
    if method in ("sewed", "self_consistent"):
        return masses, m_star_star_table(temps, masses)
    return masses, masses.copy()


def sweep_frames(
    potential: PairPotential,
    params: SystemParams,
    grid: QGrid,
    temperatures: Sequence[float],
    mass_method: str = FIXED_MASS,
    s_exp: Optional[TabulatedFunction] = None,
) -> Tuple[pd.DataFrame, pd.DataFrame, bool]:
    """
    Per-temperature summary rows and the long S(q, T) table.

    A state point raising ThermoInstability is kept as an "unstable" row; any
    other numerical failure is kept as a "failed" row and the sweep moves on.
    The returned boolean is True when any row was flagged.
    """
    if len(temperatures) == 0:
        raise ValueError("Temperature list is empty")
    m_stars, m_star_stars = resolve_masses(temperatures, mass_method, params, s_exp, grid)
    meta = {"mass_method": mass_method, "q_min": grid.q_min, "q_max": grid.q_max, "n_nodes": len(grid)}

    rows = []
    s_rows = []
    flagged = False
    for temperature, m_star, m_ss in zip(temperatures, m_stars, m_star_stars):
        state = params.at_temperature(float(temperature))
        try:
            report = thermo_report(potential, state, grid, m_star=float(m_star), m_star_star=float(m_ss))
        except NumericalError as exc:
            flagged = True
            status = "unstable" if isinstance(exc, ThermoInstability) else "failed"
            if status == "unstable":
                logger.warning("Sweep point T=%.4g K flagged: %s", temperature, exc)
            else:
                logger.error("Sweep point T=%.4g K failed: %s", temperature, exc, exc_info=True)
            row = ThermoRow(
                temperature=float(temperature),
                m_star=float(m_star),
                m_star_star=float(m_ss),
                status=status,
                message=str(exc),
            )
            rows.append({**row.model_dump(), **meta})
            continue
        rows.append({**report.to_record().model_dump(), **meta})
        s_rows.extend({**r, "mass_method": mass_method} for r in report.s_rows())

    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    s_table = pd.DataFrame(s_rows, columns=S_COLUMNS)
    return summary, s_table, flagged


def invert_frames(s_exp: TabulatedFunction, params: SystemParams) -> Tuple[pd.DataFrame, float]:
    """ν_q, α_q and E(q) on the nodes of the S(q) table, plus ν₀."""
    potential = invert_structure_factor(s_exp, params)
    table = spectrum(potential, params, s_exp.grid)
    frame = table.to_frame()
    frame.insert(1, "s", s_exp.values)
    frame.insert(2, "nu", potential(s_exp.grid.nodes))
    return frame[SPECTRUM_COLUMNS], potential.nu_0


def mass_frame(
    s_exp: TabulatedFunction,
    params: SystemParams,
    temperatures: Sequence[float],
    methods: Sequence[str],
    grid: Optional[QGrid] = None,
) -> pd.DataFrame:
    """Every requested mass variant side by side, one row per (T, method)."""
    records = []
    for temperature in temperatures:
        state = params.at_temperature(float(temperature))
        for method in methods:
            solution = mass_solution(s_exp, state, float(temperature), method, grid)
            records.append(solution.to_record(params.mass))
    return pd.DataFrame(records, columns=MASS_COLUMNS)


def dm_lab_frame(
    potential: PairPotential,
    params: SystemParams,
    n_particles: int,
    box_side: float,
    shell_max: int,
    seeds: Sequence[int],
    m_star: Optional[float] = None,
) -> pd.DataFrame:
    """Density-matrix values and comparison forms for seeded configuration pairs."""
    modes = box_modes(box_side, shell_max)
    spec = box_spectrum(potential, params, modes, n_particles)
    records = []
    for seed in seeds:
        config = random_configuration(n_particles, box_side, int(seed))
        value = density_matrix(config, potential, params, m_star, modes)
        records.append(
            {
                "seed": int(seed),
                "n": n_particles,
                "box_side": box_side,
                "temperature": params.temperature,
                "log_r0": value.log_r0,
                "log_p": value.log_p,
                "log_r": value.log_r,
                "log_penrose": penrose_feenberg_dm(config, spec, params.beta),
                "log_penrose_ideal": ideal_penrose_dm(config, params, params.beta, modes, m_star),
                "phi_x": potential_energy_config(config.coords, potential, modes),
                "phi_x_primed": potential_energy_config(config.coords_primed, potential, modes),
            }
        )
    return pd.DataFrame(records, columns=DM_COLUMNS)
