"""
Runs the CLI subcommands: builds inputs from a RunConfig or from arguments,
calls the pipeline and writes CSV/JSON outputs. Failures are logged here
and mapped to exit codes.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from cli.config import RunConfig
from src.helium.core import QGrid, SystemParams, log_grid
from src.helium.effective_mass import mass_solution
from src.helium.errors import DataError, NumericalError
from src.helium.pipeline import FIXED_MASS, dm_lab_frame, invert_frames, mass_frame, sweep_frames
from src.utils.data_io import ingest_sq, write_csv, write_json
from src.utils.evaluation import run_verify as run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

OUTPUT_ENV = "HELIUM_OUTPUT_DIR"

UNITS: Dict[str, str] = {
    "energy": "K per particle",
    "temperature": "K",
    "length": "A",
    "wavenumber": "1/A",
    "mass": "amu",
    "density": "1/A^3",
    "potential": "K*A^3",
}


def resolve_output_dir(configured: Optional[Path]) -> Path:
    """HELIUM_OUTPUT_DIR, when set, wins over the configured directory."""
    override = os.environ.get(OUTPUT_ENV)
    if override:
        return Path(override)
    return Path(configured) if configured is not None else Path("output")


def _system_block(params: SystemParams) -> Dict[str, float]:
    return {
        "mass": params.mass,
        "density": params.density,
        "hbar_scale": params.hbar_scale,
        "hbar2_over_m": params.hbar2_over_m,
    }


def _grid_block(grid: QGrid) -> Dict[str, float]:
    return {"q_min": grid.q_min, "q_max": grid.q_max, "nodes": len(grid)}


def guarded(action: Callable[[], int], name: str) -> int:
    """Run a subcommand body, converting failures into exit codes."""
    try:
        return action()
    except NumericalError as exc:
        logger.error("%s failed numerically: %s", name, exc, exc_info=True)
        return EXIT_NUMERICAL
    except (ValidationError, DataError, ValueError, KeyError) as exc:
        logger.error("%s: invalid input: %s", name, exc, exc_info=True)
        return EXIT_VALIDATION
    except OSError as exc:
        logger.error("%s: I/O error: %s", name, exc, exc_info=True)
        return EXIT_IO


# --------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------


def run_sweep(config: RunConfig) -> int:
    """Summary and S(q, T) tables over the configured temperatures; 2 if any point was flagged."""
    if not config.temperatures:
        raise ValueError("Temperature list is empty")
    out_dir = resolve_output_dir(config.output_dir)
    params = config.system.params(config.temperatures[0])
    potential = config.potential.build(params)
    grid = config.grid.build()
    s_exp = ingest_sq(config.mass.sq_file) if config.mass.sq_file is not None else None

    summary, s_table, flagged = sweep_frames(
        potential, params, grid, config.temperatures, config.mass.method, s_exp
    )
    write_csv(summary, out_dir / "summary.csv")
    write_csv(s_table, out_dir / "s_of_q.csv")
    write_json(
        {
            "command": "sweep",
            "units": UNITS,
            "system": _system_block(params),
            "grid": _grid_block(grid),
            "potential": {"name": potential.name, "nu_0": potential.nu_0},
            "mass_method": config.mass.method,
            "temperatures": list(config.temperatures),
            "unstable": bool((summary["status"] == "unstable").any()),
            "failed": bool((summary["status"] == "failed").any()),
        },
        out_dir / "sweep.json",
    )
    code = EXIT_OK
    if config.verify.suites:
        code = run_verify(config.verify.suites, config.verify.seed, out_dir)
    if flagged:
        logger.warning("Sweep finished with flagged state points")
        return EXIT_NUMERICAL
    return code


def run_invert(sq_path: Path, out_dir: Optional[Path], preset: str = "he4") -> int:
    """ν_q, α_q and E(q) from a measured S(q) table."""
    out_dir = resolve_output_dir(out_dir)
    params = SystemParams.from_preset(preset, temperature=0.0)
    s_exp = ingest_sq(sq_path)
    frame, nu_0 = invert_frames(s_exp, params)
    write_csv(frame, out_dir / "spectrum.csv")
    write_json(
        {
            "command": "invert",
            "units": UNITS,
            "system": _system_block(params),
            "source": str(sq_path),
            "nu_0": nu_0,
            "rows": len(frame),
        },
        out_dir / "invert.json",
    )
    return EXIT_OK


def run_mass(
    sq_path: Path,
    methods: Sequence[str],
    temperatures: Sequence[float],
    out_dir: Optional[Path],
    preset: str = "he4",
    grid: Optional[QGrid] = None,
) -> int:
    """Every requested m* variant side by side."""
    if not temperatures:
        raise ValueError("Temperature list is empty")
    if any(not t > 0 for t in temperatures):
        raise ValueError(f"Temperatures must be > 0, got {list(temperatures)}")
    out_dir = resolve_output_dir(out_dir)
    grid = log_grid() if grid is None else grid
    params = SystemParams.from_preset(preset, temperature=float(temperatures[0]))
    frame = mass_frame(ingest_sq(sq_path), params, temperatures, methods, grid)
    write_csv(frame, out_dir / "mass.csv")
    write_json(
        {
            "command": "mass",
            "units": UNITS,
            "system": _system_block(params),
            "grid": _grid_block(grid),
            "source": str(sq_path),
            "methods": list(methods),
        },
        out_dir / "mass.json",
    )
    return EXIT_OK


def run_dm_lab(config: RunConfig) -> int:
    """Finite-box density-matrix values for seeded configuration pairs."""
    lab = config.dm_lab
    out_dir = resolve_output_dir(config.output_dir)
    params = config.system.params(lab.temperature)
    potential = config.potential.build(params)
    m_star = None
    if config.mass.method != FIXED_MASS:
        if config.mass.sq_file is None:
            raise ValueError(f"Mass method '{config.mass.method}' needs [mass] sq_file")
        solution = mass_solution(
            ingest_sq(config.mass.sq_file), params, lab.temperature, config.mass.method, config.grid.build()
        )
        m_star = solution.m_star
    frame = dm_lab_frame(potential, params, lab.particles, lab.box_side, lab.shell_max, lab.seeds, m_star)
    write_csv(frame, out_dir / "dm_lab.csv")
    write_json(
        {
            "command": "dm-lab",
            "units": UNITS,
            "system": _system_block(params),
            "potential": {"name": potential.name, "nu_0": potential.nu_0},
            "lab": lab.model_dump(),
            "m_star": params.mass if m_star is None else m_star,
            "mass_method": config.mass.method,
            "seeds": lab.seeds,
        },
        out_dir / "dm_lab.json",
    )
    return EXIT_OK


def run_verify(suites: Sequence[str], seed: int, out_dir: Optional[Path]) -> int:
    """One JSON report per suite; 2 when any check failed."""
    out_dir = resolve_output_dir(out_dir)
    failed: List[str] = []
    for suite in suites:
        report = run_suite(suite, seed=seed)
        payload: Dict[str, Any] = report.model_dump()
        write_json(payload, out_dir / f"verify_{suite}.json")
        if not report.passed:
            failed.extend(f"{suite}:{c.name}" for c in report.failures())
    if failed:
        logger.error("Verification failures: %s", ", ".join(failed))
        return EXIT_NUMERICAL
    return EXIT_OK
