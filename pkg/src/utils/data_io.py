"""
Reading S(q) and ν_q tables and writing CSV/JSON outputs.

Tables are two-column whitespace- or comma-separated text; lines starting
with '#' and blank lines are skipped.
"""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from src.helium.core import Extrapolation, QGrid, TabulatedFunction
from src.helium.errors import DataError
from src.helium.pair_theory import PairPotential, tabulated_potential

logger = logging.getLogger(__name__)

# Bundled digitized 4He S(q) table
DATA_PATH = Path(__file__).resolve().parents[2] / "data" / "he4_sq.dat"

MIN_ROWS = 8
FLOAT_FORMAT = "%.12g"

_SPLIT = re.compile(r"[,\s]+")
_BUNDLED_SQ: TabulatedFunction | None = None


def _read_columns(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    path = Path(path)
    q_values: List[float] = []
    y_values: List[float] = []
    lines: List[int] = []
    with path.open("r", encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            fields = [f for f in _SPLIT.split(text) if f]
            if len(fields) != 2:
                raise DataError(f"{path}:{number}: expected 2 columns, found {len(fields)}", line=number)
            try:
                q, y = float(fields[0]), float(fields[1])
            except ValueError:
                raise DataError(f"{path}:{number}: non-numeric value in '{text}'", line=number) from None
            if not (np.isfinite(q) and np.isfinite(y)):
                raise DataError(f"{path}:{number}: non-finite value", line=number)
            q_values.append(q)
            y_values.append(y)
            lines.append(number)

    if len(q_values) < MIN_ROWS:
        raise DataError(f"{path}: need at least {MIN_ROWS} data rows, found {len(q_values)}")
    q_arr = np.asarray(q_values)
    if q_arr[0] <= 0:
        raise DataError(f"{path}:{lines[0]}: q must be positive, got {q_arr[0]:g}", line=lines[0], q=float(q_arr[0]))
    steps = np.nonzero(np.diff(q_arr) <= 0)[0]
    if steps.size:
        i = int(steps[0]) + 1
        raise DataError(
            f"{path}:{lines[i]}: q not strictly increasing ({q_arr[i]:g} after {q_arr[i - 1]:g})",
            line=lines[i],
            q=float(q_arr[i]),
        )
    return q_arr, np.asarray(y_values), lines


def ingest_sq(path: Union[str, Path]) -> TabulatedFunction:
    """
    Load a measured S(q) table.

    Below the first node S(q) follows the straight line through the first two
    nodes (phonon regime); above the last node S(q) = 1. Callers that sample
    below the table reject a line that turns non-positive.

    Raises:
        DataError: malformed row, non-monotone q, S <= 0 or fewer than MIN_ROWS rows
        OSError: unreadable file
    """
    q, s, lines = _read_columns(path)
    bad = np.nonzero(s <= 0)[0]
    if bad.size:
        i = int(bad[0])
        raise DataError(f"{path}:{lines[i]}: S(q) must be positive, got {s[i]:g}", line=lines[i], q=float(q[i]))
    logger.info("Loaded S(q) table %s: %d rows, q in [%.3g, %.3g]", path, q.size, q[0], q[-1])
    return TabulatedFunction(
        grid=QGrid(q),
        values=s,
        low=Extrapolation("linear"),
        high=Extrapolation("constant", value=1.0),
    )


def ingest_nu(path: Union[str, Path]) -> PairPotential:
    """Load a tabulated ν_q (K·Å³); ν₀ is the linear continuation to q = 0."""
    q, nu, _ = _read_columns(path)
    table = TabulatedFunction(
        grid=QGrid(q),
        values=nu,
        low=Extrapolation("linear"),
        high=Extrapolation("constant", value=0.0),
    )
    return tabulated_potential(table, name=Path(path).stem)


def load_bundled_sq() -> TabulatedFunction:
    global _BUNDLED_SQ
    if _BUNDLED_SQ is None:
        _BUNDLED_SQ = ingest_sq(DATA_PATH)
    return _BUNDLED_SQ


# --------------------------------------------------------------------
# Writers
# --------------------------------------------------------------------


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path


def to_json_text(payload: Dict[str, Any]) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(payload: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json_text(payload), encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
