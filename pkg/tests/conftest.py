from __future__ import annotations

import pytest

from src.helium.core import SystemParams, log_grid
from src.helium.pair_theory import make_potential
from src.utils.data_io import load_bundled_sq


@pytest.fixture(scope="session")
def he4():
    """4He at T = 2 K."""
    return SystemParams.from_preset("he4", temperature=2.0)


@pytest.fixture(scope="session")
def small_grid():
    return log_grid(0.02, 8.0, 160)


@pytest.fixture(scope="session")
def gaussian():
    return make_potential("gaussian")


@pytest.fixture(scope="session")
def zero():
    return make_potential("zero")


@pytest.fixture(scope="session")
def he4_sq():
    return load_bundled_sq()


@pytest.fixture
def write_table(tmp_path):
    """Write two-column rows to a file under tmp_path and return its path."""

    def _write(name, rows, header="# q value"):
        path = tmp_path / name
        lines = [header] + [f"{q} {v}" for q, v in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write
