from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import src.helium.pipeline as pipeline
from cli.config import load_run_config, parse_floats
from cli.main import build_parser, main
from cli.run_service import EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, OUTPUT_ENV, run_dm_lab, run_sweep
from src.helium.errors import IntegrationError
from src.helium.pipeline import DM_COLUMNS, MASS_COLUMNS, SPECTRUM_COLUMNS, SUMMARY_COLUMNS
from src.utils.data_io import DATA_PATH


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)


def write_config(tmp_path, text: str):
    path = tmp_path / "run.ini"
    path.write_text(text, encoding="utf-8")
    return path


SWEEP_INI = """
[system]
preset = he4

[potential]
model = gaussian
nu_0 = 1000.0   # softer than the preset

[temperatures]
values = 2.0, 4.0

[grid]
nodes = 96

[output]
directory = out
"""


# --------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------


def test_parse_floats():
    assert parse_floats("0.5, 1.0 2") == [0.5, 1.0, 2.0]
    assert parse_floats("") == []


def test_load_run_config(tmp_path):
    config = load_run_config(write_config(tmp_path, SWEEP_INI))
    assert config.temperatures == [2.0, 4.0]
    assert config.potential.model == "gaussian"
    assert config.potential.parameters == {"nu_0": 1000.0}
    assert config.grid.nodes == 96
    assert config.output_dir == tmp_path.resolve() / "out"
    assert config.mass.method == "fixed"


def test_temperature_range_and_relative_paths(tmp_path):
    text = """
[potential]
invert_sq = data/sq.dat
[temperatures]
start = 1.0
stop = 2.0
count = 3
[mass]
method = sewed
sq_file = data/sq.dat
"""
    config = load_run_config(write_config(tmp_path, text))
    assert config.temperatures == [1.0, 1.5, 2.0]
    assert config.potential.invert_sq == tmp_path.resolve() / "data" / "sq.dat"
    assert config.mass.sq_file == tmp_path.resolve() / "data" / "sq.dat"


@pytest.mark.parametrize(
    "text",
    [
        "[potential]\nmodel = gaussian\nnu_file = nu.dat\n",
        "[potential]\n",
        "[potential]\nmodel = morse\n",
        "[potential]\nmodel = gaussian\n[temperatures]\nvalues = 1.0, -2.0\n",
        "[potential]\nmodel = gaussian\n[temperatures]\nstart = 1.0\n",
        "[potential]\nmodel = gaussian\n[mass]\nmethod = guess\n",
        "[potential]\nmodel = gaussian\n[dm_lab]\nparticles = 9\n",
        "[potential]\nmodel = gaussian\n[verify]\nsuites = limits, speed\n",
        "model = gaussian\n",
    ],
)
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ValueError):
        load_run_config(write_config(tmp_path, text))


# --------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------


def test_parser_lists_commands():
    parser = build_parser()
    args = parser.parse_args(["verify", "--suite", "limits"])
    assert args.command == "verify" and args.seed == 1729


def test_bad_arguments_are_validation_errors():
    assert main(["verify", "--suite", "speed"]) == EXIT_VALIDATION
    assert main([]) == EXIT_VALIDATION


def test_sweep_command(tmp_path):
    assert main(["sweep", "--config", str(write_config(tmp_path, SWEEP_INI))]) == EXIT_OK
    summary = pd.read_csv(tmp_path / "out" / "summary.csv")
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert summary["temperature"].tolist() == [2.0, 4.0]
    s_table = pd.read_csv(tmp_path / "out" / "s_of_q.csv")
    assert len(s_table) == 2 * 96
    meta = json.loads((tmp_path / "out" / "sweep.json").read_text(encoding="utf-8"))
    assert meta["potential"]["nu_0"] == 1000.0
    assert meta["unstable"] is False


def test_sweep_runs_configured_suites(tmp_path):
    text = SWEEP_INI.replace("[output]", "[verify]\nsuites = density-matrix\nseed = 7\n\n[output]")
    config = load_run_config(write_config(tmp_path, text))
    assert config.verify.suites == ["density-matrix"]
    assert main(["sweep", "--config", str(write_config(tmp_path, text))]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "verify_density-matrix.json").read_text(encoding="utf-8"))
    assert report["seed"] == 7 and report["passed"] is True


def test_sweep_without_temperatures(tmp_path):
    path = write_config(tmp_path, "[potential]\nmodel = gaussian\n")
    assert main(["sweep", "--config", str(path)]) == EXIT_VALIDATION
    assert not (tmp_path / "output").exists()


def test_missing_config_is_io_error(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "absent.ini")]) == EXIT_IO


def test_invert_command_honours_output_env(tmp_path, monkeypatch):
    target = tmp_path / "from_env"
    monkeypatch.setenv(OUTPUT_ENV, str(target))
    assert main(["invert", "--sq", str(DATA_PATH), "--out", str(tmp_path / "ignored")]) == EXIT_OK
    frame = pd.read_csv(target / "spectrum.csv")
    assert list(frame.columns) == SPECTRUM_COLUMNS
    assert not (tmp_path / "ignored").exists()
    meta = json.loads((target / "invert.json").read_text(encoding="utf-8"))
    assert meta["rows"] == len(frame)


def test_invert_command_errors(tmp_path, write_table):
    assert main(["invert", "--sq", str(tmp_path / "absent.dat"), "--out", str(tmp_path)]) == EXIT_IO
    bad = write_table("bad.dat", [(0.1, 0.5), (0.2, "nan?")])
    assert main(["invert", "--sq", str(bad), "--out", str(tmp_path)]) == EXIT_VALIDATION


def test_mass_command(tmp_path):
    args = ["mass", "--sq", str(DATA_PATH), "--method", "zero_T,classical", "--temps", "1.0,2.0"]
    assert main(args + ["--out", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "mass.csv")
    assert list(frame.columns) == MASS_COLUMNS
    assert len(frame) == 4


@pytest.mark.parametrize("method, temps", [("zero_T,guess", "1.0"), ("all", "0,1.0")])
def test_mass_command_validation(tmp_path, method, temps):
    args = ["mass", "--sq", str(DATA_PATH), "--method", method, "--temps", temps, "--out", str(tmp_path)]
    assert main(args) == EXIT_VALIDATION


def test_dm_lab_command(tmp_path):
    text = """
[potential]
model = shell
[dm_lab]
particles = 2
pairs = 3
seed = 11
[output]
directory = lab
"""
    assert main(["dm-lab", "--config", str(write_config(tmp_path, text))]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "lab" / "dm_lab.csv")
    assert list(frame.columns) == DM_COLUMNS
    assert frame["seed"].tolist() == [11, 12, 13]
    meta = json.loads((tmp_path / "lab" / "dm_lab.json").read_text(encoding="utf-8"))
    assert meta["mass_method"] == "fixed"
    assert meta["seeds"] == [11, 12, 13]


def test_dm_lab_mass_method_needs_table(tmp_path):
    text = "[potential]\nmodel = shell\n[mass]\nmethod = zero_T\n[output]\ndirectory = lab\n"
    assert main(["dm-lab", "--config", str(write_config(tmp_path, text))]) == EXIT_VALIDATION


def test_verify_command(tmp_path):
    assert main(["verify", "--suite", "density-matrix", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "verify_density-matrix.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    assert report["seed"] == 1729


# --------------------------------------------------------------------
# Shipped configurations
# --------------------------------------------------------------------


SHIPPED_CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.ini"))


def command_for(config) -> str:
    return "sweep" if config.temperatures else "dm-lab"


def test_configs_are_shipped():
    assert {p.stem for p in SHIPPED_CONFIGS} >= {"dm_lab", "gaussian_sweep", "he4_inverted_sweep"}


@pytest.mark.parametrize("path", SHIPPED_CONFIGS, ids=lambda p: p.stem)
def test_shipped_config_runs_on_a_coarse_grid(path, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    config = load_run_config(path)
    if command_for(config) == "dm-lab":
        lab = config.dm_lab.model_copy(update={"pairs": 2})
        assert run_dm_lab(config.model_copy(update={"dm_lab": lab})) == EXIT_OK
        assert len(pd.read_csv(tmp_path / "dm_lab.csv")) == 2
        return
    # both phases, including the points that sit just below T_c
    temperatures = [t for t in config.temperatures if t in (1.0, 2.0, 3.0)] + [config.temperatures[-1]]
    grid = config.grid.model_copy(update={"nodes": 96})
    coarse = config.model_copy(update={"temperatures": temperatures, "grid": grid})
    assert run_sweep(coarse) == EXIT_OK
    summary = pd.read_csv(tmp_path / "summary.csv")
    assert (summary["status"] == "ok").all()
    assert np.all(np.isfinite(summary["energy_per_n"]))


@pytest.mark.slow
@pytest.mark.parametrize("path", SHIPPED_CONFIGS, ids=lambda p: p.stem)
def test_shipped_config_full_run(path, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    command = command_for(load_run_config(path))
    assert main([command, "--config", str(path)]) == EXIT_OK
    if command == "sweep":
        summary = pd.read_csv(tmp_path / "summary.csv")
        assert (summary["status"] == "ok").all()


def test_sweep_with_a_failed_point_exits_numerical(tmp_path, monkeypatch):
    original = pipeline.thermo_report

    def failing(potential, params, grid, m_star=None, m_star_star=None):
        if params.temperature == 4.0:
            raise IntegrationError("quad did not converge")
        return original(potential, params, grid, m_star=m_star, m_star_star=m_star_star)

    monkeypatch.setattr(pipeline, "thermo_report", failing)
    assert main(["sweep", "--config", str(write_config(tmp_path, SWEEP_INI))]) == EXIT_NUMERICAL
    summary = pd.read_csv(tmp_path / "out" / "summary.csv")
    assert summary["status"].tolist() == ["ok", "failed"]
    meta = json.loads((tmp_path / "out" / "sweep.json").read_text(encoding="utf-8"))
    assert meta["failed"] is True and meta["unstable"] is False
