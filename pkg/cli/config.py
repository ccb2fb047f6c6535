"""
Run configuration: INI-style key = value text parsed into a validated RunConfig.

Sections: [system] [potential] [temperatures] [grid] [mass] [output] [verify] [dm_lab].
Relative file paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import configparser
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.helium.core import DEFAULT_NODES, DEFAULT_Q_MAX, DEFAULT_Q_MIN, SYSTEM_PRESETS, QGrid, SystemParams, log_grid
from src.helium.effective_mass import MASS_METHODS
from src.helium.pair_theory import POTENTIAL_PRESETS, PairPotential, invert_structure_factor, make_potential
from src.helium.pipeline import FIXED_MASS
from src.utils.data_io import ingest_nu, ingest_sq
from src.utils.evaluation import DEFAULT_SEED, SUITE_NAMES

logger = logging.getLogger(__name__)


def parse_floats(text: str) -> List[float]:
    """'0.5, 1.0 2.0' -> [0.5, 1.0, 2.0]."""
    return [float(item) for item in text.replace(",", " ").split()]


class SystemConfig(BaseModel):
    preset: Optional[str] = "he4"
    mass: Optional[float] = Field(default=None, gt=0)
    density: Optional[float] = Field(default=None, gt=0)
    hbar_scale: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _resolve(self) -> "SystemConfig":
        if self.preset is not None and self.preset not in SYSTEM_PRESETS:
            raise ValueError(f"Unknown system preset '{self.preset}'. Available: {sorted(SYSTEM_PRESETS)}")
        if self.preset is None and (self.mass is None or self.density is None):
            raise ValueError("[system] needs either a preset or both mass and density")
        return self

    def params(self, temperature: float) -> SystemParams:
        base = dict(SYSTEM_PRESETS[self.preset]) if self.preset else {}
        if self.mass is not None:
            base["mass"] = self.mass
            base.pop("hbar2_over_m", None)
        if self.density is not None:
            base["density"] = self.density
        params = SystemParams(temperature=temperature, **base)
        return params if self.hbar_scale == 1.0 else params.with_hbar_scale(self.hbar_scale)


class PotentialConfig(BaseModel):
    """Exactly one source: a named model, a tabulated ν_q file, or an S(q) file to invert."""

    model: Optional[str] = None
    nu_file: Optional[Path] = None
    invert_sq: Optional[Path] = None
    parameters: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _one_source(self) -> "PotentialConfig":
        sources = [s for s in (self.model, self.nu_file, self.invert_sq) if s is not None]
        if len(sources) != 1:
            raise ValueError("[potential] needs exactly one of: model, nu_file, invert_sq")
        if self.model is not None and self.model not in POTENTIAL_PRESETS:
            raise ValueError(f"Unknown potential model '{self.model}'. Available: {sorted(POTENTIAL_PRESETS)}")
        return self

    def build(self, params: SystemParams) -> PairPotential:
        if self.model is not None:
            return make_potential(self.model, **self.parameters)
        if self.nu_file is not None:
            return ingest_nu(self.nu_file)
        return invert_structure_factor(ingest_sq(self.invert_sq), params)


class GridConfig(BaseModel):
    q_min: float = Field(default=DEFAULT_Q_MIN, gt=0)
    q_max: float = Field(default=DEFAULT_Q_MAX, gt=0)
    nodes: int = Field(default=DEFAULT_NODES, ge=3)

    def build(self) -> QGrid:
        return log_grid(self.q_min, self.q_max, self.nodes)


class MassConfig(BaseModel):
    method: str = FIXED_MASS
    sq_file: Optional[Path] = None

    @field_validator("method")
    @classmethod
    def _known(cls, value: str) -> str:
        if value != FIXED_MASS and value not in MASS_METHODS:
            raise ValueError(f"Unknown mass method '{value}'. Available: {[FIXED_MASS, *MASS_METHODS]}")
        return value


class VerifyConfig(BaseModel):
    suites: List[str] = Field(default_factory=list)
    seed: int = DEFAULT_SEED

    @field_validator("suites")
    @classmethod
    def _known(cls, value: List[str]) -> List[str]:
        unknown = [s for s in value if s not in SUITE_NAMES]
        if unknown:
            raise ValueError(f"Unknown suite(s) {unknown}. Available: {list(SUITE_NAMES)}")
        return value


class DmLabConfig(BaseModel):
    particles: int = Field(default=3, ge=1, le=8)
    box_side: float = Field(default=8.0, gt=0)
    shell_max: int = Field(default=1, ge=1)
    pairs: int = Field(default=20, ge=1)
    seed: int = DEFAULT_SEED
    temperature: float = Field(default=2.0, gt=0)

    @property
    def seeds(self) -> List[int]:
        return list(range(self.seed, self.seed + self.pairs))


class RunConfig(BaseModel):
    system: SystemConfig = Field(default_factory=SystemConfig)
    potential: PotentialConfig
    temperatures: List[float] = Field(default_factory=list)
    grid: GridConfig = Field(default_factory=GridConfig)
    mass: MassConfig = Field(default_factory=MassConfig)
    output_dir: Path = Path("output")
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    dm_lab: DmLabConfig = Field(default_factory=DmLabConfig)

    @field_validator("temperatures")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        bad = [t for t in value if not t > 0]
        if bad:
            raise ValueError(f"Temperatures must be > 0, got {bad}")
        return value


# --------------------------------------------------------------------
# INI loading
# --------------------------------------------------------------------


def _section(parser: configparser.ConfigParser, name: str) -> Dict[str, str]:
    return dict(parser[name]) if parser.has_section(name) else {}


def _resolve_path(value: Optional[str], base: Path) -> Optional[Path]:
    if value is None:
        return None
    path = Path(value).expanduser()
    return path if path.is_absolute() else base / path


def _temperatures(section: Dict[str, str]) -> List[float]:
    if "values" in section:
        return parse_floats(section["values"])
    if {"start", "stop", "count"} <= section.keys():
        return np.linspace(float(section["start"]), float(section["stop"]), int(section["count"])).tolist()
    if section:
        raise ValueError("[temperatures] needs either 'values' or 'start', 'stop' and 'count'")
    return []


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Parse an INI run configuration.

    Raises:
        OSError: file missing or unreadable
        ValueError: malformed INI text or invalid values (pydantic ValidationError)
    """
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with path.open("r", encoding="utf-8") as handle:
        try:
            parser.read_file(handle)
        except configparser.Error as exc:
            raise ValueError(f"{path}: {exc}") from exc
    base = path.resolve().parent

    potential = _section(parser, "potential")
    model = potential.pop("model", None)
    nu_file = _resolve_path(potential.pop("nu_file", None), base)
    invert_sq = _resolve_path(potential.pop("invert_sq", None), base)
    mass = _section(parser, "mass")
    if "sq_file" in mass:
        mass["sq_file"] = _resolve_path(mass["sq_file"], base)
    verify = _section(parser, "verify")
    if "suites" in verify:
        verify["suites"] = verify["suites"].replace(",", " ").split()
    output = _section(parser, "output")

    config = RunConfig(
        system=_section(parser, "system"),
        potential={
            "model": model,
            "nu_file": nu_file,
            "invert_sq": invert_sq,
            "parameters": {key: float(value) for key, value in potential.items()},
        },
        temperatures=_temperatures(_section(parser, "temperatures")),
        grid=_section(parser, "grid"),
        mass=mass,
        output_dir=_resolve_path(output.get("directory", "output"), base),
        verify=verify,
        dm_lab=_section(parser, "dm_lab"),
    )
    logger.info("Loaded run config %s (%d temperatures)", path, len(config.temperatures))
    return config
