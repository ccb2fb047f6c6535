"""
Command-line entry point.

    python -m cli.main sweep --config configs/gaussian_sweep.ini
    python -m cli.main invert --sq data/he4_sq.dat --out output/invert
    python -m cli.main mass --sq data/he4_sq.dat --method zero_T,classical --temps 1.0,2.0
    python -m cli.main dm-lab --config configs/dm_lab.ini
    python -m cli.main verify --suite limits

Exit codes: 0 success, 1 validation, 2 numerical failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from cli.config import load_run_config, parse_floats
from cli.run_service import EXIT_VALIDATION, guarded, run_dm_lab, run_invert, run_mass, run_sweep, run_verify
from src.helium.core import SYSTEM_PRESETS
from src.helium.effective_mass import MASS_METHODS
from src.utils.evaluation import DEFAULT_SEED, SUITE_NAMES

logger = logging.getLogger(__name__)

ALL = "all"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helium",
        description="Finite-temperature thermodynamics of an interacting Bose liquid in the pair-correlation approximation",
    )
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="temperature sweep of the thermodynamic functions")
    sweep.add_argument("--config", type=Path, required=True)

    invert = sub.add_parser("invert", help="nu_q, alpha_q and E(q) from a measured S(q)")
    invert.add_argument("--sq", type=Path, required=True)
    invert.add_argument("--out", type=Path, default=None)
    invert.add_argument("--preset", default="he4", choices=sorted(SYSTEM_PRESETS))

    mass = sub.add_parser("mass", help="effective mass variants from a measured S(q)")
    mass.add_argument("--sq", type=Path, required=True)
    mass.add_argument("--method", default=ALL, help=f"comma list of {list(MASS_METHODS)} or '{ALL}'")
    mass.add_argument("--temps", required=True, help="comma list of temperatures in K")
    mass.add_argument("--out", type=Path, default=None)
    mass.add_argument("--preset", default="he4", choices=sorted(SYSTEM_PRESETS))

    lab = sub.add_parser("dm-lab", help="finite-box density matrix on seeded configurations")
    lab.add_argument("--config", type=Path, required=True)

    verify = sub.add_parser("verify", help="run verification suites")
    verify.add_argument("--suite", required=True, choices=[*SUITE_NAMES, ALL])
    verify.add_argument("--seed", type=int, default=DEFAULT_SEED)
    verify.add_argument("--out", type=Path, default=None)
    return parser


def _methods(text: str) -> List[str]:
    if text == ALL:
        return list(MASS_METHODS)
    methods = [m.strip() for m in text.split(",") if m.strip()]
    unknown = [m for m in methods if m not in MASS_METHODS]
    if unknown or not methods:
        raise ValueError(f"Unknown mass method(s) {unknown or text!r}. Available: {list(MASS_METHODS)}")
    return methods


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "sweep":
        return guarded(lambda: run_sweep(load_run_config(args.config)), "sweep")
    if args.command == "invert":
        return guarded(lambda: run_invert(args.sq, args.out, args.preset), "invert")
    if args.command == "mass":
        return guarded(
            lambda: run_mass(args.sq, _methods(args.method), parse_floats(args.temps), args.out, args.preset),
            "mass",
        )
    if args.command == "dm-lab":
        return guarded(lambda: run_dm_lab(load_run_config(args.config)), "dm-lab")
    suites = list(SUITE_NAMES) if args.suite == ALL else [args.suite]
    return guarded(lambda: run_verify(suites, args.seed, args.out), "verify")


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else 0
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    code = dispatch(args)
    logger.info("%s finished with exit code %d", args.command, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
