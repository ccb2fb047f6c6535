"""Thermodynamics of an interacting Bose liquid in the pair-correlation approximation."""

from src.helium.errors import (
    ConvergenceError,
    DataError,
    HeliumError,
    IntegrationError,
    NumericalError,
    RootBracketError,
    StabilityViolation,
    ThermoInstability,
    TruncationError,
    UnphysicalMassError,
)

__all__ = [
    "ConvergenceError",
    "DataError",
    "HeliumError",
    "IntegrationError",
    "NumericalError",
    "RootBracketError",
    "StabilityViolation",
    "ThermoInstability",
    "TruncationError",
    "UnphysicalMassError",
]
