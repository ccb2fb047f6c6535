"""
Exception hierarchy shared by the physics modules and the CLI.

Data problems derive from ValueError, numerical failures from RuntimeError,
so callers that only know the builtin types still catch them.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple


class HeliumError(Exception):
    """Base class for every error raised by the package."""


class DataError(HeliumError, ValueError):
    """Invalid input data: bad tables, non-positive S(q), malformed grids."""

    def __init__(self, message: str, line: Optional[int] = None, q: Optional[float] = None):
        super().__init__(message)
        self.line = line
        self.q = q


class NumericalError(HeliumError, RuntimeError):
    """Base class for numerical failures (exit code 2 in the CLI)."""


class IntegrationError(NumericalError):
    def __init__(self, message: str, estimate: float = float("nan"), error: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class TruncationError(NumericalError):
    def __init__(self, message: str, tail_estimate: float):
        super().__init__(message)
        self.tail_estimate = tail_estimate


class RootBracketError(NumericalError):
    def __init__(self, message: str, bracket: Tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


class ConvergenceError(NumericalError):
    """Iteration did not settle; `history` holds (iterate, residual) pairs."""

    def __init__(self, message: str, history: Sequence[Tuple[float, float]]):
        super().__init__(message)
        self.history: List[Tuple[float, float]] = list(history)


class StabilityViolation(NumericalError):
    """1 + 2ρν_q/(ħ²q²/2m) < 0: the Bogoliubov factor would be imaginary."""

    def __init__(self, q: float, radicand: float):
        super().__init__(f"Unstable mode at q={q:.6g} 1/A: radicand {radicand:.6g} < 0")
        self.q = q
        self.radicand = radicand


class ThermoInstability(NumericalError):
    """Non-positive argument of the correlation logarithm at some (q, T)."""

    def __init__(self, q: float, temperature: float, value: float):
        super().__init__(
            f"Pair approximation breaks down at q={q:.6g} 1/A, T={temperature:.6g} K "
            f"(denominator {value:.6g})"
        )
        self.q = q
        self.temperature = temperature
        self.value = value


class UnphysicalMassError(NumericalError):
    def __init__(self, method: str, total: float):
        super().__init__(f"{method}: mass renormalization sum {total:.6g} >= 1")
        self.method = method
        self.total = total
