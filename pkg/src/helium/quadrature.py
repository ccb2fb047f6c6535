"""
Numerical engines: adaptive 1-D integration, bracketing root finding and
damped fixed-point iteration.

Thin wrappers over scipy that attach the package's error types and keep
the failure information (best estimate, bracket, iterate history).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from src.helium.errors import ConvergenceError, IntegrationError, RootBracketError

logger = logging.getLogger(__name__)

# Accept a flagged QUADPACK result when its error estimate stays within this
# factor of the requested tolerance (round-off limited integrands).
_ROUNDOFF_SLACK = 1.0e3


@dataclass(frozen=True)
class IntegrationSpec:
    rel_tol: float = 1.0e-9
    abs_tol: float = 1.0e-13
    singular_points: Tuple[float, ...] = ()
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("Integration tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class RootSpec:
    bracket: Tuple[float, float]
    tol: float = 1.0e-14
    max_iter: int = 200

    def __post_init__(self) -> None:
        lo, hi = self.bracket
        if not lo < hi:
            raise ValueError(f"Root bracket must satisfy lo < hi, got {self.bracket}")


class IntegrationResult(NamedTuple):
    value: float
    error: float


class FixedPointResult(NamedTuple):
    value: float
    iterations: int
    history: List[Tuple[float, float]]


# Kernel integrals of the ideal gas; callers raise abs_tol once the scale of the
# result is known.
PHYSICS_SPEC = IntegrationSpec(rel_tol=1.0e-10, abs_tol=1.0e-300, max_subdivisions=400)


# --------------------------------------------------------------------
# Integration
# --------------------------------------------------------------------


def _semi_infinite(f: Callable[[float], float], a: float) -> Callable[[float], float]:
    """Map ∫_a^∞ f(p) dp onto t ∈ [0, 1) via p = a + t/(1 - t)."""

    def mapped(t: float) -> float:
        if t >= 1.0:
            return 0.0
        one_minus = 1.0 - t
        value = f(a + t / one_minus)
        return value / (one_minus * one_minus)

    return mapped


def integrate(
    f: Callable[[float], float],
    interval: Tuple[float, float],
    spec: Optional[IntegrationSpec] = None,
) -> IntegrationResult:
    """
    Integrate a scalar function over a finite or semi-infinite interval.

    Args:
        f: integrand; may have integrable singularities at the interval ends
           or at spec.singular_points
        interval: (a, b) with a finite; b may be np.inf
        spec: tolerances and known singular points

    Returns:
        IntegrationResult(value, error)

    Raises:
        IntegrationError: tolerance not reached within max_subdivisions
    """
    spec = spec or IntegrationSpec()
    a, b = float(interval[0]), float(interval[1])
    if not math.isfinite(a):
        raise ValueError("Lower integration limit must be finite")
    if a == b:
        return IntegrationResult(0.0, 0.0)

    g = f
    lo, hi = a, b
    points = [s for s in spec.singular_points if a < s < b]
    if math.isinf(b):
        g = _semi_infinite(f, a)
        lo, hi = 0.0, 1.0
        points = [(s - a) / (1.0 + s - a) for s in points]

    kwargs = dict(
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    if points:
        kwargs["points"] = sorted(points)
    out = quad(g, lo, hi, **kwargs)
    value, error = float(out[0]), float(out[1])
    # QUADPACK appends a message only when it flags the result
    flagged = len(out) > 3

    if not math.isfinite(value):
        raise IntegrationError(f"Integral over {interval} is not finite", value, error)
    if flagged:
        floor = max(spec.rel_tol * abs(value), spec.abs_tol)
        if error > _ROUNDOFF_SLACK * floor:
            message = str(out[3]).splitlines()[0]
            raise IntegrationError(
                f"Integral over {interval} failed: {message} (estimate {value:.6g} ± {error:.2g})",
                value,
                error,
            )
        logger.debug("quad flagged but within slack on %s: %.3g ± %.2g", interval, value, error)
    return IntegrationResult(value, error)


# --------------------------------------------------------------------
# Root finding
# --------------------------------------------------------------------


def find_root(f: Callable[[float], float], spec: RootSpec) -> float:
    """Bracketing root finder (Brent). Raises RootBracketError without a sign change."""
    lo, hi = spec.bracket
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return float(lo)
    if f_hi == 0.0:
        return float(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise RootBracketError(
            f"No sign change on [{lo:.6g}, {hi:.6g}]: f={f_lo:.3g}, {f_hi:.3g}", (lo, hi)
        )
    return float(brentq(f, lo, hi, xtol=spec.tol, maxiter=spec.max_iter))


# --------------------------------------------------------------------
# Fixed-point iteration
# --------------------------------------------------------------------


def fixed_point(
    g: Callable[[float], float],
    x0: float,
    damping: float = 0.5,
    tol: float = 1.0e-10,
    max_iter: int = 200,
) -> FixedPointResult:
    """
    Damped iteration x <- (1 - d)·x + d·g(x).

    Returns the first iterate with |x - g(x)| <= tol together with the
    (x, |x - g(x)|) history. Raises ConvergenceError carrying the history
    when max_iter is exhausted or an iterate turns non-finite.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError(f"damping must lie in (0, 1], got {damping}")

    history: List[Tuple[float, float]] = []
    x = float(x0)
    for iteration in range(1, max_iter + 1):
        gx = float(g(x))
        residual = abs(x - gx)
        history.append((x, residual))
        logger.debug("fixed point iter %d: x=%.12g residual=%.3g", iteration, x, residual)
        if not math.isfinite(residual):
            raise ConvergenceError(f"Non-finite iterate at step {iteration}", history)
        if residual <= tol:
            return FixedPointResult(x, iteration, history)
        x = (1.0 - damping) * x + damping * gx
    raise ConvergenceError(
        f"No convergence after {max_iter} iterations (last residual {history[-1][1]:.3g})",
        history,
    )
