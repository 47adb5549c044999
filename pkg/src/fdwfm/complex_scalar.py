"""The four one-dimensional methods over the complex field.

The update formulas are the same as the real ones with the complex modulus
replacing absolute value inside the denominator guards, so the step
primitives are shared with :mod:`fdwfm.scalar`; this module adds the typed
problem container and the complex entry point.  A real-coefficient problem
started from real points produces iterates with zero imaginary part that
match the real driver bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .core import SolverConfig, SolverReport
from .scalar import Method, _solve_univariate, fdwfm_step, newton_step, secant_step, wfm_step

__all__ = [
    "ComplexProblem",
    "secant_step_complex",
    "newton_step_complex",
    "wfm_step_complex",
    "fdwfm_step_complex",
    "solve_complex",
]

# The shared primitives are generic over float and complex operands.
secant_step_complex = secant_step
newton_step_complex = newton_step
wfm_step_complex = wfm_step
fdwfm_step_complex = fdwfm_step


@dataclass(frozen=True)
class ComplexProblem:
    """A complex root-finding problem; ``z1`` is needed by secant and FDWFM,
    ``df`` by Newton and WFM."""

    f: Callable[[complex], complex]
    z0: complex
    z1: Optional[complex] = None
    df: Optional[Callable[[complex], complex]] = None

    def __post_init__(self):
        if self.z1 is not None and self.z0 == self.z1:
            raise ValueError("z0 and z1 must be distinct")


def solve_complex(problem: ComplexProblem, method: Method,
                  config: SolverConfig = SolverConfig()) -> SolverReport:
    """Iterate ``method`` on a complex problem; residual is the modulus of f."""
    if method in (Method.SECANT, Method.FDWFM) and problem.z1 is None:
        raise ValueError(f"{method.value} requires a second starting point z1")
    if method in (Method.NEWTON, Method.WFM) and problem.df is None:
        raise ValueError(f"{method.value} requires a derivative function")
    if method in (Method.SECANT, Method.FDWFM):
        starts = (complex(problem.z0), complex(problem.z1))
    else:
        starts = (complex(problem.z0),)
    return _solve_univariate(problem.f, problem.df, starts, method, config)
