"""Shared solver types: configuration, status vocabulary, evaluation counting.

Every solver in the package speaks in terms of these types: it consumes a
:class:`SolverConfig`, wraps the user's function in a :class:`CountedFunction`,
records an :class:`IterationTrace`, and returns a :class:`SolverReport`.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

# Absolute floor for denominator guards so that scale-relative tests stay
# meaningful even when both operands underflow.
GUARD_FLOOR = 1e-300


class Status(enum.Enum):
    """Terminal outcome of a solver run."""

    CONVERGED = "converged"
    MAX_ITER_EXCEEDED = "max_iter_exceeded"
    DEGENERATE_DENOMINATOR = "degenerate_denominator"
    SINGULAR_MATRIX = "singular_matrix"
    NON_FINITE_VALUE = "non_finite_value"


class StopDecision(enum.Enum):
    """Outcome of a single stop-condition check."""

    CONTINUE = "continue"
    CONVERGED = "converged"
    MAX_ITER_EXCEEDED = "max_iter_exceeded"


class JacobianInit(enum.Enum):
    """How system solvers build their initial Jacobian approximation."""

    FINITE_DIFFERENCE = "fd"
    IDENTITY = "identity"


class SingularPolicy(enum.Enum):
    """What a system solver does when its working matrix goes singular."""

    FAIL = "fail"
    REINIT_JACOBIAN = "reinit"


class SolverError(Exception):
    """Base class for failures raised by step primitives."""

    status = Status.NON_FINITE_VALUE


class DegenerateDenominatorError(SolverError):
    """A divided-difference or derivative denominator fell below the guard."""

    status = Status.DEGENERATE_DENOMINATOR

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage


class SingularMatrixError(SolverError):
    """LU elimination met a pivot below the singularity threshold."""

    status = Status.SINGULAR_MATRIX


class NonFiniteValueError(SolverError):
    """A value that must be finite came out NaN or infinite."""

    status = Status.NON_FINITE_VALUE


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, iteration cap and policy flags shared by all solvers.

    ``denom_guard`` is a *relative* threshold: a denominator ``a - b`` (or a
    lone derivative value) is treated as degenerate when its magnitude is at
    most ``denom_guard * (|a| + |b|)``, with an absolute floor of 1e-300.
    """

    residual_tol: float = 1e-10
    step_tol: float = 1e-12
    max_iter: int = 100
    denom_guard: float = 1e-14
    jacobian_init: JacobianInit = JacobianInit.FINITE_DIFFERENCE
    on_singular: SingularPolicy = SingularPolicy.FAIL
    count_formal: bool = False
    fallback_to_secant: bool = False
    literal_step1: bool = False

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.step_tol < 0:
            raise ValueError("step_tol must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.denom_guard < 0:
            raise ValueError("denom_guard must be nonnegative")


class CountedFunction:
    """Wrap a function handle and count the calls that actually reach it.

    A small cache of recently evaluated points lets the drivers re-request
    values they have already paid for (the predictor-corrector steps formally
    touch f at the two previous iterates every iteration) without inflating
    the evaluation count.  Cache hits return the stored value object itself,
    so they are bit-identical to the original call.  Construct with
    ``memo=False`` to forward every call (raw accounting).
    """

    # Three slots cover the live set of a predictor-corrector iteration:
    # previous iterate, current iterate, predictor.
    MEMO_SLOTS = 3

    def __init__(self, inner: Callable[[Any], Any], memo: bool = True):
        self.inner = inner
        self._memo_enabled = memo
        self._memo: list = []  # (arg, value), most recently used last
        self.eval_count = 0

    @staticmethod
    def _same_arg(a, b) -> bool:
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            return isinstance(a, np.ndarray) and isinstance(b, np.ndarray) \
                and a.shape == b.shape and bool(np.array_equal(a, b))
        return type(a) is type(b) and a == b

    def __call__(self, x):
        if self._memo_enabled:
            for i, (arg, value) in enumerate(self._memo):
                if self._same_arg(arg, x):
                    self._memo.append(self._memo.pop(i))
                    return value
        value = self.inner(x)
        self.eval_count += 1
        if self._memo_enabled:
            key = x.copy() if isinstance(x, np.ndarray) else x
            self._memo.append((key, value))
            if len(self._memo) > self.MEMO_SLOTS:
                self._memo.pop(0)
        return value


@dataclass(frozen=True)
class IterationTrace:
    """Ordered record of a solver run.

    ``iterates`` holds the starting guesses (``seed_count`` of them) followed
    by every accepted main iterate; predictor sub-steps are not recorded.
    ``residual_norms[i]`` is the residual at ``iterates[i]`` and
    ``nfe_at_step[i]`` the cumulative evaluation count when it was recorded.
    """

    iterates: tuple
    residual_norms: tuple
    nfe_at_step: tuple
    seed_count: int = 1

    def __post_init__(self):
        if not (len(self.iterates) == len(self.residual_norms) == len(self.nfe_at_step)):
            raise ValueError("trace columns must have equal length")

    def __len__(self) -> int:
        return len(self.iterates)


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one solver run."""

    status: Status
    root: Any
    iterations: int
    nfe: int
    coc: Optional[float]
    trace: IterationTrace

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def is_finite_value(value) -> bool:
    """True when every component of a scalar/complex/vector is finite."""
    if isinstance(value, complex):
        return cmath.isfinite(value)
    if isinstance(value, (np.ndarray, list, tuple)):
        arr = np.asarray(value)
        return bool(np.all(np.isfinite(arr)))
    return math.isfinite(value)


def residual_norm(value) -> float:
    """Magnitude of a residual: |f| for scalars, Euclidean norm for vectors.

    Raises NonFiniteValueError when any component is NaN or infinite.
    """
    if not is_finite_value(value):
        raise NonFiniteValueError(f"non-finite residual value: {value!r}")
    if isinstance(value, (np.ndarray, list, tuple)):
        return float(np.linalg.norm(np.asarray(value, dtype=float)))
    return abs(value)


def check_stop(residual: float, step: float, iteration: int,
               config: SolverConfig) -> StopDecision:
    """Stop test applied after each accepted iterate.

    Convergence (residual at or below ``residual_tol``, or step size at or
    below ``step_tol``) is checked before the iteration cap, so a run that
    converges exactly at ``max_iter`` still reports convergence.
    """
    if residual <= config.residual_tol or step <= config.step_tol:
        return StopDecision.CONVERGED
    if iteration >= config.max_iter:
        return StopDecision.MAX_ITER_EXCEEDED
    return StopDecision.CONTINUE


def guard_denominator(den, a, b, guard: float, stage: Optional[str] = None):
    """Raise DegenerateDenominatorError when ``den = a - b`` is below guard."""
    if abs(den) <= max(guard * (abs(a) + abs(b)), GUARD_FLOOR):
        raise DegenerateDenominatorError(
            f"denominator {den!r} within guard of zero", stage=stage)


class _TraceBuilder:
    """Mutable accumulator the drivers use before freezing a trace."""

    def __init__(self, seed_count: int):
        self.iterates: list = []
        self.residual_norms: list = []
        self.nfe_at_step: list = []
        self.seed_count = seed_count

    def append(self, point, residual: float, nfe: int) -> None:
        if isinstance(point, np.ndarray):
            point = point.copy()
        self.iterates.append(point)
        self.residual_norms.append(residual)
        self.nfe_at_step.append(nfe)

    def freeze(self) -> IterationTrace:
        return IterationTrace(
            iterates=tuple(self.iterates),
            residual_norms=tuple(self.residual_norms),
            nfe_at_step=tuple(self.nfe_at_step),
            seed_count=self.seed_count,
        )
