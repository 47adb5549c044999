"""One-dimensional iterative solvers: secant, Newton, WFM and FDWFM.

The step primitives and the driver are written over a generic field: they
accept floats or complex numbers alike (the update formulas are identical,
with modulus replacing absolute value inside the guards).  ``solve_scalar``
is the real-variable entry point; :mod:`fdwfm.complex_scalar` re-exposes the
same machinery for complex problems.

The FDWFM iteration is a derivative-free predictor-corrector: the predictor
is the secant step from the two most recent iterates, and the corrector
replaces the derivative with the divided difference between the current
iterate and the predictor:

    predictor p = x_n - f(x_n) (x_n - x_{n-1}) / (f(x_n) - f(x_{n-1}))
    x_{n+1}     = x_n - f(x_n) (p - x_n)       / (f(p)   - f(x_n))
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from .coc import estimate_coc
from .core import (
    CountedFunction,
    DegenerateDenominatorError,
    NonFiniteValueError,
    SolverConfig,
    SolverError,
    SolverReport,
    Status,
    StopDecision,
    _TraceBuilder,
    check_stop,
    guard_denominator,
    is_finite_value,
)
from .expr import EvalError


class Method(enum.Enum):
    """Iteration schemes the package implements."""

    SECANT = "secant"
    NEWTON = "newton"
    WFM = "wfm"
    FDWFM = "fdwfm"
    BROYDEN = "broyden"


@dataclass(frozen=True)
class ScalarProblem:
    """A real root-finding problem.

    ``df`` is required by Newton and WFM only; ``x1`` by secant and FDWFM.
    """

    f: Callable[[float], float]
    x0: float
    x1: Optional[float] = None
    df: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.x1 is not None and self.x0 == self.x1:
            raise ValueError("x0 and x1 must be distinct")


# ---------------------------------------------------------------------------
# Step primitives


def secant_step(x_prev, x_curr, f_prev, f_curr, guard: float = 1e-14):
    """One secant update: x_curr - f_curr (x_curr - x_prev) / (f_curr - f_prev)."""
    den = f_curr - f_prev
    guard_denominator(den, f_curr, f_prev, guard, stage="secant")
    return x_curr - f_curr * (x_curr - x_prev) / den


def newton_step(x_curr, f_val, df_val, guard: float = 1e-14):
    """One Newton update: x_curr - f/f', guarding a vanishing derivative."""
    guard_denominator(df_val, f_val, 0.0, guard, stage="newton")
    return x_curr - f_val / df_val


def wfm_step(x_curr, f, df, guard: float = 1e-14):
    """One WFM update: averages the derivative at x and at a Newton predictor.

    Returns (x_next, predictor).  The corrector is
    x - 2 f(x) / (f'(x) + f'(predictor)), which collapses to the plain Newton
    step when the derivative is constant.
    """
    f_val = f(x_curr)
    df_val = df(x_curr)
    if not (is_finite_value(f_val) and is_finite_value(df_val)):
        raise NonFiniteValueError("non-finite value at current iterate")
    predictor = newton_step(x_curr, f_val, df_val, guard)
    if not is_finite_value(predictor):
        raise NonFiniteValueError("predictor is not finite")
    df_pred = df(predictor)
    if not is_finite_value(df_pred):
        raise NonFiniteValueError("non-finite derivative at predictor")
    den = df_val + df_pred
    guard_denominator(den, df_val, -df_pred, guard, stage="corrector")
    return x_curr - 2.0 * f_val / den, predictor


def fdwfm_step(x_prev, x_curr, f, guard: float = 1e-14):
    """One FDWFM update from the two most recent iterates.

    Returns (x_next, predictor).  Degenerate denominators raise with the
    stage ("predictor" or "corrector") attached.
    """
    f_prev = f(x_prev)
    f_curr = f(x_curr)
    den_pred = f_curr - f_prev
    try:
        guard_denominator(den_pred, f_curr, f_prev, guard)
    except DegenerateDenominatorError:
        raise DegenerateDenominatorError(
            "predictor divided difference is degenerate", stage="predictor") from None
    predictor = x_curr - f_curr * (x_curr - x_prev) / den_pred
    if not is_finite_value(predictor):
        raise NonFiniteValueError("predictor is not finite")
    f_pred = f(predictor)
    if not is_finite_value(f_pred):
        raise NonFiniteValueError("non-finite function value at predictor")
    den_corr = f_pred - f_curr
    try:
        guard_denominator(den_corr, f_pred, f_curr, guard)
    except DegenerateDenominatorError:
        raise DegenerateDenominatorError(
            "corrector divided difference is degenerate", stage="corrector") from None
    return x_curr - f_curr * (predictor - x_curr) / den_corr, predictor


# ---------------------------------------------------------------------------
# Driver


def _wrap_counted(f, config: SolverConfig) -> CountedFunction:
    if isinstance(f, CountedFunction):
        return f
    return CountedFunction(f, memo=not config.count_formal)


def _finish(status, root, trace_builder, nfe, config) -> SolverReport:
    trace = trace_builder.freeze()
    iterations = len(trace) - trace.seed_count
    coc = estimate_coc(trace).rho if len(trace) >= 4 else None
    return SolverReport(status=status, root=root, iterations=iterations,
                        nfe=nfe, coc=coc, trace=trace)


def _solve_univariate(f, df, starts, method: Method, config: SolverConfig) -> SolverReport:
    """Shared driver for the four one-dimensional methods.

    ``starts`` holds one point (Newton, WFM) or two (secant, FDWFM).  One
    iteration is one accepted update of the main iterate; predictor sub-steps
    are not recorded in the trace.
    """
    counted = _wrap_counted(f, config)
    nfe_base = counted.eval_count
    trace = _TraceBuilder(seed_count=len(starts))

    def nfe() -> int:
        return counted.eval_count - nfe_base

    # Residuals of the starting guesses; an exact starting root means zero
    # iterations of work.
    residuals = []
    for point in starts:
        try:
            value = counted(point)
            residual = _residual_of(value)
        except (SolverError, EvalError, OverflowError, ZeroDivisionError):
            return _finish(Status.NON_FINITE_VALUE, point, trace, nfe(), config)
        trace.append(point, residual, nfe())
        residuals.append(residual)
    for point, residual in zip(starts, residuals):
        if residual <= config.residual_tol:
            return _finish(Status.CONVERGED, point, trace, nfe(), config)

    x_prev = starts[0] if len(starts) == 2 else None
    x_curr = starts[-1]
    f_curr = counted(x_curr)  # memo hit; value already paid for

    iteration = 0
    while True:
        iteration += 1
        try:
            x_next = _advance(method, counted, df, x_prev, x_curr, f_curr, config)
        except DegenerateDenominatorError:
            return _finish(Status.DEGENERATE_DENOMINATOR, x_curr, trace, nfe(), config)
        except (NonFiniteValueError, EvalError, OverflowError, ZeroDivisionError):
            return _finish(Status.NON_FINITE_VALUE, x_curr, trace, nfe(), config)

        if not is_finite_value(x_next):
            return _finish(Status.NON_FINITE_VALUE, x_curr, trace, nfe(), config)
        try:
            f_next = counted(x_next)
            residual = _residual_of(f_next)
        except (SolverError, EvalError, OverflowError, ZeroDivisionError):
            return _finish(Status.NON_FINITE_VALUE, x_curr, trace, nfe(), config)

        if x_next == x_curr and residual > config.residual_tol:
            # zero progress away from a root: the next divided difference
            # would be 0/0, so report the degeneracy now
            return _finish(Status.DEGENERATE_DENOMINATOR, x_curr, trace, nfe(), config)

        trace.append(x_next, residual, nfe())
        decision = check_stop(residual, abs(x_next - x_curr), iteration, config)
        x_prev, x_curr, f_curr = x_curr, x_next, f_next
        if decision is StopDecision.CONVERGED:
            return _finish(Status.CONVERGED, x_curr, trace, nfe(), config)
        if decision is StopDecision.MAX_ITER_EXCEEDED:
            return _finish(Status.MAX_ITER_EXCEEDED, x_curr, trace, nfe(), config)


def _residual_of(value) -> float:
    if not is_finite_value(value):
        raise NonFiniteValueError(f"non-finite function value {value!r}")
    return abs(value)


def _advance(method, counted, df, x_prev, x_curr, f_curr, config):
    guard = config.denom_guard
    if method is Method.SECANT:
        f_prev = counted(x_prev)
        return secant_step(x_prev, x_curr, f_prev, f_curr, guard)
    if method is Method.NEWTON:
        df_val = df(x_curr)
        if not is_finite_value(df_val):
            raise NonFiniteValueError("non-finite derivative value")
        return newton_step(x_curr, f_curr, df_val, guard)
    if method is Method.WFM:
        try:
            x_next, _ = wfm_step(x_curr, counted, df, guard)
        except DegenerateDenominatorError as err:
            if config.fallback_to_secant and err.stage == "corrector":
                return newton_step(x_curr, f_curr, df(x_curr), guard)
            raise
        return x_next
    if method is Method.FDWFM:
        try:
            x_next, _ = fdwfm_step(x_prev, x_curr, counted, guard)
        except DegenerateDenominatorError as err:
            if config.fallback_to_secant and err.stage == "corrector":
                f_prev = counted(x_prev)
                return secant_step(x_prev, x_curr, f_prev, f_curr, guard)
            raise
        return x_next
    raise ValueError(f"method {method} is not a one-dimensional scheme")


def solve_scalar(problem: ScalarProblem, method: Method,
                 config: SolverConfig = SolverConfig()) -> SolverReport:
    """Iterate ``method`` on a real problem until a stop condition fires.

    Secant and FDWFM consume the pair (x0, x1) on their first iteration and
    the two most recent iterates afterwards; Newton and WFM start from x0.
    """
    if method in (Method.SECANT, Method.FDWFM) and problem.x1 is None:
        raise ValueError(f"{method.value} requires a second starting point x1")
    if method in (Method.NEWTON, Method.WFM) and problem.df is None:
        raise ValueError(f"{method.value} requires a derivative function")
    if method in (Method.SECANT, Method.FDWFM):
        starts = (float(problem.x0), float(problem.x1))
    else:
        starts = (float(problem.x0),)
    return _solve_univariate(problem.f, problem.df, starts, method, config)
