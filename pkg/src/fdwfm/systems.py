"""Multivariate solvers: Newton, Broyden, WFM for systems, and the
derivative-free FDWFM procedure, plus the dense linear algebra they need.

All solvers share the quasi-Newton skeleton: keep an n-by-n working matrix A,
solve A s = -F(x) for the step, and (for the quasi-Newton family) refresh A
with the rank-one update

    A' = A + (y - A s) s^T / (s^T s)

which is the minimal-change matrix satisfying the secant condition A' s = y.

The FDWFM procedure is the predictor-corrector built from that machinery:

    1. predictor  X* = X - A^{-1} F(X)              (Broyden trial step)
    2. B = rank-one update of A along (X* - X, F(X*) - F(X))
    3. corrector  X+ = X - B^{-1} F(X)
    4. A' = rank-one update of A along (X+ - X, F(X+) - F(X))

In one dimension B is the divided difference (f(x*) - f(x)) / (x* - x), so
the corrector is exactly the scalar FDWFM formula and A' is the secant slope
over the accepted step, reproducing the scalar iterate sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .coc import estimate_coc
from .core import (
    CountedFunction,
    DegenerateDenominatorError,
    JacobianInit,
    NonFiniteValueError,
    SingularMatrixError,
    SingularPolicy,
    SolverConfig,
    SolverError,
    SolverReport,
    Status,
    StopDecision,
    _TraceBuilder,
    check_stop,
    is_finite_value,
)
from .expr import EvalError
from .scalar import Method

# A pivot below PIVOT_RTOL times the largest initial magnitude of its column
# marks the matrix as singular.
PIVOT_RTOL = 1e-12

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))


@dataclass(frozen=True)
class SystemProblem:
    """A square nonlinear system F(x) = 0.

    ``jacobian`` (analytic, n-by-n) is required by Newton and WFM only.
    ``a0`` optionally overrides the initial matrix for the quasi-Newton
    methods; by default it comes from ``config.jacobian_init``.
    """

    F: Callable[[np.ndarray], np.ndarray]
    x0: np.ndarray
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    a0: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.x0.ndim != 1 or self.x0.size == 0:
            raise ValueError("x0 must be a nonempty vector")
        if self.a0 is not None:
            a0 = np.asarray(self.a0, dtype=float)
            if a0.shape != (self.x0.size, self.x0.size):
                raise ValueError("a0 must be n-by-n")
            object.__setattr__(self, "a0", a0)

    @property
    def n(self) -> int:
        return self.x0.size


# ---------------------------------------------------------------------------
# Dense linear algebra


def lu_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by LU factorization with partial pivoting.

    Raises SingularMatrixError when an elimination pivot falls below
    ``PIVOT_RTOL`` times the largest initial magnitude of its column.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError("need a square matrix and a matching vector")
    col_scale = np.max(np.abs(A), axis=0)

    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        pivot = abs(A[p, k])
        if pivot == 0.0 or pivot < PIVOT_RTOL * col_scale[k]:
            raise SingularMatrixError(
                f"pivot {pivot:.3e} in column {k} below threshold")
        if p != k:
            A[[k, p]] = A[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        A[k + 1:, k] /= A[k, k]
        A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])

    x = b[perm]
    for k in range(1, n):  # forward substitution (unit lower triangle)
        x[k] -= A[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):  # back substitution
        x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x


def fd_jacobian(F, x: np.ndarray) -> np.ndarray:
    """Forward-difference Jacobian: column j is (F(x + h_j e_j) - F(x)) / h_j
    with h_j = sqrt(eps) * max(1, |x_j|).  Costs n + 1 evaluations of F."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(F(x), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise NonFiniteValueError("F(x) is not finite")
    n = x.size
    J = np.empty((f0.size, n))
    for j in range(n):
        h = _SQRT_EPS * max(1.0, abs(x[j]))
        xj = x.copy()
        xj[j] += h
        fj = np.asarray(F(xj), dtype=float)
        if not np.all(np.isfinite(fj)):
            raise NonFiniteValueError("F(x + h e_j) is not finite")
        J[:, j] = (fj - f0) / h
    return J


def broyden_update(A: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rank-one update A + (y - A s) s^T / (s^T s).

    The result satisfies the secant condition (A' s = y) up to roundoff.
    """
    A = np.asarray(A, dtype=float)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    ss = float(s @ s)
    if ss <= 1e-300:
        raise DegenerateDenominatorError("step has (near) zero norm", stage="update")
    return A + np.outer((y - A @ s) / ss, s)


# ---------------------------------------------------------------------------
# Shared solver plumbing


def _finish(status, root, trace_builder, nfe) -> SolverReport:
    trace = trace_builder.freeze()
    coc = estimate_coc(trace).rho if len(trace) >= 4 else None
    return SolverReport(status=status, root=root, iterations=len(trace) - 1,
                        nfe=nfe, coc=coc, trace=trace)


class _SystemRun:
    """State common to the system drivers: counting, tracing, stop checks."""

    def __init__(self, problem: SystemProblem, config: SolverConfig):
        self.problem = problem
        self.config = config
        raw = problem.F
        self.F = raw if isinstance(raw, CountedFunction) else \
            CountedFunction(raw, memo=not config.count_formal)
        self._nfe_base = self.F.eval_count
        self.trace = _TraceBuilder(seed_count=1)

    def nfe(self) -> int:
        return self.F.eval_count - self._nfe_base

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        value = np.asarray(self.F(x), dtype=float)
        if value.shape != (self.problem.n,):
            raise ValueError(
                f"F returned shape {value.shape}, expected ({self.problem.n},)")
        if not np.all(np.isfinite(value)):
            raise NonFiniteValueError("F value is not finite")
        return value

    def initial_matrix(self) -> np.ndarray:
        if self.problem.a0 is not None:
            return self.problem.a0.copy()
        if self.config.jacobian_init is JacobianInit.IDENTITY:
            return np.eye(self.problem.n)
        return fd_jacobian(self.F, self.problem.x0)

    def finish(self, status, root) -> SolverReport:
        return _finish(status, root, self.trace, self.nfe())


def _run_driver(problem, config, prepare, advance) -> SolverReport:
    """Generic driver: seed the trace, then call ``advance`` per iteration.

    ``prepare(run, x, Fx)`` builds per-method state; ``advance(run, state, x,
    Fx)`` returns (x_next, F_next, state).  Method failures surface as solver
    errors, which become the report status.
    """
    run = _SystemRun(problem, config)
    x = problem.x0.copy()
    try:
        Fx = run.evaluate(x)
    except (SolverError, EvalError, OverflowError, ZeroDivisionError):
        return run.finish(Status.NON_FINITE_VALUE, x)
    residual = float(np.linalg.norm(Fx))
    run.trace.append(x, residual, run.nfe())
    if residual <= config.residual_tol:
        return run.finish(Status.CONVERGED, x)

    try:
        state = prepare(run, x, Fx)
    except SolverError as err:
        return run.finish(err.status, x)
    except (EvalError, OverflowError, ZeroDivisionError):
        return run.finish(Status.NON_FINITE_VALUE, x)

    iteration = 0
    while True:
        iteration += 1
        try:
            x_next, F_next, state = advance(run, state, x, Fx)
        except SolverError as err:
            return run.finish(err.status, x)
        except (EvalError, OverflowError, ZeroDivisionError):
            return run.finish(Status.NON_FINITE_VALUE, x)
        if not is_finite_value(x_next):
            return run.finish(Status.NON_FINITE_VALUE, x)

        residual = float(np.linalg.norm(F_next))
        if np.array_equal(x_next, x) and residual > config.residual_tol:
            # zero progress away from a root: the iteration is frozen (the
            # next update would be degenerate), so report that now
            return run.finish(Status.DEGENERATE_DENOMINATOR, x)

        run.trace.append(x_next, residual, run.nfe())
        step = float(np.linalg.norm(x_next - x))
        decision = check_stop(residual, step, iteration, config)
        x, Fx = x_next, F_next
        if decision is StopDecision.CONVERGED:
            return run.finish(Status.CONVERGED, x)
        if decision is StopDecision.MAX_ITER_EXCEEDED:
            return run.finish(Status.MAX_ITER_EXCEEDED, x)


def _solve_with_recovery(run, A, rhs):
    """lu_solve with the configured singular-matrix policy: optionally
    recompute A from finite differences at the current point and retry once.

    Returns (solution, A) where A may have been reinitialized.
    """
    try:
        return lu_solve(A, rhs["b"]), A
    except SingularMatrixError:
        if run.config.on_singular is not SingularPolicy.REINIT_JACOBIAN:
            raise
        A = fd_jacobian(run.F, rhs["x"])
        return lu_solve(A, rhs["b"]), A


# ---------------------------------------------------------------------------
# Solvers


def solve_broyden(problem: SystemProblem,
                  config: SolverConfig = SolverConfig()) -> SolverReport:
    """Quasi-Newton iteration with the rank-one update in place of the
    Jacobian.  The initial matrix comes from ``config.jacobian_init`` (or
    ``problem.a0``)."""

    def prepare(run, x, Fx):
        return run.initial_matrix()

    def advance(run, A, x, Fx):
        s, A = _solve_with_recovery(run, A, {"b": -Fx, "x": x})
        x_next = x + s
        F_next = run.evaluate(x_next)
        A_next = broyden_update(A, s, F_next - Fx)
        return x_next, F_next, A_next

    return _run_driver(problem, config, prepare, advance)


def solve_fdwfm_system(problem: SystemProblem,
                       config: SolverConfig = SolverConfig()) -> SolverReport:
    """Derivative-free predictor-corrector for systems (see module docstring).

    With ``config.literal_step1`` the corrector is replaced by the literal
    reading  I_k = A^{-1} (F(X*) - F(X)),  kept only for comparison runs; it
    does not converge on the benchmark corpus.
    """

    def prepare(run, x, Fx):
        return run.initial_matrix()

    def advance(run, A, x, Fx):
        d, A = _solve_with_recovery(run, A, {"b": Fx, "x": x})
        x_star = x - d  # Broyden trial step as the predictor
        if not is_finite_value(x_star):
            raise NonFiniteValueError("predictor is not finite")
        F_star = run.evaluate(x_star)

        if run.config.literal_step1:
            step = lu_solve(A, F_star - Fx)
        else:
            try:
                B = broyden_update(A, x_star - x, F_star - Fx)
                step = -lu_solve(B, Fx)
            except (DegenerateDenominatorError, SingularMatrixError):
                if not run.config.fallback_to_secant:
                    raise
                step = -d  # fall back to the plain quasi-Newton trial step
        x_next = x + step
        F_next = run.evaluate(x_next)
        A_next = broyden_update(A, step, F_next - Fx)
        return x_next, F_next, A_next

    return _run_driver(problem, config, prepare, advance)


def _require_jacobian(problem):
    if problem.jacobian is None:
        raise ValueError("this method requires an analytic Jacobian")

    def J(x):
        value = np.asarray(problem.jacobian(x), dtype=float)
        if value.shape != (problem.n, problem.n):
            raise ValueError(f"Jacobian shape {value.shape}, expected square of {problem.n}")
        if not np.all(np.isfinite(value)):
            raise NonFiniteValueError("Jacobian is not finite")
        return value

    return J


def solve_newton_system(problem: SystemProblem,
                        config: SolverConfig = SolverConfig()) -> SolverReport:
    """Newton iteration with the analytic Jacobian."""
    J = _require_jacobian(problem)

    def prepare(run, x, Fx):
        return None

    def advance(run, state, x, Fx):
        s = lu_solve(J(x), -Fx)
        x_next = x + s
        return x_next, run.evaluate(x_next), None

    return _run_driver(problem, config, prepare, advance)


def solve_wfm_system(problem: SystemProblem,
                     config: SolverConfig = SolverConfig()) -> SolverReport:
    """WFM for systems: corrector solves with the sum of the Jacobians at the
    current point and at the Newton predictor,
    x+ = x - 2 [J(x) + J(x*)]^{-1} F(x)."""
    J = _require_jacobian(problem)

    def prepare(run, x, Fx):
        return None

    def advance(run, state, x, Fx):
        Jx = J(x)
        x_star = x - lu_solve(Jx, Fx)
        if not is_finite_value(x_star):
            raise NonFiniteValueError("predictor is not finite")
        x_next = x - 2.0 * lu_solve(Jx + J(x_star), Fx)
        return x_next, run.evaluate(x_next), None

    return _run_driver(problem, config, prepare, advance)


def solve_system(problem: SystemProblem, method: Method,
                 config: SolverConfig = SolverConfig()) -> SolverReport:
    """Dispatch a system problem to the chosen method."""
    if method is Method.BROYDEN:
        return solve_broyden(problem, config)
    if method is Method.FDWFM:
        return solve_fdwfm_system(problem, config)
    if method is Method.NEWTON:
        return solve_newton_system(problem, config)
    if method is Method.WFM:
        return solve_wfm_system(problem, config)
    raise ValueError(f"method {method} is not applicable to systems")
