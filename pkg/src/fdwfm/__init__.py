"""Derivative-free nonlinear root finding with a benchmark harness.

The package implements the finite-difference Weerakoon-Fernando predictor-
corrector (FDWFM) for real scalars, complex scalars and square systems,
alongside the secant, Newton, WFM and Broyden baselines, plus an expression
parser, a convergence-order estimator, a built-in benchmark corpus and a
comparison-report generator.
"""

from .coc import CocEstimate, TraceTooShortError, estimate_coc
from .complex_scalar import ComplexProblem, fdwfm_step_complex, solve_complex
from .core import (
    CountedFunction,
    DegenerateDenominatorError,
    IterationTrace,
    JacobianInit,
    NonFiniteValueError,
    SingularMatrixError,
    SingularPolicy,
    SolverConfig,
    SolverError,
    SolverReport,
    Status,
    StopDecision,
    check_stop,
    residual_norm,
)
from .corpus import (
    FormatError,
    ProblemKind,
    ProblemSpec,
    ValidationError,
    builtin_corpus,
    load_problems,
)
from .expr import EvalError, ParseError, eval_complex, eval_real, parse, to_source
from .report import ComparisonRow, MethodResult, render_report, run_comparison
from .scalar import (
    Method,
    ScalarProblem,
    fdwfm_step,
    newton_step,
    secant_step,
    solve_scalar,
    wfm_step,
)
from .systems import (
    SystemProblem,
    broyden_update,
    fd_jacobian,
    lu_solve,
    solve_broyden,
    solve_fdwfm_system,
    solve_newton_system,
    solve_system,
    solve_wfm_system,
)

__version__ = "0.1.0"
