import math
import random

import pytest

from fdwfm.core import (
    CountedFunction,
    DegenerateDenominatorError,
    SolverConfig,
    Status,
)
from fdwfm.scalar import (
    Method,
    ScalarProblem,
    fdwfm_step,
    newton_step,
    secant_step,
    solve_scalar,
    wfm_step,
)


# ---------------------------------------------------------------------------
# step primitives


def test_secant_step_affine_exact():
    # f(x) = 2x - 4 from (0, 1): secant lands on the root exactly
    assert secant_step(0.0, 1.0, -4.0, -2.0) == 2.0


def test_secant_step_quadratic():
    # f(x) = x^2 - 4 from (1, 3): 3 - 5*(3-1)/(5-(-3)) = 1.75
    assert secant_step(1.0, 3.0, -3.0, 5.0) == 1.75


def test_secant_step_constant_function_degenerates():
    with pytest.raises(DegenerateDenominatorError):
        secant_step(0.0, 1.0, 2.5, 2.5)


def test_fdwfm_step_quadratic():
    f = CountedFunction(lambda x: x**2 - 4)
    x_next, predictor = fdwfm_step(1.0, 3.0, f)
    assert predictor == 1.75
    # corrector: 3 - 5*(1.75-3)/(f(1.75)-5) = 3 - 5*(-1.25)/(-5.9375)
    assert x_next == pytest.approx(1.9473684210526316, rel=1e-12)


def test_fdwfm_step_affine_hits_root():
    f = CountedFunction(lambda x: 3.0 * x - 6.0)
    x_next, predictor = fdwfm_step(0.0, 1.0, f)
    assert predictor == pytest.approx(2.0, abs=1e-15)
    assert x_next == pytest.approx(2.0, abs=1e-15)


def test_fdwfm_step_degenerate_stage_is_tagged():
    f = CountedFunction(lambda x: 1.0)
    with pytest.raises(DegenerateDenominatorError) as err:
        fdwfm_step(0.0, 1.0, f)
    assert err.value.stage == "predictor"


def test_newton_step_quadratic():
    # f(x) = x^2 - 4 at x=3: 3 - 5/6
    assert newton_step(3.0, 5.0, 6.0) == pytest.approx(2.1666666666666667, rel=1e-15)


def test_newton_step_linear_exact():
    assert newton_step(5.0, 5.0, 1.0) == 0.0


def test_newton_step_vanishing_derivative():
    with pytest.raises(DegenerateDenominatorError):
        newton_step(1.0, 2.0, 0.0)


def test_wfm_step_quadratic():
    f = CountedFunction(lambda x: x**2 - 4)
    df = lambda x: 2 * x
    x_next, predictor = wfm_step(3.0, f, df)
    assert predictor == pytest.approx(13.0 / 6.0, rel=1e-15)
    # 3 - 2*5/(6 + 13/3) = 3 - 30/31
    assert x_next == pytest.approx(3.0 - 30.0 / 31.0, rel=1e-14)


def test_wfm_step_affine_is_newton():
    f = CountedFunction(lambda x: 2.0 * x - 4.0)
    x_next, predictor = wfm_step(5.0, f, lambda x: 2.0)
    assert x_next == predictor == 2.0


# ---------------------------------------------------------------------------
# driver


def make_problem(**kwargs):
    defaults = dict(f=lambda x: math.cos(x) - x, x0=0.0, x1=1.0,
                    df=lambda x: -math.sin(x) - 1.0)
    defaults.update(kwargs)
    return ScalarProblem(**defaults)


def test_fdwfm_driver_cos_x():
    report = solve_scalar(make_problem(), Method.FDWFM)
    assert report.status is Status.CONVERGED
    assert report.root == pytest.approx(0.7390851332151607, abs=1e-9)
    assert report.iterations == 3
    assert report.coc is None  # too few usable samples: matches the source table


def test_newton_driver_cos_x():
    report = solve_scalar(make_problem(), Method.NEWTON)
    assert report.status is Status.CONVERGED
    assert report.root == pytest.approx(0.7390851332151607, abs=1e-9)


def test_driver_polynomial_sign_corrected_root():
    problem = make_problem(f=lambda x: x**3 + 5*x + 4, df=lambda x: 3*x**2 + 5)
    report = solve_scalar(problem, Method.FDWFM)
    assert report.status is Status.CONVERGED
    assert report.root == pytest.approx(-0.7240755513862803, abs=1e-7)


def test_required_fields():
    with pytest.raises(ValueError):
        solve_scalar(make_problem(x1=None), Method.SECANT)
    with pytest.raises(ValueError):
        solve_scalar(make_problem(df=None), Method.NEWTON)
    with pytest.raises(ValueError):
        solve_scalar(make_problem(df=None), Method.WFM)


def test_distinct_starting_points_required():
    with pytest.raises(ValueError):
        ScalarProblem(f=lambda x: x, x0=1.0, x1=1.0)


def test_root_stationarity():
    # exact root at x0: no iterations performed
    report = solve_scalar(make_problem(f=lambda x: x - 0.0, x0=0.0, x1=1.0),
                          Method.FDWFM)
    assert report.status is Status.CONVERGED
    assert report.root == 0.0
    assert report.iterations == 0


def test_affine_exactness_all_methods():
    rng = random.Random(99)
    for _ in range(50):
        a = rng.choice([-1, 1]) * rng.uniform(0.1, 10.0)
        b = rng.uniform(-10.0, 10.0)
        f = lambda x, a=a, b=b: a * x + b
        df = lambda x, a=a: a
        x0 = rng.uniform(-5, 5)
        x1 = x0 + rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)
        for method in Method:
            if method is Method.BROYDEN:
                continue
            report = solve_scalar(ScalarProblem(f=f, x0=x0, x1=x1, df=df), method)
            assert report.status is Status.CONVERGED
            assert report.iterations == 1
            assert abs(f(report.root)) <= 1e-12


def test_degenerate_denominator_status_no_silent_fallback():
    # constant function: the first divided difference collapses
    report = solve_scalar(make_problem(f=lambda x: 2.0), Method.FDWFM)
    assert report.status is Status.DEGENERATE_DENOMINATOR


def test_fallback_to_secant_recovers_corrector():
    # f flattens between the predictor and current point; with the flag the
    # driver takes the plain secant step instead of giving up
    calls = {"n": 0}

    def plateau(x):
        # affine near the starts, constant beyond the predictor's landing
        return -1.0 if x >= 4.0 else x - 5.0

    base = solve_scalar(ScalarProblem(f=plateau, x0=0.0, x1=1.0), Method.FDWFM)
    assert base.status is Status.DEGENERATE_DENOMINATOR
    recovered = solve_scalar(ScalarProblem(f=plateau, x0=0.0, x1=1.0),
                             Method.FDWFM, SolverConfig(fallback_to_secant=True))
    assert recovered.trace.iterates != base.trace.iterates


def test_nonfinite_function_value_status():
    report = solve_scalar(make_problem(f=lambda x: float("nan")), Method.FDWFM)
    assert report.status is Status.NON_FINITE_VALUE


def test_overflowing_iteration_reports_nonfinite():
    # the steep exponential launches the secant iterate far out where the
    # function overflows
    f = lambda x: math.exp(x**2 + 7*x - 30) - 1
    report = solve_scalar(ScalarProblem(f=f, x0=40.0, x1=41.0), Method.SECANT,
                          SolverConfig(max_iter=50))
    assert report.status in (Status.NON_FINITE_VALUE, Status.DEGENERATE_DENOMINATOR)


def test_iterations_equal_trace_minus_seeds():
    for method in (Method.SECANT, Method.FDWFM):
        report = solve_scalar(make_problem(), method)
        assert report.iterations == len(report.trace) - 2
        assert report.trace.seed_count == 2
    for method in (Method.NEWTON, Method.WFM):
        report = solve_scalar(make_problem(), method)
        assert report.iterations == len(report.trace) - 1
        assert report.trace.seed_count == 1


def test_nfe_accounting_default_and_formal():
    f = lambda x: x**3 + 5*x + 4
    report = solve_scalar(ScalarProblem(f=f, x0=0.0, x1=1.0), Method.FDWFM)
    # memoized accounting: two seed evaluations plus predictor+iterate per step
    assert report.nfe == 2 + 2 * report.iterations
    formal = solve_scalar(ScalarProblem(f=f, x0=0.0, x1=1.0), Method.FDWFM,
                          SolverConfig(count_formal=True))
    assert formal.nfe > report.nfe  # raw counting re-pays for cached values


def test_secant_nfe():
    f = lambda x: x**3 + 5*x + 4
    report = solve_scalar(ScalarProblem(f=f, x0=0.0, x1=1.0), Method.SECANT)
    assert report.nfe == 2 + report.iterations


def test_trace_residuals_match_iterates():
    report = solve_scalar(make_problem(), Method.FDWFM)
    f = lambda x: math.cos(x) - x
    for x, r in zip(report.trace.iterates, report.trace.residual_norms):
        assert r == abs(f(x))
