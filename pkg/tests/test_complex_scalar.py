import cmath

import pytest

from fdwfm.complex_scalar import ComplexProblem, fdwfm_step_complex, solve_complex
from fdwfm.core import CountedFunction, SolverConfig, Status
from fdwfm.scalar import Method, ScalarProblem, solve_scalar


def test_affine_complex_one_step():
    # f(z) = (1+i)z - 2 has the root 2/(1+i) = 1 - i
    f = lambda z: (1 + 1j) * z - 2
    report = solve_complex(ComplexProblem(f=f, z0=0j, z1=1 + 0j), Method.FDWFM)
    assert report.status is Status.CONVERGED
    assert report.iterations == 1
    assert report.root == pytest.approx(1 - 1j, abs=1e-12)


def test_fdwfm_step_complex_is_shared_kernel():
    f = CountedFunction(lambda z: z * z + 1)
    z_next, predictor = fdwfm_step_complex(0 + 0.5j, 0.1 + 0.8j, f)
    assert isinstance(z_next, complex) and isinstance(predictor, complex)


def test_z2_plus_1_from_table_starts():
    f = lambda z: z * z + 1
    report = solve_complex(ComplexProblem(f=f, z0=0 + 0.5j, z1=0.1 + 0.8j), Method.FDWFM)
    assert report.status is Status.CONVERGED
    assert min(abs(report.root - 1j), abs(report.root + 1j)) < 1e-6
    assert report.iterations <= 6


def test_newton_z2_plus_1():
    f = lambda z: z * z + 1
    report = solve_complex(ComplexProblem(f=f, z0=0 + 0.5j, df=lambda z: 2 * z),
                           Method.NEWTON)
    assert report.status is Status.CONVERGED
    assert min(abs(report.root - 1j), abs(report.root + 1j)) < 1e-8


def test_z4_plus_1_reaches_primitive_eighth_root():
    f = lambda z: z**4 + 1
    report = solve_complex(ComplexProblem(f=f, z0=0.01 + 0.5j, z1=0.3 + 0.8j),
                           Method.FDWFM)
    assert report.status is Status.CONVERGED
    roots = [cmath.exp(1j * cmath.pi * k / 4) for k in (1, 3, 5, 7)]
    assert min(abs(report.root - r) for r in roots) < 1e-6


def test_requires_z1_and_derivative():
    f = lambda z: z * z + 1
    with pytest.raises(ValueError):
        solve_complex(ComplexProblem(f=f, z0=0j), Method.FDWFM)
    with pytest.raises(ValueError):
        solve_complex(ComplexProblem(f=f, z0=0j, z1=1j), Method.NEWTON)
    with pytest.raises(ValueError):
        ComplexProblem(f=f, z0=1j, z1=1j)


def test_conjugation_symmetry():
    # real coefficients: conjugated starts give the conjugated trace
    f = lambda z: z**3 - 3 * z * z + 3 * z
    up = solve_complex(ComplexProblem(f=f, z0=1.5 + 0.5j, z1=1.7 + 0.19j), Method.FDWFM)
    down = solve_complex(ComplexProblem(f=f, z0=1.5 - 0.5j, z1=1.7 - 0.19j), Method.FDWFM)
    assert up.status is Status.CONVERGED and down.status is Status.CONVERGED
    assert len(up.trace) == len(down.trace)
    for a, b in zip(up.trace.iterates, down.trace.iterates):
        assert abs(a - b.conjugate()) <= 1e-14 * max(1.0, abs(a))


def test_real_embedding_matches_scalar_bitwise():
    # a polynomial keeps complex arithmetic on the real axis exact, so the
    # complex driver must retrace the real driver bit for bit
    real_f = lambda x: x * x * x + 5 * x + 4
    cplx_f = lambda z: z * z * z + 5 * z + 4
    scalar = solve_scalar(ScalarProblem(f=real_f, x0=0.0, x1=1.0), Method.FDWFM)
    embedded = solve_complex(ComplexProblem(f=cplx_f, z0=0 + 0j, z1=1 + 0j), Method.FDWFM)
    assert len(scalar.trace) == len(embedded.trace)
    for x, z in zip(scalar.trace.iterates, embedded.trace.iterates):
        assert z.imag == 0.0
        assert z.real == x  # bitwise
    assert scalar.trace.residual_norms == embedded.trace.residual_norms


def test_converged_roots_have_small_residual(corpus):
    # every converged complex corpus run lands within 10x the tolerance
    config = SolverConfig()
    for problem in corpus:
        if problem.kind.value != "complex":
            continue
        f, df = problem.complex_callables()
        for method in (Method.SECANT, Method.NEWTON, Method.WFM, Method.FDWFM):
            report = solve_complex(
                ComplexProblem(f=f, z0=problem.x0, z1=problem.x1, df=df), method, config)
            if report.status is Status.CONVERGED:
                assert abs(f(report.root)) <= config.residual_tol * 10
