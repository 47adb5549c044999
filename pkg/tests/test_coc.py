import math

import numpy as np
import pytest

from fdwfm.coc import CocEstimate, TraceTooShortError, estimate_coc
from fdwfm.core import IterationTrace


def synthetic_trace(errors, seed_count=0):
    """Iterates at distance `errors` from 0, plus residual/nfe filler."""
    points = tuple(float(e) for e in errors)
    return IterationTrace(iterates=points,
                          residual_norms=tuple(abs(p) for p in points),
                          nfe_at_step=tuple(range(1, len(points) + 1)),
                          seed_count=seed_count)


def test_quadratic_error_model():
    trace = synthetic_trace([10.0**(-2**n) for n in range(1, 5)])
    estimate = estimate_coc(trace, root_proxy=0.0)
    assert estimate.rho == pytest.approx(2.0, abs=1e-9)


def test_linear_error_model():
    trace = synthetic_trace([0.5**n for n in range(1, 5)])
    estimate = estimate_coc(trace, root_proxy=0.0)
    assert estimate.rho == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0])
def test_order_recovery(p):
    errors = [1e-2]
    for _ in range(3):
        errors.append(errors[-1] ** p)
    estimate = estimate_coc(synthetic_trace(errors), root_proxy=0.0)
    assert estimate.rho == pytest.approx(p, abs=1e-6)


def test_scale_invariance():
    errors = [1e-2, 1e-3, 10**-4.5, 10**-6.75]
    base = estimate_coc(synthetic_trace(errors), root_proxy=0.0).rho
    scaled = estimate_coc(synthetic_trace([7.3 * e for e in errors]), root_proxy=0.0).rho
    assert scaled == pytest.approx(base, abs=1e-12)


def test_default_proxy_is_final_iterate():
    # proxy = last point, window = the three before it
    errors = [1e-1, 1e-2, 1e-4, 1e-8, 0.0]
    estimate = estimate_coc(synthetic_trace(errors))
    assert estimate.root_proxy == 0.0
    assert estimate.iterates_used == (1, 2, 3)
    assert estimate.rho == pytest.approx(2.0, rel=1e-6)


def test_trace_too_short():
    with pytest.raises(TraceTooShortError):
        estimate_coc(synthetic_trace([1e-1, 1e-2, 1e-3]))


def test_seed_iterates_are_not_samples():
    # two seeds + three computed points leave only two usable samples
    trace = synthetic_trace([0.9, 0.5, 1e-2, 1e-4, 1e-8], seed_count=2)
    estimate = estimate_coc(trace)
    assert estimate.rho is None


def test_not_defined_when_errors_increase():
    trace = synthetic_trace([1e-4, 1e-2, 1e-3, 0.0])
    assert estimate_coc(trace).rho is None


def test_not_defined_on_zero_error():
    trace = synthetic_trace([1e-2, 1e-4, 0.0, 0.0])
    assert estimate_coc(trace).rho is None


def test_not_defined_on_equal_errors():
    trace = synthetic_trace([1e-2, 1e-2, 1e-4, 0.0])
    assert estimate_coc(trace).rho is None


def test_vector_iterates():
    points = tuple(np.array([e, 0.0]) for e in (1e-1, 1e-2, 1e-4, 1e-8))
    trace = IterationTrace(iterates=points,
                           residual_norms=(1e-1, 1e-2, 1e-4, 1e-8),
                           nfe_at_step=(1, 2, 3, 4), seed_count=0)
    estimate = estimate_coc(trace, root_proxy=np.zeros(2))
    assert estimate.rho == pytest.approx(2.0, rel=1e-6)


def test_estimate_is_frozen_record():
    trace = synthetic_trace([1e-1, 1e-2, 1e-4, 1e-8])
    estimate = estimate_coc(trace, root_proxy=0.0)
    assert isinstance(estimate, CocEstimate)
    assert estimate.defined
    assert estimate.iterates_used == (0, 1, 2)
