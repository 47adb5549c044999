import numpy as np
import pytest

from fdwfm.corpus import builtin_corpus


def bisect(f, lo, hi, tol=1e-14, max_iter=200):
    """Plain bisection; the independent oracle used to pin expected roots."""
    flo, fhi = f(lo), f(hi)
    assert flo * fhi < 0, "oracle needs a sign change"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or (hi - lo) / 2 < tol:
            return mid
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


@pytest.fixture(scope="session")
def corpus():
    return builtin_corpus()


@pytest.fixture(scope="session")
def corpus_by_id(corpus):
    return {p.id: p for p in corpus}
