"""Computational order of convergence estimated from an iteration trace.

The estimate is the classic ratio of log error ratios over three consecutive
iterates:  rho = ln(e_next/e_mid) / ln(e_mid/e_prev), where each error is the
distance from a reference point standing in for the unknown limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import IterationTrace


class TraceTooShortError(ValueError):
    """The trace cannot supply three error samples plus a reference point."""


@dataclass(frozen=True)
class CocEstimate:
    """Estimated order ``rho`` (None when undefined) plus provenance."""

    rho: Optional[float]
    iterates_used: tuple
    root_proxy: object

    @property
    def defined(self) -> bool:
        return self.rho is not None


def _distance(a, b) -> float:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return abs(a - b)


def estimate_coc(trace: IterationTrace, root_proxy=None) -> CocEstimate:
    """Estimate the convergence order from the tail of a trace.

    The three samples are the last three accepted iterates strictly before the
    final one; starting guesses (``trace.seed_count`` of them) are never used
    as samples.  ``root_proxy`` defaults to the final iterate, which is why
    the final iterate is excluded from the sample window: its error against
    itself would be identically zero.

    Returns an estimate with ``rho=None`` (undefined) when fewer than three
    samples are available, when the error norms are not strictly positive and
    strictly decreasing, or when a logarithm ratio degenerates.  The sample
    errors routinely sit at the machine-noise level for fast methods (the
    last accepted step often lands within a few ulps of the limit), and the
    log-ratio is still informative there, so no epsilon floor is applied
    beyond strict positivity.
    """
    if len(trace) < 4:
        raise TraceTooShortError(
            f"need at least 4 iterates to estimate an order, got {len(trace)}")
    if root_proxy is None:
        root_proxy = trace.iterates[-1]

    window = range(max(trace.seed_count, len(trace) - 4), len(trace) - 1)
    indices = tuple(window)
    if len(indices) < 3:
        return CocEstimate(rho=None, iterates_used=indices, root_proxy=root_proxy)

    errors = [_distance(trace.iterates[k], root_proxy) for k in indices]
    if not (errors[0] > errors[1] > errors[2] > 0.0):
        return CocEstimate(rho=None, iterates_used=indices, root_proxy=root_proxy)

    numerator = math.log(errors[2] / errors[1])
    denominator = math.log(errors[1] / errors[0])
    if denominator == 0.0 or not math.isfinite(numerator) or not math.isfinite(denominator):
        return CocEstimate(rho=None, iterates_used=indices, root_proxy=root_proxy)

    rho = numerator / denominator
    if not math.isfinite(rho) or rho <= 0:
        return CocEstimate(rho=None, iterates_used=indices, root_proxy=root_proxy)
    return CocEstimate(rho=rho, iterates_used=indices, root_proxy=root_proxy)
