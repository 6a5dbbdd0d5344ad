"""Strong-interference outer bound for the Gaussian channel.

For |b| >= 1 every achievable pair satisfies, for some input correlation
rho in [0, 1],

    R1      <= C((1 - rho^2) P1)
    R1 + R2 <= C(b^2 P1 + P2 + 2 rho sqrt(b^2 P1 P2))

The outer region is the union over rho of these pentagons. ``trace_outer_frontier``
samples rho on a uniform grid; ``outer_contains`` tests membership in the
continuous union exactly, which avoids the chord error of the sampled frontier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, RateRegion, RegionComparison, capacity, pareto_frontier
from .gaussian import GaussianChannel


class InapplicableBound(ValueError):
    """Raised when a bound is requested for a channel outside its validity range."""


@dataclass(frozen=True)
class OuterParams:
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")


def strong_condition_holds(ch: GaussianChannel) -> bool:
    # Given X2, receiver 2 sees X1 with gain b and receiver 1 with gain 1.
    return ch.b**2 >= 1.0


def _require_strong(ch: GaussianChannel):
    if not strong_condition_holds(ch):
        raise InapplicableBound("strong-interference bound inapplicable")


def _caps(ch: GaussianChannel, rho):
    rho = np.asarray(rho, dtype=float)
    r1_cap = capacity(np.atleast_1d((1.0 - rho**2) * ch.p1))
    sum_cap = capacity(np.atleast_1d(ch.b**2 * ch.p1 + ch.p2 + 2.0 * rho * math.sqrt(ch.b**2 * ch.p1 * ch.p2)))
    return r1_cap, sum_cap


def outer_corner(ch: GaussianChannel, op: OuterParams) -> tuple[float, float]:
    """(R1 cap, R1 + R2 cap) in bits for correlation ``op.rho``."""
    _require_strong(ch)
    r1_cap, sum_cap = _caps(ch, op.rho)
    return float(r1_cap[0]), float(sum_cap[0])


def trace_outer_frontier(ch: GaussianChannel, steps: int = 129) -> RateRegion:
    _require_strong(ch)
    if steps < 2:
        raise ValueError("steps must be at least 2")
    rho = np.linspace(0.0, 1.0, steps)
    r1_cap, sum_cap = _caps(ch, rho)
    # the pentagon for each rho has corners (r1_cap, sum - r1_cap) and (0, sum)
    r1_cap = np.minimum(r1_cap, sum_cap)
    pts = np.concatenate([np.column_stack([r1_cap, sum_cap - r1_cap]),
                          np.column_stack([np.zeros_like(sum_cap), sum_cap])])
    return pareto_frontier(pts, provenance="strong-outer")


def outer_r2_at(ch: GaussianChannel, r1: float) -> float:
    """Largest R2 with (r1, R2) in the union over rho; -inf if r1 > C(P1).

    The R1 cap decreases in rho and the sum cap increases, so the best rho
    for a given r1 is the largest one whose R1 cap still admits r1.
    """
    _require_strong(ch)
    r1 = max(r1, 0.0)
    if ch.p1 == 0:
        return capacity(ch.p2) if r1 == 0 else -math.inf
    slack = 1.0 - (2.0 ** (2.0 * r1) - 1.0) / ch.p1
    if slack < 0:
        return -math.inf
    rho = math.sqrt(slack)
    sum_cap = capacity(ch.b**2 * ch.p1 + ch.p2 + 2.0 * rho * math.sqrt(ch.b**2 * ch.p1 * ch.p2))
    return sum_cap - r1


def outer_excess(ch: GaussianChannel, r1: float, r2: float) -> float:
    """Smallest t >= 0 such that (r1 - t, r2 - t) lies in the continuous outer region."""

    def inside(t):
        return r2 - t <= outer_r2_at(ch, r1 - t)

    if inside(0.0):
        return 0.0
    lo, hi = 0.0, max(r1, r2)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def outer_contains(ch: GaussianChannel, inner: RateRegion, tol: float = DEFAULT_TOL) -> RegionComparison:
    """Exact containment of ``inner`` in the union-over-rho outer region."""
    worst, witness = 0.0, None
    for v in inner.frontier:
        e = outer_excess(ch, v.r1, v.r2)
        if e > worst:
            worst, witness = e, v
    return RegionComparison(worst <= tol, worst, witness if worst > 0 else None, tol)

