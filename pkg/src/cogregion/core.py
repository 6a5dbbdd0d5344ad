"""Rate pairs, rate regions and region comparison.

A region is stored by the vertices of its Pareto boundary. The region itself
is the downward closure (within the nonnegative quadrant) of the convex hull
of those vertices, i.e. time sharing between achievable pairs is implied.
All rates are in bits per channel use.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-6


@dataclass(frozen=True, order=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self):
        if not (math.isfinite(self.r1) and math.isfinite(self.r2)):
            raise ValueError(f"rates must be finite, got ({self.r1}, {self.r2})")
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError(f"rates must be nonnegative, got ({self.r1}, {self.r2})")

    def dominates(self, other: RatePair) -> bool:
        return self.r1 >= other.r1 and self.r2 >= other.r2


@dataclass(frozen=True)
class RateRegion:
    """Pareto boundary of a downward-closed convex rate region.

    ``frontier`` is ordered by strictly increasing ``r2`` (and therefore
    strictly decreasing ``r1``). An empty frontier denotes the empty region,
    which only arises from infeasible constraint systems.
    """

    frontier: tuple[RatePair, ...]
    provenance: str = ""

    def __post_init__(self):
        pts = tuple(self.frontier)
        object.__setattr__(self, "frontier", pts)
        for p, q in zip(pts, pts[1:]):
            if not (q.r2 > p.r2 and q.r1 < p.r1):
                raise ValueError("frontier must have increasing r2 and decreasing r1")

    @classmethod
    def empty(cls, provenance: str = "") -> RateRegion:
        return cls((), provenance)

    @property
    def is_empty(self) -> bool:
        return not self.frontier

    @property
    def r1_intercept(self) -> float:
        """Largest R1 in the region (attained at the smallest-r2 vertex)."""
        return self.frontier[0].r1

    @property
    def r2_intercept(self) -> float:
        """Largest R2 in the region (attained at the largest-r2 vertex)."""
        return self.frontier[-1].r2

    def as_array(self) -> np.ndarray:
        return np.array([(p.r1, p.r2) for p in self.frontier], dtype=float).reshape(-1, 2)

    def r1_at(self, r2: float) -> float:
        """Largest R1 such that (R1, r2) lies in the region; -inf outside."""
        if self.is_empty or r2 > self.r2_intercept or r2 < 0:
            return -math.inf
        pts = self.frontier
        if r2 <= pts[0].r2:
            return pts[0].r1
        for p, q in zip(pts, pts[1:]):
            if r2 <= q.r2:
                t = (r2 - p.r2) / (q.r2 - p.r2)
                return p.r1 + t * (q.r1 - p.r1)
        return pts[-1].r1

    def r2_at(self, r1: float) -> float:
        """Largest R2 such that (r1, R2) lies in the region; -inf outside."""
        if self.is_empty or r1 > self.r1_intercept or r1 < 0:
            return -math.inf
        pts = self.frontier
        if r1 <= pts[-1].r1:
            return pts[-1].r2
        for p, q in zip(pts, pts[1:]):
            if r1 >= q.r1:
                t = (p.r1 - r1) / (p.r1 - q.r1)
                return p.r2 + t * (q.r2 - p.r2)
        return pts[0].r2

    def contains_point(self, pt: RatePair, tol: float = DEFAULT_TOL) -> bool:
        return _excess(self, pt.r1, pt.r2) <= tol


@dataclass(frozen=True)
class RegionComparison:
    subset_holds: bool
    max_violation: float
    witness: RatePair | None = None
    tol: float = field(default=DEFAULT_TOL, repr=False)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def pareto_frontier(points: Iterable, provenance: str = "") -> RateRegion:
    """Vertices of the upper concave envelope of the downward closure of ``points``.

    ``points`` may hold ``RatePair`` objects or ``(r1, r2)`` sequences / an
    ``(n, 2)`` array. Every input point ends up dominated by, or on, the
    returned frontier.
    """
    arr = _as_points(points)
    if arr.shape[0] == 0:
        raise ValueError("no points")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("points must be finite and nonnegative")

    # Sort by r1 descending, ties by r2 descending; then sweep for the staircase.
    srt = arr[np.lexsort((-arr[:, 1], -arr[:, 0]))]
    prev = np.concatenate([[-1.0], np.maximum.accumulate(srt[:, 1])[:-1]])
    stair = srt[srt[:, 1] > prev].tolist()
    # stair: r1 strictly decreasing, r2 strictly increasing. Upper hull of it.
    hull: list[tuple[float, float]] = []
    for p in stair:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return RateRegion(tuple(RatePair(r1, r2) for r1, r2 in hull), provenance)


def simplify(region: RateRegion, tol: float = 1e-9) -> RateRegion:
    """Drop frontier vertices lying within ``tol`` bits (Chebyshev) of the chord
    through their kept neighbours.

    The result is contained in ``region`` and within ``tol`` of it in
    Hausdorff distance.
    """
    v = region.as_array()
    if v.shape[0] <= 2:
        return region
    keep = np.zeros(v.shape[0], dtype=bool)
    keep[[0, -1]] = True
    stack = [(0, v.shape[0] - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        a, b = v[i], v[j]
        n = np.array([b[1] - a[1], a[0] - b[0]])
        gap = (v[i + 1:j] @ n - n @ a) / n.sum()
        k = int(np.argmax(gap))
        if gap[k] > tol:
            keep[i + 1 + k] = True
            stack += [(i, i + 1 + k), (i + 1 + k, j)]
    return RateRegion(tuple(p for p, k in zip(region.frontier, keep) if k), region.provenance)


def _as_points(points) -> np.ndarray:
    if isinstance(points, RateRegion):
        return points.as_array()
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=float).reshape(-1, 2)
    rows = [(p.r1, p.r2) if isinstance(p, RatePair) else tuple(p) for p in points]
    return np.array(rows, dtype=float).reshape(-1, 2)


def excess(outer: RateRegion, points) -> np.ndarray:
    """Smallest t >= 0 with ``p - (t, t)`` in the downward closure of ``outer``, per point.

    Along the frontier r2 - r1 is strictly increasing, so the diagonal ray
    through a point crosses exactly one edge (or one of the two caps
    through the intercepts), found by binary search.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if outer.is_empty:
        return np.full(p.shape[0], math.inf)
    v = outer.as_array()
    s = v[:, 1] - v[:, 0]
    d = p[:, 1] - p[:, 0]
    t = np.empty(p.shape[0])
    low, high = d <= s[0], d >= s[-1]
    t[low] = p[low, 0] - v[0, 0]            # vertical cap R1 <= r1_intercept
    t[high] = p[high, 1] - v[-1, 1]         # horizontal cap R2 <= r2_intercept
    mid = ~(low | high)
    if np.any(mid):
        i = np.searchsorted(s, d[mid]) - 1
        a, b = v[i], v[i + 1]
        # edge line n . (z - a) = 0 with n >= 0; t solves n . (p - t(1,1) - a) = 0.
        # Offsetting by a first makes the excess of a vertex exactly zero.
        n = np.column_stack([b[:, 1] - a[:, 1], a[:, 0] - b[:, 0]])
        t[mid] = np.sum(n * (p[mid] - a), axis=1) / n.sum(axis=1)
    return np.maximum(t, 0.0)


def _excess(outer: RateRegion, r1: float, r2: float) -> float:
    return float(excess(outer, [r1, r2])[0])


def region_contains(outer: RateRegion, inner: RateRegion, tol: float = DEFAULT_TOL) -> RegionComparison:
    """Check ``inner`` is a subset of ``outer`` up to ``tol`` bits (Chebyshev)."""
    if inner.is_empty:
        return RegionComparison(True, 0.0, None, tol)
    e = excess(outer, inner.as_array())
    k = int(np.argmax(e))
    worst = float(e[k])
    return RegionComparison(worst <= tol, worst, inner.frontier[k] if worst > 0 else None, tol)


def hausdorff(a: RateRegion, b: RateRegion) -> float:
    """Hausdorff distance (Chebyshev metric) between two regions.

    For downward-closed convex sets the distance from one set to the other is
    attained at a frontier vertex, so this is exact.
    """
    return max(region_contains(a, b, math.inf).max_violation,
               region_contains(b, a, math.inf).max_violation)


def polygon_corners(a, b, d):
    """Pareto corners of {R1 <= a, R2 <= b, R1 + R2 <= d, R >= 0}.

    Works elementwise on arrays. Returns two (r1, r2) corner arrays; they
    coincide when the sum constraint is inactive. Inputs must be >= 0.
    """
    a = np.minimum(a, d)
    b = np.minimum(b, d)
    c1 = (a, np.minimum(b, d - a))
    c2 = (np.minimum(a, d - b), b)
    return c1, c2


def write_region_csv(region: RateRegion, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r1_bits", "r2_bits"])
        for p in region.frontier:
            w.writerow([repr(float(p.r1)), repr(float(p.r2))])


def read_region_csv(path, provenance: str = "") -> RateRegion:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["r1_bits", "r2_bits"]:
        raise ValueError(f"{path}: expected header r1_bits,r2_bits")
    pts: Sequence[RatePair] = [RatePair(float(a), float(b)) for a, b in rows[1:]]
    return RateRegion(tuple(pts), provenance or Path(path).stem)


def capacity(snr):
    """Gaussian capacity 0.5 * log2(1 + snr), in bits."""
    if np.ndim(snr):
        return 0.5 * np.log2(1.0 + np.asarray(snr, dtype=float))
    return 0.5 * math.log2(1.0 + snr)
