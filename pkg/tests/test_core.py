import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from cogregion import (
    RatePair,
    RateRegion,
    excess,
    hausdorff,
    pareto_frontier,
    read_region_csv,
    region_contains,
    simplify,
    write_region_csv,
)
from cogregion.core import capacity, polygon_corners

points = st.lists(st.tuples(st.floats(0, 5), st.floats(0, 5)), min_size=1, max_size=30)


def region(pts):
    return pareto_frontier(np.array(pts, dtype=float).reshape(-1, 2))


def in_closure(verts, p):
    """LP oracle: p is dominated by a convex combination of verts."""
    k = len(verts)
    res = linprog(np.zeros(k), A_ub=-verts.T, b_ub=-p, A_eq=np.ones((1, k)), b_eq=[1.0],
                  bounds=[(0, None)] * k, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10})
    return res.status == 0


def excess_oracle(outer, p, iters=60):
    verts = outer.as_array()
    lo, hi = 0.0, float(max(p)) + 1.0
    if in_closure(verts, p):
        return 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if in_closure(verts, np.maximum(p - mid, 0.0)) else (mid, hi)
    return hi


def test_pareto_examples():
    assert pareto_frontier([(1, 0), (0, 1)]).frontier == (RatePair(1, 0), RatePair(0, 1))
    assert pareto_frontier([(1, 1), (0.5, 0.5)]).frontier == (RatePair(1, 1),)
    # interior point of the chord is dropped
    assert len(pareto_frontier([(2, 0), (1, 1), (0, 2)]).frontier) == 2


def test_pareto_rejects_bad_input():
    with pytest.raises(ValueError, match="no points"):
        pareto_frontier([])
    with pytest.raises(ValueError):
        pareto_frontier([(-1.0, 0.0)])
    with pytest.raises(ValueError):
        pareto_frontier([(math.nan, 0.0)])


def test_staircase_matches_dominance_oracle():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, (100, 2))
    undominated = [p for p in pts if not any(np.all(q >= p) and np.any(q > p) for q in pts)]
    hull = region(pts).as_array()
    # every vertex is an undominated input point
    for v in hull:
        assert any(np.array_equal(v, u) for u in undominated)
    # every input point lies in the region
    assert np.all(excess(region(pts), pts) <= 1e-12)


@given(points)
def test_frontier_shape_and_cover(pts):
    r = region(pts)
    v = r.as_array()
    assert np.all(np.diff(v[:, 1]) > 0) and np.all(np.diff(v[:, 0]) < 0)
    # concave: consecutive vertices turn left when walked by decreasing r1
    if len(v) >= 3:
        cross = [(b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) for a, b, c in zip(v, v[1:], v[2:])]
        assert min(cross) > 0
    assert np.all(excess(r, pts) <= 1e-12)


@given(points)
def test_pareto_idempotent(pts):
    r = region(pts)
    assert pareto_frontier(r).frontier == r.frontier


def test_region_contains_examples():
    a = region([(1, 0), (0, 1)])
    cmp = region_contains(a, a)
    assert cmp.subset_holds and cmp.max_violation == 0.0
    assert region_contains(region([(2, 2)]), region([(1, 1)])).subset_holds
    cmp = region_contains(region([(1, 1)]), region([(1.5, 0.5)]))
    assert not cmp.subset_holds
    assert cmp.max_violation == pytest.approx(0.5)
    assert cmp.witness == RatePair(1.5, 0.5)


def test_empty_regions():
    e = RateRegion.empty()
    assert region_contains(region([(1, 1)]), e).subset_holds
    assert not region_contains(e, region([(1, 1)])).subset_holds


@given(points, points, points)
def test_containment_reflexive_and_transitive(p, q, s):
    a, b, c = region(p), region(p + q), region(p + q + s)
    assert region_contains(a, a, 0.0).subset_holds
    assert region_contains(b, a, 1e-12).subset_holds
    assert region_contains(c, b, 1e-12).subset_holds
    assert region_contains(c, a, 1e-12).subset_holds


@settings(max_examples=25, deadline=None)
@given(points, st.tuples(st.floats(0, 6), st.floats(0, 6)))
def test_excess_matches_lp_bisection(pts, p):
    r = region(pts)
    assert excess(r, p)[0] == pytest.approx(excess_oracle(r, np.array(p)), abs=1e-7)


@given(points, points)
def test_hausdorff_symmetric_and_zero_on_self(p, q):
    a, b = region(p), region(q)
    assert hausdorff(a, a) == 0.0
    assert hausdorff(a, b) == hausdorff(b, a)


def test_simplify_keeps_containment():
    t = np.linspace(0, np.pi / 2, 2000)
    r = pareto_frontier(np.column_stack([np.cos(t), np.sin(t)]))
    s = simplify(r, 1e-6)
    assert len(s.frontier) < len(r.frontier)
    assert region_contains(r, s, 0.0).subset_holds
    assert hausdorff(r, s) <= 1e-6


def test_r1_at_and_r2_at():
    r = region([(2, 0), (1, 1.5), (0, 2)])
    assert r.r1_at(0.0) == 2 and r.r1_at(1.5) == 1 and r.r1_at(3.0) == -math.inf
    assert r.r1_at(0.75) == pytest.approx(1.5)
    assert r.r2_at(1.5) == pytest.approx(0.75)
    assert r.r2_at(0.0) == 2


def test_polygon_corners():
    (x1, y1), (x2, y2) = polygon_corners(1.0, 1.0, 1.5)
    assert (x1, y1, x2, y2) == (1.0, 0.5, 0.5, 1.0)
    (x1, y1), (x2, y2) = polygon_corners(1.0, 1.0, 3.0)
    assert (x1, y1) == (x2, y2) == (1.0, 1.0)


def test_csv_round_trip(tmp_path):
    r = region(np.random.default_rng(1).uniform(0, 3, (40, 2)))
    path = tmp_path / "r.csv"
    write_region_csv(r, path)
    back = read_region_csv(path)
    assert np.array_equal(back.as_array(), r.as_array())
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_region_csv(tmp_path / "bad.csv")


def test_capacity():
    assert capacity(6.0) == pytest.approx(1.403677, abs=1e-6)
    assert np.allclose(capacity(np.array([0.0, 3.0])), [0.0, 1.0])


def test_rate_pair_validation():
    with pytest.raises(ValueError):
        RatePair(-0.1, 0.0)
    with pytest.raises(ValueError):
        RatePair(math.inf, 0.0)
    with pytest.raises(ValueError):
        RateRegion((RatePair(1, 0), RatePair(1, 1)))
