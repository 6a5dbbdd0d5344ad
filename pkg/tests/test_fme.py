import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from cogregion import RatePair, region_contains
from cogregion.cli import fme_check
from cogregion.fme import (
    THM1_ROWS,
    THM2_ROWS,
    IneqSystem,
    eliminate,
    eliminate_all,
    joint_system,
    project_system,
    project_to_r1r2,
    project_vertices,
    split_system,
)
from cogregion.fme import _vertex_table

rhs6 = st.lists(st.floats(0, 3), min_size=6, max_size=6)


def test_split_box_sums():
    sys = IneqSystem.from_rows(("R1a", "Rc", "R1"),
                               [[1, 0, 0], [0, 1, 0], [-1, -1, 1], [1, 1, -1]], [1, 2, 0, 0])
    out = eliminate_all(sys, ["R1a", "Rc"])
    rows = {tuple(c): b for c, b in zip(out.coeffs.tolist(), out.bounds[:, 0])}
    assert rows == {(1,): 3.0, (-1,): 0.0}


def test_unbounded_variable_drops_its_rows():
    # x has no upper bound: y <= x, y <= 5
    sys = IneqSystem.from_rows(("x", "y"), [[-1, 1], [0, 1]], [0, 5])
    out = eliminate(sys, "x")
    rows = {tuple(c): b for c, b in zip(out.coeffs.tolist(), out.bounds[:, 0])}
    assert rows == {(1,): 5.0, (-1,): 0.0}


def test_coefficients_restricted():
    with pytest.raises(ValueError, match="-1, 0 or \\+1"):
        IneqSystem.from_rows(("x",), [[2]], [1])
    with pytest.raises(ValueError):
        IneqSystem.from_rows(("x",), [[1]], [np.inf])


def random_system(rng, n_rows=7, n_vars=4):
    c = rng.integers(-1, 2, size=(n_rows, n_vars))
    c[np.all(c == 0, axis=1), 0] = 1
    return IneqSystem.from_rows([f"x{i}" for i in range(n_vars)], c, rng.uniform(0, 3, n_rows))


def test_one_step_projection_against_interval_oracle():
    rng = np.random.default_rng(0)
    sys = random_system(rng)
    out = eliminate(sys, "x3")
    pts = rng.uniform(-0.5, 3.5, (100_000, 3))
    # feasible x3 exists iff max of lower limits <= min of upper limits
    a, b = sys.coeffs.astype(float), sys.bounds[:, 0]
    rest = pts @ a[:, :3].T
    col = a[:, 3]
    lim = (b[None, :] - rest) / np.where(col == 0, 1.0, col)[None, :]
    hi = np.min(np.where(col > 0, lim, np.inf), axis=1)
    lo = np.max(np.where(col < 0, lim, -np.inf), axis=1)
    fixed = np.all(np.where(col == 0, rest <= b[None, :] + 1e-12, True), axis=1)
    oracle = fixed & (lo <= hi + 1e-12)
    got = np.all(pts @ out.coeffs.T <= out.bounds[:, 0] + 1e-12, axis=1) & out.feasible[0]
    assert oracle.any() and (~oracle).any()
    assert np.array_equal(got, oracle)


def test_two_variable_projection_against_lp():
    rng = np.random.default_rng(1)
    for _ in range(5):
        sys = random_system(rng)
        out = eliminate_all(sys, ["x2", "x3"])
        a, b = sys.coeffs.astype(float), sys.bounds[:, 0]
        for p in rng.uniform(-0.5, 3.5, (200, 2)):
            res = linprog(np.zeros(2), A_ub=a[:, 2:], b_ub=b - a[:, :2] @ p, bounds=[(None, None)] * 2,
                          method="highs")
            inside = bool(out.feasible[0] and np.all(out.coeffs @ p <= out.bounds[:, 0] + 1e-9))
            assert inside == (res.status == 0)


def region_for_order(sys, order):
    proj = eliminate_all(sys, order)
    return project_to_r1r2(proj)


@settings(max_examples=20, deadline=None)
@given(rhs6)
def test_elimination_order_does_not_matter(rhs):
    sys = split_system(THM1_ROWS, rhs)
    ref = region_for_order(sys, ["R1a", "Rc", "R2a", "R2b"])
    for order in itertools.permutations(["R1a", "Rc", "R2a", "R2b"]):
        got = region_for_order(sys, list(order))
        assert got.is_empty == ref.is_empty
        if not ref.is_empty:
            assert np.allclose(got.as_array(), ref.as_array(), atol=1e-12)


@given(rhs6, st.integers(0, 5), st.floats(0, 1))
def test_relaxing_a_bound_never_shrinks(rhs, k, delta):
    base = project_to_r1r2(split_system(THM1_ROWS, rhs))
    relaxed_rhs = list(rhs)
    relaxed_rhs[k] += delta
    relaxed = project_to_r1r2(split_system(THM1_ROWS, relaxed_rhs))
    assert region_contains(relaxed, base, 1e-12).subset_holds


@given(st.lists(st.floats(-0.5, 3), min_size=6, max_size=6), st.sampled_from([THM1_ROWS, THM2_ROWS]))
def test_every_projected_row_is_supported(rhs, rows):
    rows = rows[:len(rhs)]
    proj = project_system(split_system(rows, rhs[:len(rows)]))
    if not proj.feasible[0]:
        return
    pts, good = _vertex_table(proj.coeffs, proj.bounds, 1e-9)
    v = pts[good[:, 0], 0]
    for c, b in zip(proj.coeffs, proj.bounds[:, 0]):
        assert np.min(np.abs(v @ c - b)) <= 1e-9 * (1 + abs(b))


def test_eliminated_forms_match_direct_regions():
    res = fme_check(50, seed=3)
    assert res["max_deviation"]["joint"] <= 1e-9
    assert res["max_deviation"]["superposition"] <= 1e-9
    assert res["counts"]["superposition"] == 50


def test_zero_bounds_give_origin():
    assert project_to_r1r2(joint_system(0.0, 0.0, 0.0, 0.0)).frontier == (RatePair(0.0, 0.0),)


def test_infeasible_system_gives_empty_region():
    # R1a <= -1 contradicts R1a >= 0
    assert project_to_r1r2(joint_system(-1.0, 1.0, 1.0, 1.0)).is_empty


def test_batched_instances_match_single():
    rng = np.random.default_rng(4)
    rhs = rng.uniform(-0.2, 3, (6, 30))
    batch = project_vertices(split_system(THM1_ROWS, rhs))
    for k in range(30):
        single = project_vertices(split_system(THM1_ROWS, rhs[:, k]))[0]
        if single is None:
            assert batch[k] is None
        else:
            a = np.unique(np.round(single, 12), axis=0)
            b = np.unique(np.round(batch[k], 12), axis=0)
            assert np.array_equal(a, b)
