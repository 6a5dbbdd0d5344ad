import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from cogregion import (
    GaussianChannel,
    InapplicableBound,
    OuterParams,
    hausdorff,
    outer_contains,
    outer_corner,
    pareto_frontier,
    strong_condition_holds,
    trace_outer_frontier,
)
from cogregion.core import capacity
from cogregion.outer import outer_excess

FIG = GaussianChannel.from_squared_gains(0.3, 2.0, 6.0, 6.0)
strong = st.builds(GaussianChannel.from_squared_gains, st.floats(0, 4), st.floats(1, 6),
                   st.floats(0.1, 30), st.floats(0.1, 30))


def test_condition():
    assert strong_condition_holds(FIG)
    assert strong_condition_holds(FIG.replace(b=1.0))
    assert not strong_condition_holds(GaussianChannel.from_squared_gains(0.3, 0.5, 6, 6))


def test_corner_values():
    r1, s = outer_corner(FIG, OuterParams(0.0))
    assert r1 == pytest.approx(1.403677, abs=1e-6)
    assert s == pytest.approx(0.5 * math.log2(19), abs=1e-15)
    assert s == pytest.approx(2.123964, abs=1e-6)
    r1, s = outer_corner(FIG, OuterParams(1.0))
    assert r1 == 0.0
    assert s == pytest.approx(capacity(18 + 2 * math.sqrt(72)), abs=1e-15)
    assert s == pytest.approx(2.584372, abs=1e-6)


def test_corner_against_high_precision():
    mpmath.mp.dps = 40
    rho = mpmath.mpf("0.5")
    c = lambda x: mpmath.log(1 + x, 2) / 2
    want_r1 = c((1 - rho**2) * 6)
    want_s = c(mpmath.mpf(2) * 6 + 6 + 2 * rho * mpmath.sqrt(mpmath.mpf(2) * 6 * 6))
    r1, s = outer_corner(FIG, OuterParams(0.5))
    assert abs(r1 - float(want_r1)) < 1e-12
    assert abs(s - float(want_s)) < 1e-12


def test_two_step_frontier():
    r = trace_outer_frontier(FIG, steps=2)
    assert r.frontier[0].r1 == pytest.approx(1.403677, abs=1e-6)
    assert r.frontier[-1].r1 == 0.0
    assert r.r2_intercept == pytest.approx(2.584372, abs=1e-6)
    assert trace_outer_frontier(FIG).r1_intercept == capacity(6.0)


def test_step_doubling():
    assert hausdorff(trace_outer_frontier(FIG, 64), trace_outer_frontier(FIG, 128)) < 1e-4


@given(strong, st.floats(0, 1), st.floats(0, 1))
def test_caps_monotone_in_rho(ch, a, b):
    lo, hi = sorted((a, b))
    r1_lo, s_lo = outer_corner(ch, OuterParams(lo))
    r1_hi, s_hi = outer_corner(ch, OuterParams(hi))
    assert r1_hi <= r1_lo + 1e-15
    assert s_hi >= s_lo - 1e-15


@given(strong)
def test_frontier_concave_and_sampled_inside_exact(ch):
    r = trace_outer_frontier(ch, 33)
    v = r.as_array()
    assert pareto_frontier(v).frontier == r.frontier
    # sampled pentagons are subsets of the continuous union
    assert outer_contains(ch, r, 1e-12).subset_holds


def test_exact_test_rejects_outside_points():
    fine = trace_outer_frontier(FIG, 1025)
    for v in fine.frontier[::50]:
        assert outer_excess(FIG, v.r1 + 1e-3, v.r2 + 1e-3) == pytest.approx(1e-3, abs=1e-5)


def test_weak_channel_rejected():
    weak = GaussianChannel.from_squared_gains(0.3, 0.5, 6, 6)
    for call in (lambda: outer_corner(weak, OuterParams(0.5)), lambda: trace_outer_frontier(weak),
                 lambda: outer_contains(weak, trace_outer_frontier(FIG))):
        with pytest.raises(InapplicableBound, match="strong-interference bound inapplicable"):
            call()


def test_param_validation():
    with pytest.raises(ValueError):
        OuterParams(1.5)
    with pytest.raises(ValueError):
        trace_outer_frontier(FIG, steps=1)
