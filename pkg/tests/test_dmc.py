import itertools
import json
import math

import numpy as np
import pytest

from cogregion import region_contains
from cogregion.dmc import (
    PATTERNS,
    Dmc,
    EntropyCache,
    JointPmf,
    Lemma1Setup,
    SearchSettings,
    check_factorization,
    factorized_pmf,
    functional_gap,
    lemma1_rate,
    lemma1_rate_alt,
    lemma1_search,
    lemma1_terms,
    mi_discrete,
    sample_factorized,
    thm1_region,
    thm1_rhs,
    thm2_region,
    thm2_rhs,
    thm3_outer,
    weak_outer,
    weak_rhs,
)
from cogregion.verify import chain_rule_gap, lemma1_gaps, random_lemma1_setup

QUICK = SearchSettings(samples=400, polish=4, polish_rounds=8)


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def mi_loop(pmf, a, b, c=()):
    """Conditional mutual information by explicit summation over the table."""
    names = pmf.names
    idx = {n: i for i, n in enumerate(names)}
    marg = {}
    for state in itertools.product(*(range(v.cardinality) for v in pmf.vars)):
        p = pmf.probs[state]
        if p == 0:
            continue
        ka = tuple(state[idx[n]] for n in a)
        kb = tuple(state[idx[n]] for n in b)
        kc = tuple(state[idx[n]] for n in c)
        for key in (("abc", ka, kb, kc), ("ac", ka, kc), ("bc", kb, kc), ("c", kc)):
            marg[key] = marg.get(key, 0.0) + p
    total = 0.0
    for key, p in marg.items():
        if key[0] == "abc":
            _, ka, kb, kc = key
            total += p * math.log2(p * marg[("c", kc)] / (marg[("ac", ka, kc)] * marg[("bc", kb, kc)]))
    return total


def deterministic_dmc(f1, f2, n=2):
    """Y1 = f1(x1, x2), Y2 = f2(x1, x2) over binary inputs."""
    w = np.zeros((2, 2, n, n))
    for x1, x2 in itertools.product(range(2), repeat=2):
        w[x1, x2, f1(x1, x2), f2(x1, x2)] = 1.0
    return Dmc(w)


CLEAN = deterministic_dmc(lambda x1, x2: x1, lambda x1, x2: x2)


# mutual information

def test_mi_closed_forms():
    noiseless = JointPmf.from_table(("X", "Y"), np.eye(2) / 2)
    assert mi_discrete(noiseless, ["X"], ["Y"]) == pytest.approx(1.0, abs=1e-15)
    indep = JointPmf.from_table(("X", "Y"), np.outer([0.3, 0.7], [0.6, 0.4]))
    assert mi_discrete(indep, ["X"], ["Y"]) == pytest.approx(0.0, abs=1e-15)
    e = 0.11
    bsc = JointPmf.from_table(("X", "Y"), np.array([[1 - e, e], [e, 1 - e]]) / 2)
    assert mi_discrete(bsc, ["X"], ["Y"]) == pytest.approx(1 - h2(e), abs=1e-12)


def test_mi_label_errors():
    pmf = JointPmf.from_table(("X", "Y"), np.eye(2) / 2)
    with pytest.raises(ValueError):
        mi_discrete(pmf, ["X"], ["U"])
    with pytest.raises(ValueError):
        mi_discrete(pmf, ["X"], ["X"])
    with pytest.raises(ValueError):
        JointPmf.from_table(("X", "Y"), np.eye(2))


def test_mi_matches_loop_oracle():
    rng = np.random.default_rng(0)
    for pattern in PATTERNS:
        for i in range(5):
            pmf = sample_factorized(pattern, Dmc.random(rng), seed=i)
            names = list(pmf.names)
            for _ in range(6):
                perm = rng.permutation(names)
                a, b, c = [perm[0]], list(perm[1:3]), list(perm[3:3 + rng.integers(0, 3)])
                assert mi_discrete(pmf, a, b, c) == pytest.approx(mi_loop(pmf, a, b, c), abs=1e-10)


def test_chain_rule_and_nonnegativity():
    rng = np.random.default_rng(1)
    for i in range(60):
        pattern = list(PATTERNS)[i % 3]
        gap, low = chain_rule_gap(sample_factorized(pattern, Dmc.random(rng), seed=i), rng, trials=10)
        assert gap <= 1e-10 and low >= -1e-10


# region right-hand sides

def test_rhs_match_loop_oracle():
    rng = np.random.default_rng(2)
    x2ab = ["X2a", "X2b"]
    for i in range(10):
        pmf = sample_factorized("thm1", Dmc.random(rng), seed=i)
        m = lambda a, b, c=(): mi_loop(pmf, a, b, list(c))
        want1 = [
            m(["U1a"], ["Y1"], ["U1c", "Q"]) - m(["U1a"], x2ab, ["U1c", "Q"]),
            m(["U1c", "U1a"], ["Y1"], ["Q"]) - m(["U1c", "U1a"], x2ab, ["Q"]),
            m(["X2"], ["Y2", "U1c"], ["Q"]),
            m(["X2", "U1c"], ["Y2"], ["Q"]),
            m(["X2b"], ["Y2", "U1c"], ["X2a", "Q"]),
            m(["X2b", "U1c"], ["Y2"], ["X2a", "Q"]),
        ]
        want2 = [
            m(["U1a"], ["Y1"], ["U1c", "Q"]) - m(["U1a"], ["X2"], ["U1c", "Q"]),
            min(m(["U1c"], ["Y1"], ["Q"]), m(["U1c"], ["Y2", "X2a"], ["Q"])) - m(["U1c"], ["X2"], ["Q"]),
            m(["X2a"], ["Y2"], ["Q"]),
            m(["X2b"], ["Y2", "U1c"], ["X2a", "Q"]),
        ]
        assert np.allclose(thm1_region(pmf).rhs, want1, atol=1e-10)
        assert np.allclose(thm2_region(pmf).rhs, want2, atol=1e-10)


def test_constant_auxiliaries_give_zero_region():
    cards = {"Q": 1, "X2a": 1, "X2b": 1, "U1c": 1, "U1a": 1}
    pmf = sample_factorized("thm1", Dmc.random(np.random.default_rng(3)), cards=cards, seed=0)
    assert np.allclose(thm1_region(pmf).rhs, 0.0, atol=1e-12)
    assert np.allclose(thm2_region(pmf).rhs, 0.0, atol=1e-12)
    region = thm1_region(pmf).region()
    assert abs(region.r1_intercept) <= 1e-15 and abs(region.r2_intercept) <= 1e-15


def clean_pmf(px1=0.3, px2=0.2, x2_in_a=False):
    """Y1 = X1, Y2 = X2, U1a = X1 independent of X2, U1c constant."""
    q, c = 1, 1
    a, b = (2, 1) if x2_in_a else (1, 2)
    pab = np.zeros((q, a, b))
    pab.reshape(-1)[:] = [1 - px2, px2]
    cux = np.zeros((q, a, b, c, 2, 2))
    for x in range(2):
        cux[..., 0, x, x] = [1 - px1, px1][x]
    g = np.zeros((q, a, b), dtype=int)
    g.reshape(-1)[:] = [0, 1]
    return factorized_pmf("thm1", CLEAN, {"q": np.ones(1), "ab": pab, "cux": cux}, {"g": g})


def test_clean_channel_bounds():
    pmf = clean_pmf()
    check_factorization(pmf, "thm1", CLEAN, tol=1e-15)
    rhs = thm1_region(pmf).rhs
    assert rhs[0] == pytest.approx(h2(0.3), abs=1e-12)    # R1a
    assert rhs[2] == pytest.approx(h2(0.2), abs=1e-12)    # R2
    pmf = clean_pmf(x2_in_a=True)
    assert thm2_region(pmf).rhs[2] == pytest.approx(mi_discrete(pmf, ["X2a"], ["Y2"]), abs=1e-15)
    assert thm2_region(pmf).rhs[2] == pytest.approx(h2(0.2), abs=1e-12)


# sampling

def test_sampling_is_deterministic():
    dmc = Dmc.random(np.random.default_rng(4))
    for pattern in PATTERNS:
        a = sample_factorized(pattern, dmc, seed=7)
        b = sample_factorized(pattern, dmc, seed=7)
        assert np.array_equal(a.probs, b.probs)


def test_uniform_factors_give_uniform_joint():
    dmc = Dmc(np.full((2, 2, 2, 2), 0.25))
    pmf = factorized_pmf("weak", dmc, {"ux": np.full((2, 2, 2), 1 / 8)})
    assert np.allclose(pmf.probs, 1 / 32, atol=1e-15)


def test_factorization_sweep():
    rng = np.random.default_rng(5)
    for i in range(1000):
        pattern = list(PATTERNS)[i % 3]
        dmc = Dmc.random(rng)
        pmf = sample_factorized(pattern, dmc, seed=i)
        check_factorization(pmf, pattern, dmc, tol=1e-12)
        if pattern == "thm1":
            assert functional_gap(pmf, "X2", ["Q", "X2a", "X2b"]) <= 1e-12


def test_factorization_violation_detected():
    pmf = sample_factorized("thm3", Dmc.random(np.random.default_rng(6)), seed=0)
    probs = np.array(pmf.probs)
    probs[0, 0, 0, 0, 0] += 0.05
    probs /= probs.sum()
    with pytest.raises(ValueError, match="factorization violated"):
        check_factorization(JointPmf.from_table(pmf.names, probs), "thm3")


def test_state_space_limit():
    with pytest.raises(ValueError, match="state space"):
        sample_factorized("thm1", Dmc.random(np.random.default_rng(0)),
                          cards={"Q": 20, "X2a": 20, "X2b": 20, "U1c": 20, "U1a": 20})


def test_sequential_region_probe(capsys):
    rng = np.random.default_rng(7)
    viol = emptied = 0
    for i in range(200):
        pmf = sample_factorized("thm1", Dmc.random(rng), seed=i)
        j1, j2 = thm1_region(pmf).region(), thm2_region(pmf).region()
        if j2.is_empty:
            continue
        if j1.is_empty:
            emptied += 1
        elif not region_contains(j1, j2, 1e-9).subset_holds:
            viol += 1
    print(f"sequential region outside joint region: {viol}/200, joint region empty: {emptied}/200")


# binning against a codebook

def test_lemma1_regimes_and_forms():
    rng = np.random.default_rng(8)
    for _ in range(100):
        setup = random_lemma1_setup(rng, rs=float(rng.uniform(0, 1)))
        g = lemma1_gaps(setup)
        assert g["at_h_s"] <= 1e-12 and g["at_zero"] <= 1e-12
        assert g["forms"] <= 1e-12
        assert g["boundary"] <= 1e-9
        assert lemma1_rate(setup) == pytest.approx(lemma1_rate_alt(setup), abs=1e-12)


def test_lemma1_endpoints():
    rng = np.random.default_rng(9)
    setup = random_lemma1_setup(rng)
    t = lemma1_terms(setup)
    at_zero = Lemma1Setup(setup.p_s, setup.p_u_given_s, setup.f, setup.channel, 0.0)
    at_h = Lemma1Setup(setup.p_s, setup.p_u_given_s, setup.f, setup.channel, t["h_s"])
    assert lemma1_rate(at_zero) == pytest.approx(t["i_x_y_given_s"], abs=1e-12)
    assert lemma1_rate(at_h) == pytest.approx(t["i_u_y"] - t["i_u_s"], abs=1e-12)


def test_lemma1_search_is_nonincreasing_in_rs():
    p_s = np.array([0.4, 0.6])
    channel = np.random.default_rng(10).dirichlet(np.ones(2), size=(2, 2))
    rates = [lemma1_search(p_s, channel, rs, levels=9)[0] for rs in (0.0, 0.3, 0.6, 1.0)]
    assert all(a >= b - 1e-12 for a, b in zip(rates, rates[1:]))


def test_lemma1_validation():
    with pytest.raises(ValueError):
        Lemma1Setup(np.array([0.5, 0.6]), np.full((2, 2), 0.5), np.zeros((2, 2), int), np.full((2, 2, 2), 0.5), 0.0)
    with pytest.raises(ValueError):
        Lemma1Setup(np.array([0.5, 0.5]), np.full((2, 2), 0.5), np.zeros((2, 2), int), np.full((2, 2, 2), 0.5), -1.0)


# outer bounds

def test_general_outer_clean_channel():
    region = thm3_outer(CLEAN, settings=QUICK)
    assert region.r1_at(1.0) >= 1.0 - 1e-12
    assert region.r1_intercept <= 1.0 + 1e-12 and region.r2_intercept <= 1.0 + 1e-12


def test_general_outer_constant_channel():
    dead = deterministic_dmc(lambda x1, x2: 0, lambda x1, x2: 0)
    region = thm3_outer(dead, settings=QUICK)
    assert abs(region.r1_intercept) <= 1e-15 and abs(region.r2_intercept) <= 1e-15


def test_weak_outer_silent_receiver_two():
    w = np.zeros((2, 2, 2, 2))
    w[0, :, 0, :] = 0.5
    w[1, :, 1, :] = 0.5
    region = weak_outer(Dmc(w), settings=QUICK)
    assert region.r2_intercept == pytest.approx(0.0, abs=1e-12)
    # the search approximates from inside; I(X1;Y1|X2) = 1 is the cap
    assert 0.9 <= region.r1_intercept <= 1.0 + 1e-12


def test_weak_bounds_with_constant_auxiliary():
    rng = np.random.default_rng(11)
    for i in range(20):
        pmf = sample_factorized("weak", Dmc.random(rng), cards={"U": 1}, seed=i)
        r = weak_rhs(EntropyCache(pmf.names, pmf.probs[None]))[0]
        i12 = mi_discrete(pmf, ["X1"], ["Y1"], ["X2"])
        i22 = mi_discrete(pmf, ["X2"], ["Y2"])
        assert np.allclose(r, [i12, i22, i12 + i22], atol=1e-12)


def test_dmc_json(tmp_path):
    dmc = Dmc.random(np.random.default_rng(12))
    path = tmp_path / "d.json"
    path.write_text(json.dumps(dmc.to_json_dict()))
    assert np.allclose(Dmc.from_json(path).transition, dmc.transition, atol=1e-15)
    cfg = dmc.to_json_dict()
    cfg["p"] = (np.array(cfg["p"]) * 0.9).tolist()
    with pytest.raises(ValueError, match="sum to 1"):
        Dmc.from_json_dict(cfg)
    with pytest.raises(ValueError, match="missing key"):
        Dmc.from_json_dict({"x1": 2})


def test_rhs_batch_matches_single():
    rng = np.random.default_rng(13)
    dmc = Dmc.random(rng)
    pmfs = [sample_factorized("thm1", dmc, seed=i) for i in range(8)]
    batch = EntropyCache(pmfs[0].names, np.stack([p.probs for p in pmfs]))
    for k, pmf in enumerate(pmfs):
        assert np.allclose(thm1_rhs(batch)[k], thm1_region(pmf).rhs, atol=1e-13)
        assert np.allclose(thm2_rhs(batch)[k], thm2_region(pmf).rhs, atol=1e-13)
