"""Invariant battery for the discrete-channel engine.

Hard checks must hold exactly (up to round-off); soft checks are probes
whose violations are reported but do not fail the run.
"""

from __future__ import annotations

import numpy as np

from .core import region_contains
from .dmc import (
    PATTERNS,
    Dmc,
    EntropyCache,
    JointPmf,
    Lemma1Setup,
    SearchSettings,
    check_factorization,
    lemma1_terms,
    sample_factorized,
    thm1_inner,
    thm1_region,
    thm2_region,
    thm3_outer,
    weak_outer,
)

CHAIN_TOL = 1e-10


def _raw_mi(cache: EntropyCache, a, b, c=()):
    a, b, c = tuple(a), tuple(b), tuple(c)
    return cache.h(a + c) + cache.h(b + c) - cache.h(a + b + c) - cache.h(c)


def chain_rule_gap(pmf: JointPmf, rng: np.random.Generator, trials: int = 10) -> tuple[float, float]:
    """(largest chain-rule mismatch, most negative raw MI) over random disjoint role triples."""
    cache = EntropyCache(pmf.names, pmf.probs[None])
    names = list(pmf.names)
    worst, lowest = 0.0, 0.0
    for _ in range(trials):
        perm = rng.permutation(len(names))
        k = rng.integers(1, 4, size=3)
        a = [names[i] for i in perm[:k[0]]]
        b = [names[i] for i in perm[k[0]:k[0] + k[1]]]
        c = [names[i] for i in perm[k[0] + k[1]:k[0] + k[1] + k[2]]]
        if not b or not c:
            continue
        lhs = _raw_mi(cache, a, b + c)
        rhs = _raw_mi(cache, a, c) + _raw_mi(cache, a, b, c)
        worst = max(worst, float(abs(lhs - rhs)[0]))
        lowest = min(lowest, float(min(lhs[0], _raw_mi(cache, a, b, c)[0])))
    return worst, lowest


def random_lemma1_setup(rng: np.random.Generator, rs: float = 0.0, ns=2, nu=2, nx=2, ny=2) -> Lemma1Setup:
    return Lemma1Setup(
        p_s=rng.dirichlet(np.ones(ns)),
        p_u_given_s=rng.dirichlet(np.ones(nu), size=ns),
        f=rng.integers(0, nx, size=(nu, ns)),
        channel=rng.dirichlet(np.ones(ny), size=(nx, ns)),
        rs=rs,
    )


def lemma1_gaps(setup: Lemma1Setup) -> dict:
    """Deviations of the binning rate from its endpoint regimes, and between its two equivalent forms."""
    t = lemma1_terms(setup)
    gp = t["i_u_y"] - t["i_u_s"]

    def rate(rs):
        return min(t["i_x_y_given_s"], max(t["i_us_y"] - rs, gp))

    def rate_alt(rs):
        return t["i_xs_y"] - max(t["i_s_y"], min(rs, t["i_s_uy"]))

    rs_grid = [0.0, setup.rs, t["i_s_uy"], t["h_s"]]
    return {
        "at_h_s": abs(rate(t["h_s"]) - gp) if t["i_s_uy"] <= t["h_s"] + 1e-12 else 0.0,
        "at_zero": abs(rate(0.0) - t["i_x_y_given_s"]),
        "forms": max(abs(rate(r) - rate_alt(r)) for r in rs_grid),
        "boundary": abs((t["i_us_y"] - t["i_s_uy"]) - gp),
    }


def dmc_battery(seed: int = 0, samples: int = 20, dmc: Dmc | None = None, tol: float = 1e-6,
                settings: SearchSettings | None = None) -> dict:
    rng = np.random.default_rng(seed)
    settings = settings or SearchSettings(samples=500, polish=4, polish_rounds=10)
    checks = {}

    def channel(i):
        return dmc if dmc is not None else Dmc.random(np.random.default_rng([seed, i]))

    # mutual information identities on factorized samples
    worst, lowest, fact = 0.0, 0.0, 0.0
    for i in range(samples):
        for pattern in PATTERNS:
            pmf = sample_factorized(pattern, channel(i), seed=seed * 1000 + i)
            try:
                check_factorization(pmf, pattern, channel(i), tol=1e-12)
            except ValueError:
                fact += 1
            w, low = chain_rule_gap(pmf, rng)
            worst, lowest = max(worst, w), min(lowest, low)
    checks["chain_rule"] = _res(worst <= CHAIN_TOL, True, f"max gap {worst:.3g}")
    checks["nonnegativity"] = _res(lowest >= -CHAIN_TOL, True, f"min raw MI {lowest:.3g}")
    checks["factorization"] = _res(fact == 0, True, f"{int(fact)} samples off pattern")

    # binning against a codebook
    gaps = {"at_h_s": 0.0, "at_zero": 0.0, "forms": 0.0, "boundary": 0.0}
    for _ in range(max(samples, 10)):
        g = lemma1_gaps(random_lemma1_setup(rng, rs=float(rng.uniform(0, 1))))
        gaps = {k: max(gaps[k], g[k]) for k in gaps}
    checks["lemma1_regimes"] = _res(max(gaps["at_h_s"], gaps["at_zero"]) <= 1e-12, True,
                                    f"Rs=H(S) gap {gaps['at_h_s']:.3g}, Rs=0 gap {gaps['at_zero']:.3g}")
    checks["lemma1_forms"] = _res(gaps["forms"] <= 1e-12, True, f"max gap {gaps['forms']:.3g}")
    checks["lemma1_boundary"] = _res(gaps["boundary"] <= 1e-9, True, f"max gap {gaps['boundary']:.3g}")

    # sequential inside joint decoding, per distribution (probe). With X2 a
    # non-injective map of (X2a, X2b) the sequential binning penalty
    # I(U1a;X2|U1c) can be smaller than I(U1a;X2a,X2b|U1c), so the joint
    # system may be infeasible while the sequential one is not.
    viol, emptied, worst_v = 0, 0, 0.0
    for i in range(samples):
        pmf = sample_factorized("thm1", channel(i), seed=seed * 7919 + i)
        j1, j2 = thm1_region(pmf).region(), thm2_region(pmf).region()
        if j2.is_empty:
            continue
        if j1.is_empty:
            emptied += 1
            continue
        cmp = region_contains(j1, j2, tol)
        if not cmp.subset_holds:
            viol += 1
            worst_v = max(worst_v, cmp.max_violation)
    checks["sequential_in_joint"] = _res(viol + emptied == 0, False,
                                         f"{viol}/{samples} distributions exceed the joint region "
                                         f"(worst {worst_v:.3g}), {emptied} with an empty joint region")

    # outer bounds contain the joint-decoding region
    n_ch = 1 if dmc is not None else min(samples, 5)
    bad3, badw = 0.0, 0.0
    for i in range(n_ch):
        ch = channel(i)
        inner = thm1_inner(ch, settings=settings, seed=seed + i)
        bad3 = max(bad3, region_contains(thm3_outer(ch, settings=settings, seed=seed + i), inner.region, tol).max_violation)
        badw = max(badw, region_contains(weak_outer(ch, settings=settings, seed=seed + i,
                                                    inner_support=inner.support), inner.region, tol).max_violation)
    checks["thm3_contains_inner"] = _res(bad3 <= tol, True, f"{n_ch} channels, max violation {bad3:.3g}")
    checks["weak_contains_inner"] = _res(badw <= tol, True, f"{n_ch} channels, max violation {badw:.3g}")

    hard_failures = sum(1 for c in checks.values() if c["hard"] and not c["passed"])
    return {"seed": seed, "samples": samples, "checks": checks, "hard_failures": hard_failures}


def _res(passed: bool, hard: bool, detail: str) -> dict:
    return {"passed": bool(passed), "hard": hard, "detail": detail}
