"""Exact rate-region evaluation on small discrete memoryless channels.

Distributions are dense numpy tables indexed by named roles. Most routines
work on a batch: an array of shape ``(n, *cardinalities)`` holding n joint
pmfs over the same roles, so that thousands of candidate distributions can
be scored at once during a search.

Factorization patterns
----------------------
``thm1``  (Q, X2a, X2b, U1c, U1a, X1, X2, Y1, Y2): p(q) p(x2a,x2b|q) 1[x2 = g(q,x2a,x2b)]
          p(u1c,u1a,x1|q,x2a,x2b) W(y1,y2|x1,x2). Encoder 2 only knows its own
          message, so X2 is a function of its codewords.
``thm3``  (V, U1, U2, X1, X2, Y1, Y2): p(u1) p(u2) p(v|u1,u2) 1[x2 = f(u2)]
          1[x1 = g(u1,u2)] W(y1,y2|x1,x2)
``weak``  (U, X1, X2, Y1, Y2): p(u,x1,x2) W(y1,y2|x1,x2)

Zero-probability cells contribute nothing to entropies (0 log 0 = 0).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import RateRegion, pareto_frontier, polygon_corners
from .fme import THM1_ROWS, THM2_ROWS, project_vertices, split_system

ROLES = ("Q", "X2a", "X2b", "U1c", "U1a", "X1", "X2", "Y1", "Y2",
         "S", "U", "X", "Y", "V", "U1", "U2")
NEG_TOL = 1e-9
SUM_TOL = 1e-12
MAX_STATES = 10_000_000

PATTERNS = {
    "thm1": ("Q", "X2a", "X2b", "U1c", "U1a", "X1", "X2", "Y1", "Y2"),
    "thm3": ("V", "U1", "U2", "X1", "X2", "Y1", "Y2"),
    "weak": ("U", "X1", "X2", "Y1", "Y2"),
}
DEFAULT_CARDS = {
    "thm1": {"Q": 1, "X2a": 2, "X2b": 2, "U1c": 2, "U1a": 2},
    "thm3": {"V": 2, "U1": 2, "U2": 2},
    "weak": {"U": 2},
}


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class VarSpec:
    name: str
    cardinality: int

    def __post_init__(self):
        if self.name not in ROLES:
            raise ValueError(f"unknown role {self.name!r}")
        if int(self.cardinality) < 1:
            raise ValueError("cardinality must be at least 1")


@dataclass(frozen=True)
class JointPmf:
    vars: tuple[VarSpec, ...]
    probs: np.ndarray

    def __post_init__(self):
        vars = tuple(self.vars)
        names = [v.name for v in vars]
        if len(set(names)) != len(names):
            raise ValueError("role names must be unique")
        p = np.array(self.probs, dtype=float)
        if p.shape != tuple(v.cardinality for v in vars):
            raise ValueError(f"table shape {p.shape} does not match cardinalities")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {p.sum():.15g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "vars", vars)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_table(cls, names: Sequence[str], probs) -> JointPmf:
        probs = np.asarray(probs, dtype=float)
        return cls(tuple(VarSpec(n, c) for n, c in zip(names, probs.shape)), probs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    def marginal(self, names: Sequence[str]) -> np.ndarray:
        """Marginal table with axes in the order of ``names``."""
        axes = _axes(self.names, names)
        drop = tuple(i for i in range(len(self.vars)) if i not in axes)
        m = self.probs.sum(axis=drop) if drop else self.probs
        kept = sorted(axes)
        return np.moveaxis(m, [kept.index(a) for a in axes], range(len(axes)))


@dataclass(frozen=True)
class Dmc:
    """Transition table ``transition[x1, x2, y1, y2] = p(y1, y2 | x1, x2)``."""

    transition: np.ndarray

    def __post_init__(self):
        w = np.array(self.transition, dtype=float)
        if w.ndim != 4:
            raise ValueError("transition must have axes (x1, x2, y1, y2)")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("transition probabilities must be finite and nonnegative")
        rows = w.sum(axis=(2, 3))
        if np.max(np.abs(rows - 1.0)) > SUM_TOL:
            raise ValueError("each transition row must sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "transition", w)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.transition.shape

    @classmethod
    def from_json_dict(cls, cfg: dict, tol: float = 1e-9) -> Dmc:
        try:
            shape = tuple(int(cfg[k]) for k in ("x1", "x2", "y1", "y2"))
            flat = np.asarray(cfg["p"], dtype=float)
        except KeyError as exc:
            raise ValueError(f"DMC config missing key {exc}") from None
        if flat.size != math.prod(shape):
            raise ValueError(f"expected {math.prod(shape)} transition entries, got {flat.size}")
        w = flat.reshape(shape)
        off = np.abs(w.sum(axis=(2, 3)) - 1.0)
        if np.any(w < 0) or off.max() > tol:
            raise ValueError(f"transition rows must be nonnegative and sum to 1 (worst row off by {off.max():.3g})")
        return cls(w / w.sum(axis=(2, 3), keepdims=True))

    @classmethod
    def from_json(cls, path) -> Dmc:
        return cls.from_json_dict(json.loads(Path(path).read_text()))

    def to_json_dict(self) -> dict:
        x1, x2, y1, y2 = self.shape
        return {"x1": x1, "x2": x2, "y1": y1, "y2": y2, "p": self.transition.ravel().tolist()}

    @classmethod
    def random(cls, rng: np.random.Generator, shape=(2, 2, 2, 2)) -> Dmc:
        w = rng.standard_exponential(shape)
        return cls(w / w.sum(axis=(2, 3), keepdims=True))


# ---------------------------------------------------------------------------
# entropies and mutual information


def _axes(names: Sequence[str], sub: Sequence[str]) -> list[int]:
    pos = {n: i for i, n in enumerate(names)}
    try:
        return [pos[n] for n in sub]
    except KeyError as exc:
        raise ValueError(f"unknown label {exc}") from None


class EntropyCache:
    """Memoized joint entropies (bits) of a batch of pmfs over ``names``."""

    def __init__(self, names: Sequence[str], probs: np.ndarray):
        self.names = tuple(names)
        self.probs = probs
        self._memo: dict[frozenset, np.ndarray] = {}
        # marginal tables keyed by the kept role axes, in increasing axis order
        self._marg: dict[frozenset, np.ndarray] = {frozenset(range(len(self.names))): probs}

    def _marginal(self, key: frozenset) -> np.ndarray:
        if key not in self._marg:
            src = min((k for k in self._marg if k >= key), key=lambda k: self._marg[k].size)
            kept = sorted(src)
            drop = tuple(1 + kept.index(i) for i in kept if i not in key)
            self._marg[key] = self._marg[src].sum(axis=drop)
        return self._marg[key]

    def h(self, sub) -> np.ndarray:
        key = frozenset(_axes(self.names, sub))
        if key not in self._memo:
            m = self._marginal(key)
            m = m.reshape(m.shape[0], -1)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(m > 0, m * np.log2(m), 0.0)
            self._memo[key] = -t.sum(axis=1)
        return self._memo[key]

    def mi(self, a, b, c=()) -> np.ndarray:
        """I(A; B | C) for every pmf in the batch, clamped at zero."""
        a, b, c = tuple(a), tuple(b), tuple(c)
        if not a or not b:
            raise ValueError("mutual information needs two nonempty sets")
        if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
            raise ValueError("variable sets must be disjoint")
        val = self.h(a + c) + self.h(b + c) - self.h(a + b + c) - self.h(c)
        if np.any(val < -NEG_TOL):
            raise ArithmeticError(f"negative mutual information {val.min():.3g}")
        return np.maximum(val, 0.0)


def mi_discrete(pmf: JointPmf, set_a, set_b, set_c=()) -> float:
    """I(A; B | C) in bits by summation over the table."""
    return float(EntropyCache(pmf.names, pmf.probs[None]).mi(set_a, set_b, set_c)[0])


def entropy(pmf: JointPmf, names) -> float:
    return float(EntropyCache(pmf.names, pmf.probs[None]).h(tuple(names))[0])


# ---------------------------------------------------------------------------
# factorization checks


def ci_gap(pmf: JointPmf, a, b, c=()) -> float:
    """max |p(a,b,c) p(c) - p(a,c) p(b,c)|; zero iff A and B are independent given C."""
    a, b, c = list(a), list(b), list(c)
    m = pmf.marginal(a + b + c)
    na = math.prod(m.shape[:len(a)])
    nb = math.prod(m.shape[len(a):len(a) + len(b)])
    m = m.reshape(na, nb, -1)
    pac, pbc, pc = m.sum(axis=1), m.sum(axis=0), m.sum(axis=(0, 1))
    return float(np.max(np.abs(m * pc[None, None, :] - pac[:, None, :] * pbc[None, :, :])))


def functional_gap(pmf: JointPmf, target: str, given) -> float:
    """Probability mass not on the most likely value of ``target`` given ``given``."""
    m = pmf.marginal(list(given) + [target])
    m = m.reshape(-1, m.shape[-1])
    return float(m.sum() - m.max(axis=1).sum())


def channel_gap(pmf: JointPmf, dmc: Dmc | None = None) -> float:
    """Deviation from p(rest, x1, x2, y1, y2) = p(rest, x1, x2) W(y1, y2 | x1, x2)."""
    rest = [n for n in pmf.names if n not in ("X1", "X2", "Y1", "Y2")]
    if dmc is None:
        return ci_gap(pmf, ["Y1", "Y2"], rest, ["X1", "X2"]) if rest else 0.0
    full = pmf.marginal(rest + ["X1", "X2", "Y1", "Y2"])
    inputs = full.sum(axis=(-2, -1))
    return float(np.max(np.abs(full - inputs[..., None, None] * dmc.transition)))


def check_factorization(pmf: JointPmf, pattern: str, dmc: Dmc | None = None, tol: float = 1e-10) -> None:
    """Raise ValueError if ``pmf`` does not factor as ``pattern`` requires."""
    names = set(pmf.names)
    need = set(PATTERNS[pattern])
    if names != need:
        raise ValueError(f"{pattern} needs roles {sorted(need)}, got {sorted(names)}")
    gaps = {"channel": channel_gap(pmf, dmc)}
    if pattern == "thm3":
        gaps["U1 independent of U2"] = ci_gap(pmf, ["U1"], ["U2"])
        gaps["X2 function of U2"] = functional_gap(pmf, "X2", ["U2"])
        gaps["X1 function of (U1, U2)"] = functional_gap(pmf, "X1", ["U1", "U2"])
    for what, gap in gaps.items():
        if gap > tol:
            raise ValueError(f"factorization violated ({what}): gap {gap:.3g}")


# ---------------------------------------------------------------------------
# sampling factorized distributions

_NORM_AXES = {"q": 1, "ab": 2, "cux": 3, "u1": 1, "u2": 1, "v": 1, "ux": 3}


def _factor_shapes(pattern: str, cards: dict, dmc: Dmc) -> tuple[dict, dict]:
    """Shapes of the continuous factors and of the deterministic maps (with their ranges)."""
    x1, x2 = dmc.shape[:2]
    if pattern == "thm1":
        q, a, b, c, u = (cards[k] for k in ("Q", "X2a", "X2b", "U1c", "U1a"))
        return ({"q": (q,), "ab": (q, a, b), "cux": (q, a, b, c, u, x1)},
                {"g": ((q, a, b), x2)})
    if pattern == "thm3":
        v, u1, u2 = (cards[k] for k in ("V", "U1", "U2"))
        return ({"u1": (u1,), "u2": (u2,), "v": (u1, u2, v)},
                {"f": ((u2,), x2), "g": ((u1, u2), x1)})
    if pattern == "weak":
        return {"ux": (cards["U"], x1, x2)}, {}
    raise ValueError(f"unknown pattern {pattern!r}")


def _softmax(logits: np.ndarray, k: int) -> np.ndarray:
    """Normalize over the trailing ``k`` axes."""
    axes = tuple(range(logits.ndim - k, logits.ndim))
    z = np.exp(logits - np.max(logits, axis=axes, keepdims=True))
    return z / z.sum(axis=axes, keepdims=True)


def _assemble(pattern: str, dmc: Dmc, fac: dict, maps: dict) -> np.ndarray:
    """Batch of joint tables from normalized factors and integer maps."""
    w = dmc.transition
    x1n, x2n = w.shape[:2]
    if pattern == "thm1":
        g = np.eye(x2n)[maps["g"]]
        return np.einsum("nq,nqab,nqabcux,nqabz,xzyw->nqabcuxzyw",
                         fac["q"], fac["ab"], fac["cux"], g, w, optimize=True)
    if pattern == "thm3":
        f = np.eye(x2n)[maps["f"]]
        g = np.eye(x1n)[maps["g"]]
        return np.einsum("na,nb,nabv,nbz,nabx,xzyw->nvabxzyw",
                         fac["u1"], fac["u2"], fac["v"], f, g, w, optimize=True)
    return np.einsum("nuxz,xzyw->nuxzyw", fac["ux"], w, optimize=True)


def _cards(pattern: str, dmc: Dmc, cards: dict | None) -> dict:
    out = dict(DEFAULT_CARDS[pattern])
    out.update(cards or {})
    out.update(zip(("X1", "X2", "Y1", "Y2"), dmc.shape))
    states = math.prod(out[n] for n in PATTERNS[pattern])
    if states > MAX_STATES:
        raise ValueError(f"state space of {states} entries exceeds {MAX_STATES}")
    return out


def _sample_params(pattern: str, dmc: Dmc, cards: dict, rng: np.random.Generator, n: int):
    cont, disc = _factor_shapes(pattern, cards, dmc)
    logits = {k: np.log(rng.standard_exponential((n,) + s) + 1e-300) for k, s in cont.items()}
    maps = {k: rng.integers(0, hi, size=(n,) + s) for k, (s, hi) in disc.items()}
    return logits, maps


def _from_logits(pattern: str, dmc: Dmc, logits: dict, maps: dict) -> np.ndarray:
    fac = {k: _softmax(v, _NORM_AXES[k]) for k, v in logits.items()}
    probs = _assemble(pattern, dmc, fac, maps)
    return probs / probs.reshape(probs.shape[0], -1).sum(axis=1).reshape((-1,) + (1,) * (probs.ndim - 1))


def factorized_pmf(pattern: str, dmc: Dmc, factors: dict, maps: dict | None = None) -> JointPmf:
    """Joint pmf from explicit (normalized) factors, e.g. ``{"ux": table}`` for ``weak``."""
    fac = {k: np.asarray(v, dtype=float)[None] for k, v in factors.items()}
    mp = {k: np.asarray(v, dtype=int)[None] for k, v in (maps or {}).items()}
    return JointPmf.from_table(PATTERNS[pattern], _assemble(pattern, dmc, fac, mp)[0])


def sample_factorized(pattern: str, dmc: Dmc, cards: dict | None = None, seed: int = 0) -> JointPmf:
    """One random pmf honoring ``pattern``; Dirichlet(1) factors, uniform random maps."""
    cards = _cards(pattern, dmc, cards)
    logits, maps = _sample_params(pattern, dmc, cards, np.random.default_rng(seed), 1)
    return JointPmf.from_table(PATTERNS[pattern], _from_logits(pattern, dmc, logits, maps)[0])


def sample_batch(pattern: str, dmc: Dmc, n: int, cards: dict | None = None, seed: int = 0) -> np.ndarray:
    cards = _cards(pattern, dmc, cards)
    logits, maps = _sample_params(pattern, dmc, cards, np.random.default_rng(seed), n)
    return _from_logits(pattern, dmc, logits, maps)


# ---------------------------------------------------------------------------
# right-hand sides of the region definitions


def thm1_rhs(cache: EntropyCache) -> np.ndarray:
    """(n, 6) bounds on R1a, R1, R2, R2 + Rc, R2b, R2b + Rc (joint decoding)."""
    m = cache.mi
    x2ab = ("X2a", "X2b")
    return np.column_stack([
        m(["U1a"], ["Y1"], ["U1c", "Q"]) - m(["U1a"], x2ab, ["U1c", "Q"]),
        m(["U1c", "U1a"], ["Y1"], ["Q"]) - m(["U1c", "U1a"], x2ab, ["Q"]),
        m(["X2"], ["Y2", "U1c"], ["Q"]),
        m(["X2", "U1c"], ["Y2"], ["Q"]),
        m(["X2b"], ["Y2", "U1c"], ["X2a", "Q"]),
        m(["X2b", "U1c"], ["Y2"], ["X2a", "Q"]),
    ])


def thm2_rhs(cache: EntropyCache) -> np.ndarray:
    """(n, 4) bounds on R1a, Rc, R2a, R2b (sequential decoding)."""
    m = cache.mi
    return np.column_stack([
        m(["U1a"], ["Y1"], ["U1c", "Q"]) - m(["U1a"], ["X2"], ["U1c", "Q"]),
        np.minimum(m(["U1c"], ["Y1"], ["Q"]), m(["U1c"], ["Y2", "X2a"], ["Q"])) - m(["U1c"], ["X2"], ["Q"]),
        m(["X2a"], ["Y2"], ["Q"]),
        m(["X2b"], ["Y2", "U1c"], ["X2a", "Q"]),
    ])


def thm3_rhs(cache: EntropyCache) -> np.ndarray:
    """(n, 4): R1 cap, R2 cap, and the two sum caps of the general outer bound."""
    m = cache.mi
    r1 = m(["V", "U1"], ["Y1"])
    r2 = m(["V", "U2"], ["Y2"])
    return np.column_stack([
        r1,
        r2,
        r1 + m(["U2"], ["Y2"], ["U1", "V"]),
        m(["U1"], ["Y1"], ["U2", "V"]) + r2,
    ])


def weak_rhs(cache: EntropyCache) -> np.ndarray:
    """(n, 3): R1 cap, R2 cap and sum cap of the weak-interference outer bound."""
    m = cache.mi
    r2 = m(["U", "X2"], ["Y2"])
    return np.column_stack([
        m(["X1"], ["Y1"], ["X2"]),
        r2,
        m(["X1"], ["Y1"], ["X2", "U"]) + r2,
    ])


@dataclass(frozen=True)
class RateConstraints:
    """Numeric right-hand sides of a split-rate region for one distribution."""

    labels: tuple[str, ...]
    rhs: tuple[float, ...]
    rows: tuple[dict, ...]
    n_checked: int  # leading rows that must be nonnegative for the region to apply

    @property
    def excluded(self) -> bool:
        return any(v < -NEG_TOL for v in self.rhs[:self.n_checked])

    def system(self):
        return split_system(self.rows, np.array(self.rhs))

    def region(self) -> RateRegion:
        if self.excluded:
            return RateRegion.empty("excluded")
        verts = project_vertices(self.system())[0]
        if verts is None:
            return RateRegion.empty("infeasible")
        return pareto_frontier(np.maximum(verts, 0.0))


def _row_label(row: dict) -> str:
    return " + ".join(k for k in ("R2", "R2b", "R1", "R1a", "Rc", "R2a") if k in row)


def thm1_region(pmf: JointPmf, dmc: Dmc | None = None) -> RateConstraints:
    check_factorization(pmf, "thm1", dmc)
    rhs = thm1_rhs(EntropyCache(pmf.names, pmf.probs[None]))[0]
    return RateConstraints(tuple(_row_label(r) for r in THM1_ROWS), tuple(map(float, rhs)), THM1_ROWS, 6)


def thm2_region(pmf: JointPmf, dmc: Dmc | None = None) -> RateConstraints:
    check_factorization(pmf, "thm1", dmc)
    rhs = thm2_rhs(EntropyCache(pmf.names, pmf.probs[None]))[0]
    return RateConstraints(tuple(_row_label(r) for r in THM2_ROWS), tuple(map(float, rhs)), THM2_ROWS, 2)


# ---------------------------------------------------------------------------
# per-distribution corner points, batched


def _split_points(rows, rhs: np.ndarray, n_checked: int):
    verts, good = project_vertices(split_system(rows, rhs.T), table=True)
    ok = np.all(rhs[:, :n_checked] >= -NEG_TOL, axis=1)
    return np.transpose(verts, (1, 0, 2)), (good & ok[None, :]).T


def _polygon_points(r1, r2, s):
    r1, r2, s = (np.maximum(v, 0.0) for v in (r1, r2, s))
    (x1, y1), (x2, y2) = polygon_corners(r1, r2, s)
    pts = np.stack([np.column_stack([x1, y1]), np.column_stack([x2, y2])], axis=1)
    return pts, np.ones(pts.shape[:2], dtype=bool)


def region_points(kind: str, probs: np.ndarray):
    """Candidate corner points ``(n, P, 2)`` and validity mask ``(n, P)``."""
    if kind in ("thm1", "thm2"):
        cache = EntropyCache(PATTERNS["thm1"], probs)
        if kind == "thm1":
            return _split_points(THM1_ROWS, thm1_rhs(cache), 6)
        return _split_points(THM2_ROWS, thm2_rhs(cache), 2)
    if kind == "thm3":
        r = thm3_rhs(EntropyCache(PATTERNS["thm3"], probs))
        return _polygon_points(r[:, 0], r[:, 1], np.minimum(r[:, 2], r[:, 3]))
    if kind == "weak":
        r = weak_rhs(EntropyCache(PATTERNS["weak"], probs))
        return _polygon_points(r[:, 0], r[:, 1], r[:, 2])
    raise ValueError(f"unknown region kind {kind!r}")


# ---------------------------------------------------------------------------
# distribution search

_PATTERN_OF = {"thm1": "thm1", "thm2": "thm1", "thm3": "thm3", "weak": "weak"}


@dataclass(frozen=True)
class SearchSettings:
    samples: int = 10_000
    polish: int = 10
    polish_rounds: int = 25
    n_weights: int = 11
    batch: int = 4096

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.polish < 0 or self.polish_rounds < 0 or self.n_weights < 2:
            raise ValueError("invalid search settings")


@dataclass
class SearchResult:
    region: RateRegion
    support: list = field(default_factory=list)  # joint tables that produced frontier vertices
    names: tuple[str, ...] = ()


class _Pool:
    """Collects candidate points together with the table that produced them."""

    def __init__(self):
        self.points: list[np.ndarray] = []
        self.tables: list[np.ndarray] = []

    def add(self, pts: np.ndarray, valid: np.ndarray, probs: np.ndarray):
        n = pts.shape[0]
        base = len(self.tables)
        keep = valid & np.all(np.isfinite(pts), axis=-1)
        rows, cols = np.nonzero(keep)
        self.points.append(np.column_stack([pts[rows, cols], base + rows]))
        self.tables.extend(probs[i] for i in range(n))

    def result(self, names) -> SearchResult:
        pts = np.concatenate(self.points) if self.points else np.zeros((0, 3))
        xy = np.vstack([np.maximum(pts[:, :2], 0.0), [[0.0, 0.0]]])
        region = pareto_frontier(xy, provenance="search")
        used = []
        for v in region.frontier:
            hit = np.nonzero((xy[:-1, 0] == v.r1) & (xy[:-1, 1] == v.r2))[0]
            if hit.size:
                used.append(int(pts[hit[0], 2]))
        support = [self.tables[i] for i in dict.fromkeys(used)]
        return SearchResult(region, support, tuple(names))


def _scores(pts: np.ndarray, valid: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """(n, W) support values of each distribution's region along each weight."""
    val = weights[None, None, :] * pts[..., :1] + (1.0 - weights[None, None, :]) * pts[..., 1:]
    val = np.where(valid[..., None], val, 0.0)
    return np.max(val, axis=1)


def _polish(kind, dmc, targets, weights, rounds, pool, step0=1.0):
    """Coordinate ascent on the logits of several distributions at once.

    ``targets`` holds (logits, maps) pairs; target t climbs the support
    function along ``weights[t]``. Each round tries +-step on every logit
    coordinate; a target halves its step when no move improves it.
    """
    pattern = _PATTERN_OF[kind]
    keys = list(targets[0][0])
    shapes = [targets[0][0][k].shape for k in keys]
    sizes = [math.prod(shp) for shp in shapes]
    flat = np.array([np.concatenate([lg[k].ravel() for k in keys]) for lg, _ in targets])
    maps = {k: np.array([mp[k] for _, mp in targets]) for k in targets[0][1]}
    t_count, d = flat.shape
    w = np.asarray(weights, dtype=float)

    def score(th, owner):
        logits, i = {}, 0
        for k, size, shp in zip(keys, sizes, shapes):
            logits[k] = th[:, i:i + size].reshape((th.shape[0],) + shp)
            i += size
        probs = _from_logits(pattern, dmc, logits, {k: v[owner] for k, v in maps.items()})
        pts, valid = region_points(kind, probs)
        pool.add(pts, valid, probs)
        val = w[owner, None] * pts[..., 0] + (1.0 - w[owner, None]) * pts[..., 1]
        return np.max(np.where(valid, val, 0.0), axis=1)

    best = score(flat, np.arange(t_count))
    step = np.full(t_count, step0)
    eye = np.eye(d)
    for _ in range(rounds):
        moves = np.concatenate([eye, -eye])                       # (2d, d)
        cand = flat[:, None, :] + step[:, None, None] * moves[None]
        owner = np.repeat(np.arange(t_count), 2 * d)
        s = score(cand.reshape(-1, d), owner).reshape(t_count, 2 * d)
        j = np.argmax(s, axis=1)
        top = s[np.arange(t_count), j]
        up = top > best + 1e-13
        flat[up] = cand[np.arange(t_count), j][up]
        best[up] = top[up]
        step[~up] /= 2.0


def search_region(kind: str, dmc: Dmc, cards: dict | None = None, settings: SearchSettings = SearchSettings(),
                  seed: int = 0, extra: Sequence[np.ndarray] = ()) -> SearchResult:
    """Best-found region of ``kind`` over random factorized distributions.

    Random Dirichlet(1) draws are scored along ``n_weights`` directions; the
    best draws are then polished by coordinate ascent on their logits. Tables
    in ``extra`` (already-built joints over the pattern's roles) are scored
    too. The result is a lower approximation of the optimized region.
    """
    pattern = _PATTERN_OF[kind]
    cards = _cards(pattern, dmc, cards)
    rng = np.random.default_rng(seed)
    weights = np.linspace(0.0, 1.0, settings.n_weights)
    pool = _Pool()
    by_shape: dict[tuple, list] = {}
    for table in extra:
        by_shape.setdefault(np.shape(table), []).append(table)
    for group in by_shape.values():
        probs = np.stack(group)
        pts, valid = region_points(kind, probs)
        pool.add(pts, valid, probs)

    best_score = np.full(weights.size, -np.inf)
    best_params: list = [None] * weights.size
    left = settings.samples
    while left > 0:
        n = min(left, settings.batch)
        left -= n
        logits, maps = _sample_params(pattern, dmc, cards, rng, n)
        probs = _from_logits(pattern, dmc, logits, maps)
        pts, valid = region_points(kind, probs)
        pool.add(pts, valid, probs)
        sc = _scores(pts, valid, weights)
        for j in range(weights.size):
            i = int(np.argmax(sc[:, j]))
            if sc[i, j] > best_score[j]:
                best_score[j] = sc[i, j]
                best_params[j] = ({k: v[i] for k, v in logits.items()}, {k: v[i] for k, v in maps.items()})

    order = np.linspace(0, weights.size - 1, min(settings.polish, weights.size)).round().astype(int)
    picks = [j for j in dict.fromkeys(order.tolist()) if best_params[j] is not None]
    if picks and settings.polish_rounds > 0:
        _polish(kind, dmc, [best_params[j] for j in picks], weights[picks], settings.polish_rounds, pool)
    return pool.result(PATTERNS[pattern])


def thm1_inner(dmc: Dmc, cards: dict | None = None, settings: SearchSettings = SearchSettings(),
               seed: int = 0) -> SearchResult:
    return search_region("thm1", dmc, cards, settings, seed)


def thm2_inner(dmc: Dmc, cards: dict | None = None, settings: SearchSettings = SearchSettings(),
               seed: int = 0) -> SearchResult:
    return search_region("thm2", dmc, cards, settings, seed)


def _strategy_tables(dmc: Dmc, v_mode: str, rng: np.random.Generator, n: int) -> np.ndarray:
    """Outer-bound candidates with U2 = X2 and U1 ranging over all maps X2 -> X1."""
    x1n, x2n = dmc.shape[:2]
    strategies = np.array(list(itertools.product(range(x1n), repeat=x2n)))   # (S, x2n)
    s = strategies.shape[0]
    pu1 = rng.standard_exponential((n, s))
    pu1 /= pu1.sum(axis=1, keepdims=True)
    pu2 = rng.standard_exponential((n, x2n))
    pu2 /= pu2.sum(axis=1, keepdims=True)
    # fixed candidate: X1 uniform over constant strategies (independent of X2), X2 uniform
    const = np.all(strategies == strategies[:, :1], axis=1)
    pu1[0], pu2[0] = const / const.sum(), 1.0 / x2n
    if v_mode == "const":
        pv = np.ones((n, s, x2n, 1))
    elif v_mode == "U1":
        pv = np.broadcast_to(np.eye(s)[:, None, :], (n, s, x2n, s))
    elif v_mode == "U2":
        pv = np.broadcast_to(np.eye(x2n)[None, :, :], (n, s, x2n, x2n))
    else:
        pv = rng.standard_exponential((n, s, x2n, 2))
        pv /= pv.sum(axis=-1, keepdims=True)
    f = np.broadcast_to(np.arange(x2n), (n, x2n))
    g = np.broadcast_to(strategies[None], (n, s, x2n))
    fac = {"u1": pu1, "u2": pu2, "v": pv}
    return _assemble("thm3", dmc, fac, {"f": f, "g": g})


def thm3_outer(dmc: Dmc, cards: dict | None = None, settings: SearchSettings = SearchSettings(),
               seed: int = 0, structured: bool = True) -> RateRegion:
    """Best-found region of the general outer bound (a lower approximation of it).

    Besides random draws with the configured cardinalities, ``structured``
    adds draws with U2 = X2 and U1 a Shannon strategy (a map X2 -> X1), which
    realize every input distribution p(x1, x2); independent uniform inputs are always included.
    """
    extra = []
    if structured:
        rng = np.random.default_rng([seed, 1])
        n = max(1, settings.samples // 8)
        for mode in ("const", "U1", "U2", "random"):
            extra.extend(_strategy_tables(dmc, mode, rng, n))
    res = search_region("thm3", dmc, cards, settings, seed, extra=extra)
    return RateRegion(res.region.frontier, "thm3-outer")


def thm1_to_weak(table: np.ndarray) -> np.ndarray:
    """Map a joint-decoding pmf to a weak-bound pmf with U = (Q, X2a, X2b, U1c).

    With this choice every bound of the joint-decoding region is implied by
    the weak-interference outer bound of the mapped distribution.
    """
    m = table.sum(axis=PATTERNS["thm1"].index("U1a"))
    q, a, b, c = m.shape[:4]
    return m.reshape((q * a * b * c,) + m.shape[4:])


def weak_outer(dmc: Dmc, cards: dict | None = None, settings: SearchSettings = SearchSettings(),
               seed: int = 0, inner_support: Sequence[np.ndarray] = ()) -> RateRegion:
    """Best-found weak-interference outer region.

    ``inner_support`` takes thm1 joints (e.g. ``SearchResult.support`` of
    :func:`thm1_inner`); each is mapped by :func:`thm1_to_weak` and scored.
    """
    extra = [thm1_to_weak(t) for t in inner_support]
    res = search_region("weak", dmc, cards, settings, seed, extra=extra)
    return RateRegion(res.region.frontier, "weak-outer")


# ---------------------------------------------------------------------------
# binning against a codebook


@dataclass(frozen=True)
class Lemma1Setup:
    """Interference S of rate ``rs`` known at the encoder.

    p_s[s]; p_u_given_s[s, u]; f[u, s] -> x; channel[x, s, y] = p(y | x, s).
    """

    p_s: np.ndarray
    p_u_given_s: np.ndarray
    f: np.ndarray
    channel: np.ndarray
    rs: float

    def __post_init__(self):
        p_s = np.asarray(self.p_s, dtype=float)
        pu = np.asarray(self.p_u_given_s, dtype=float)
        f = np.asarray(self.f, dtype=int)
        ch = np.asarray(self.channel, dtype=float)
        ns, nu, nx = p_s.size, pu.shape[-1], ch.shape[0]
        if abs(p_s.sum() - 1.0) > 1e-9 or np.any(p_s < 0):
            raise ValueError("p_s is not a pmf")
        if pu.shape != (ns, nu) or np.any(pu < 0) or np.max(np.abs(pu.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("p_u_given_s rows must be pmfs")
        if f.shape != (nu, ns) or f.min() < 0 or f.max() >= nx:
            raise ValueError("f must map (u, s) to an input symbol")
        if ch.ndim != 3 or ch.shape[1] != ns or np.any(ch < 0) or np.max(np.abs(ch.sum(axis=2) - 1.0)) > 1e-9:
            raise ValueError("channel must be p(y | x, s) with rows summing to 1")
        if not (self.rs >= 0 and math.isfinite(self.rs)):
            raise ValueError("rs must be finite and nonnegative")
        for name, val in (("p_s", p_s), ("p_u_given_s", pu), ("f", f), ("channel", ch)):
            object.__setattr__(self, name, val)

    def joint(self) -> JointPmf:
        return JointPmf.from_table(("S", "U", "X", "Y"), _lemma1_tables(
            self.p_s, self.p_u_given_s[None], self.f[None], self.channel)[0])


def _lemma1_tables(p_s, pu, f, ch) -> np.ndarray:
    """Joint p(s, u, x, y) for a batch of (P_U|S, f)."""
    nx = ch.shape[0]
    onehot = np.eye(nx)[f]                       # (n, u, s, x)
    return np.einsum("s,nsu,nusx,xsy->nsuxy", p_s, pu, onehot, ch, optimize=True)


def _lemma1_terms(tables: np.ndarray) -> dict:
    c = EntropyCache(("S", "U", "X", "Y"), tables)
    return {
        "i_x_y_given_s": c.mi(["X"], ["Y"], ["S"]),
        "i_us_y": c.mi(["U", "S"], ["Y"]),
        "i_u_y": c.mi(["U"], ["Y"]),
        "i_u_s": c.mi(["U"], ["S"]),
        "i_xs_y": c.mi(["X", "S"], ["Y"]),
        "i_s_y": c.mi(["S"], ["Y"]),
        "i_s_uy": c.mi(["S"], ["U", "Y"]),
        "h_s": c.h(["S"]),
    }


def _rate_min_form(t: dict, rs):
    return np.minimum(t["i_x_y_given_s"], np.maximum(t["i_us_y"] - rs, t["i_u_y"] - t["i_u_s"]))


def _rate_max_form(t: dict, rs):
    return t["i_xs_y"] - np.maximum(t["i_s_y"], np.minimum(rs, t["i_s_uy"]))


def lemma1_terms(setup: Lemma1Setup) -> dict:
    tables = _lemma1_tables(setup.p_s, setup.p_u_given_s[None], setup.f[None], setup.channel)
    return {k: float(v[0]) for k, v in _lemma1_terms(tables).items()}


def lemma1_rate(setup: Lemma1Setup) -> float:
    """Rate for the given (P_U|S, f): min of the superposition and binning terms."""
    return float(_rate_min_form(lemma1_terms(setup), setup.rs))


def lemma1_rate_alt(setup: Lemma1Setup) -> float:
    """The same rate written as I(X,S;Y) - max{I(S;Y), min{Rs, I(U,Y;S)}}."""
    return float(_rate_max_form(lemma1_terms(setup), setup.rs))


def _simplex_grid(k: int, levels: int) -> np.ndarray:
    """All pmfs on k points with entries in multiples of 1/(levels - 1)."""
    m = levels - 1
    rows = [c for c in itertools.product(range(m + 1), repeat=k - 1) if sum(c) <= m]
    return np.array([list(c) + [m - sum(c)] for c in rows], dtype=float) / m


@dataclass
class Lemma1Grid:
    """Every gridded (P_U|S, f) for one (p_s, channel), with the binning-rate terms."""

    pu: np.ndarray
    f: np.ndarray
    terms: dict

    def rates(self, rs: float) -> np.ndarray:
        return _rate_min_form(self.terms, rs)

    def rates_alt(self, rs: float) -> np.ndarray:
        return _rate_max_form(self.terms, rs)


def lemma1_grid(p_s, channel, card_u: int = 2, levels: int = 17) -> Lemma1Grid:
    p_s = np.asarray(p_s, dtype=float)
    channel = np.asarray(channel, dtype=float)
    ns, nx = p_s.size, channel.shape[0]
    if max(ns, nx, card_u) > 3:
        raise ValueError("exhaustive search supports alphabets of size at most 3")
    rows = _simplex_grid(card_u, levels)
    pu = np.array([np.stack(c) for c in itertools.product(rows, repeat=ns)])     # (G, s, u)
    fs = np.array(list(itertools.product(range(nx), repeat=card_u * ns))).reshape(-1, card_u, ns)
    gi, fi = np.meshgrid(np.arange(len(pu)), np.arange(len(fs)), indexing="ij")
    pu_all, f_all = pu[gi.ravel()], fs[fi.ravel()]
    terms = _lemma1_terms(_lemma1_tables(p_s, pu_all, f_all, channel))
    return Lemma1Grid(pu_all, f_all, terms)


def lemma1_search(p_s, channel, rs: float, card_u: int = 2, levels: int = 17) -> tuple[float, Lemma1Setup]:
    """Maximize the binning rate over gridded P_U|S and every deterministic f."""
    grid = lemma1_grid(p_s, channel, card_u, levels)
    rates = grid.rates(rs)
    i = int(np.argmax(rates))
    return float(rates[i]), Lemma1Setup(p_s, grid.pu[i], grid.f[i], channel, rs)
