"""Achievable (inner) rate regions for the Gaussian channel.

Schemes
-------
``joint``          binning with joint decoding, evaluated for X2a and Q absent
``sequential``     the same codebooks with sequential decoding at receiver 1
``superposition``  cognitive encoder superimposes on X2 (degraded message sets)
``bc``             P2 = 0 baseline: broadcast channel from the cognitive encoder

A parametrization whose binning bounds are negative is excluded: it only
contributes the pair (0, 0). The Fourier-Motzkin projection of the split-rate
system is empty in exactly that case, so excluding matches the projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RatePair, RateRegion, capacity, pareto_frontier, polygon_corners, simplify
from .gaussian import (
    DpcParams,
    GaussianChannel,
    assemble_joint,
    batch_covariances,
    batch_mi_scalar,
    batch_mi_scalar_cond,
    costa_lambda,
    mi,
    mi_cond,
)

SCHEMES = ("joint", "sequential", "superposition", "bc")
FEAS_TOL = 1e-9
REFINE_ITERS = 400
WEIGHT_QUANTUM = 4096
SIMPLEX_XTOL = 1e-6
FRONTIER_TOL = 1e-9      # vertices closer than this to a chord are dropped
_CHUNK = 32768


@dataclass(frozen=True)
class JointBounds:
    """Right-hand sides of the joint-decoding region for one parametrization.

    ``r1`` bounds R1, ``r2_side``/``r2_sum`` are the two R2 bounds and
    ``sum_`` bounds R1 + R2. ``private`` is the bound on the private split
    rate R1a before elimination; a negative value makes the system empty.
    """

    r1: float
    r2_side: float
    r2_sum: float
    private: float

    @property
    def sum_(self) -> float:
        return self.r2_sum + self.private

    @property
    def feasible(self) -> bool:
        return self.r1 >= -FEAS_TOL and self.private >= -FEAS_TOL


@dataclass(frozen=True)
class SequentialBounds:
    private: float
    common: float
    r2: float

    @property
    def feasible(self) -> bool:
        return self.private >= -FEAS_TOL and self.common >= -FEAS_TOL


@dataclass(frozen=True)
class SuperpositionParams:
    """beta: share of the non-cooperative power on the common layer U1c;
    gamma: share of P1 spent on cooperation (coherent with X2)."""

    beta: float
    gamma: float

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0 and 0.0 <= self.gamma <= 1.0):
            raise ValueError("beta and gamma must lie in [0, 1]")

    def as_dpc(self) -> DpcParams:
        return DpcParams(alpha=1.0 - self.gamma, beta=self.beta, lambda1=0.0, lambda2=0.0)


@dataclass(frozen=True)
class SuperpositionBounds:
    private: float   # I(X1; Y1 | X2, U1c)
    r1: float        # I(X1; Y1 | X2)
    sum_rx1: float   # I(X1, X2; Y1)
    common: float    # I(U1c, X2; Y2)

    def eliminated(self) -> tuple[float, float, float, float]:
        """(R1 cap, R2 cap, sum cap via Rx2, sum cap via Rx1) after eliminating the splits."""
        return self.r1, self.common, self.private + self.common, self.sum_rx1


@dataclass(frozen=True)
class InnerBoundSpec:
    scheme: str
    channel: GaussianChannel
    grid: int = 25
    refine_rounds: int = 3
    lambda_scale: float = 3.0
    n_weights: int = 41

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.grid < 2:
            raise ValueError("grid must have at least 2 points per axis")
        if self.refine_rounds < 0 or self.n_weights < 2:
            raise ValueError("invalid refinement settings")


# ---------------------------------------------------------------------------
# single-parametrization evaluation (reference path through JointGaussian)


def joint_bounds(ch: GaussianChannel, p: DpcParams) -> JointBounds:
    jg = assemble_joint(ch, p)
    u = ["U1c", "U1a"]
    return JointBounds(
        r1=mi(jg, u, ["Y1"]) - mi(jg, u, ["X2"]),
        r2_side=mi(jg, ["X2"], ["Y2", "U1c"]),
        r2_sum=mi(jg, ["X2", "U1c"], ["Y2"]),
        private=mi_cond(jg, ["U1a"], ["Y1"], ["U1c"]) - mi_cond(jg, ["U1a"], ["X2"], ["U1c"]),
    )


def joint_corners(ch: GaussianChannel, p: DpcParams) -> list[RatePair]:
    """Both Pareto corners of the joint-decoding region for ``p``."""
    bd = joint_bounds(ch, p)
    if not bd.feasible:
        return [RatePair(0.0, 0.0)]
    a = max(0.0, bd.r1)
    b = max(0.0, min(bd.r2_side, bd.r2_sum))
    d = max(0.0, bd.sum_)
    (x1, y1), (x2, y2) = polygon_corners(a, b, d)
    return [RatePair(float(x1), float(y1)), RatePair(float(x2), float(y2))]


def eval_joint_g2(ch: GaussianChannel, p: DpcParams) -> RatePair:
    """Corner with R1 at its cap and R2 reduced to meet the sum bound."""
    return joint_corners(ch, p)[0]


def sequential_bounds(ch: GaussianChannel, p: DpcParams) -> SequentialBounds:
    jg = assemble_joint(ch, p)
    return SequentialBounds(
        private=mi_cond(jg, ["U1a"], ["Y1"], ["U1c"]) - mi_cond(jg, ["U1a"], ["X2"], ["U1c"]),
        common=min(mi(jg, ["U1c"], ["Y1"]), mi(jg, ["U1c"], ["Y2"])) - mi(jg, ["U1c"], ["X2"]),
        r2=mi(jg, ["X2"], ["Y2", "U1c"]),
    )


def eval_sequential_gseq(ch: GaussianChannel, p: DpcParams) -> RatePair:
    bd = sequential_bounds(ch, p)
    if not bd.feasible:
        return RatePair(0.0, 0.0)
    return RatePair(max(0.0, bd.private) + max(0.0, bd.common), max(0.0, bd.r2))


def superposition_bounds(ch: GaussianChannel, sp: SuperpositionParams) -> SuperpositionBounds:
    if ch.p2 == 0:
        raise ValueError("superposition scheme needs P2 > 0; use the bc scheme")
    jg = assemble_joint(ch, sp.as_dpc())
    # With lambda1 = 0 the common layer U1c is X1c itself.
    return SuperpositionBounds(
        private=mi_cond(jg, ["X1"], ["Y1"], ["X2", "X1c"]),
        r1=mi_cond(jg, ["X1"], ["Y1"], ["X2"]),
        sum_rx1=mi(jg, ["X1", "X2"], ["Y1"]),
        common=mi(jg, ["X1c", "X2"], ["Y2"]),
    )


def superposition_corners(ch: GaussianChannel, sp: SuperpositionParams) -> list[RatePair]:
    r1, r2, s_a, s_b = superposition_bounds(ch, sp).eliminated()
    (x1, y1), (x2, y2) = polygon_corners(r1, r2, min(s_a, s_b))
    return [RatePair(float(x1), float(y1)), RatePair(float(x2), float(y2))]


def eval_superposition(ch: GaussianChannel, sp: SuperpositionParams) -> RatePair:
    return superposition_corners(ch, sp)[0]


def bc_pair(ch: GaussianChannel, gamma: float) -> RatePair:
    """Gaussian broadcast boundary point; ``gamma`` is P1's share for user 2."""
    return RatePair(*map(float, _bc_batch(ch, np.array([gamma]))[0]))


def r2_max(ch: GaussianChannel) -> float:
    """R2 with full cooperation: coherent combining of X1 and X2 at receiver 2."""
    if ch.p2 == 0:
        return capacity(ch.b**2 * ch.p1)
    return capacity((1.0 + ch.b * math.sqrt(ch.p1 / ch.p2)) ** 2 * ch.p2)


# ---------------------------------------------------------------------------
# batched evaluation


def _chunks(n: int):
    for lo in range(0, n, _CHUNK):
        yield slice(lo, min(n, lo + _CHUNK))


def joint_bounds_batch(ch: GaussianChannel, alpha, beta, lambda1, lambda2) -> dict[str, np.ndarray]:
    """Vectorized joint-decoding right-hand sides via conditional-variance ratios."""
    alpha, beta, lambda1, lambda2 = (np.ravel(v) for v in np.broadcast_arrays(alpha, beta, lambda1, lambda2))
    out = {k: np.empty(alpha.size) for k in ("r1", "r2_side", "r2_sum", "private")}
    for sl in _chunks(alpha.size):
        cov = batch_covariances(ch, alpha[sl], beta[sl], lambda1[sl], lambda2[sl])
        u = ("U1c", "U1a")
        out["r1"][sl] = batch_mi_scalar(cov, "Y1", u) - batch_mi_scalar(cov, "X2", u)
        out["r2_side"][sl] = batch_mi_scalar(cov, "X2", ("Y2", "U1c"))
        out["r2_sum"][sl] = batch_mi_scalar(cov, "Y2", ("X2", "U1c"))
        out["private"][sl] = (batch_mi_scalar_cond(cov, "Y1", ("U1a",), ("U1c",))
                              - batch_mi_scalar_cond(cov, "X2", ("U1a",), ("U1c",)))
    return out


def sequential_bounds_batch(ch: GaussianChannel, alpha, beta, lambda1, lambda2) -> dict[str, np.ndarray]:
    alpha, beta, lambda1, lambda2 = (np.ravel(v) for v in np.broadcast_arrays(alpha, beta, lambda1, lambda2))
    out = {k: np.empty(alpha.size) for k in ("private", "common", "r2")}
    for sl in _chunks(alpha.size):
        cov = batch_covariances(ch, alpha[sl], beta[sl], lambda1[sl], lambda2[sl])
        out["private"][sl] = (batch_mi_scalar_cond(cov, "Y1", ("U1a",), ("U1c",))
                              - batch_mi_scalar_cond(cov, "X2", ("U1a",), ("U1c",)))
        out["common"][sl] = (np.minimum(batch_mi_scalar(cov, "Y1", ("U1c",)),
                                        batch_mi_scalar(cov, "Y2", ("U1c",)))
                             - batch_mi_scalar(cov, "X2", ("U1c",)))
        out["r2"][sl] = batch_mi_scalar(cov, "X2", ("Y2", "U1c"))
    return out


def _joint_batch(ch: GaussianChannel, params: np.ndarray) -> np.ndarray:
    bd = joint_bounds_batch(ch, *params.T)
    feas = (bd["r1"] >= -FEAS_TOL) & (bd["private"] >= -FEAS_TOL)
    with np.errstate(invalid="ignore"):
        a = np.where(feas, np.maximum(bd["r1"], 0.0), 0.0)
        b = np.where(feas, np.maximum(np.minimum(bd["r2_side"], bd["r2_sum"]), 0.0), 0.0)
        d = np.where(feas, np.maximum(bd["r2_sum"] + bd["private"], 0.0), 0.0)
    (x1, y1), (x2, y2) = polygon_corners(a, b, d)
    return np.stack([np.column_stack([x1, y1]), np.column_stack([x2, y2])], axis=1)


def _sequential_batch(ch: GaussianChannel, params: np.ndarray) -> np.ndarray:
    bd = sequential_bounds_batch(ch, *params.T)
    feas = (bd["private"] >= -FEAS_TOL) & (bd["common"] >= -FEAS_TOL)
    with np.errstate(invalid="ignore"):
        r1 = np.where(feas, np.maximum(bd["private"], 0.0) + np.maximum(bd["common"], 0.0), 0.0)
        r2 = np.where(feas, np.maximum(bd["r2"], 0.0), 0.0)
    return np.column_stack([r1, r2])[:, None, :]


def superposition_bounds_batch(ch: GaussianChannel, beta, gamma) -> dict[str, np.ndarray]:
    """Closed-form superposition bounds (independent of the covariance path)."""
    beta, gamma = (np.ravel(np.asarray(v, dtype=float)) for v in np.broadcast_arrays(beta, gamma))
    own = (1.0 - gamma) * ch.p1
    coh1 = (np.sqrt(gamma * ch.p1) + ch.a * math.sqrt(ch.p2)) ** 2
    coh2 = (ch.b * np.sqrt(gamma * ch.p1) + math.sqrt(ch.p2)) ** 2
    return {
        "private": capacity((1.0 - beta) * own),
        "r1": capacity(own),
        "sum_rx1": capacity(own + coh1),
        "common": 0.5 * np.log2((ch.b**2 * own + coh2 + 1.0) / (ch.b**2 * (1.0 - beta) * own + 1.0)),
    }


def _superposition_batch(ch: GaussianChannel, params: np.ndarray) -> np.ndarray:
    bd = superposition_bounds_batch(ch, params[:, 0], params[:, 1])
    d = np.minimum(bd["private"] + bd["common"], bd["sum_rx1"])
    (x1, y1), (x2, y2) = polygon_corners(bd["r1"], bd["common"], d)
    return np.stack([np.column_stack([x1, y1]), np.column_stack([x2, y2])], axis=1)


def _bc_batch(ch: GaussianChannel, gamma: np.ndarray) -> np.ndarray:
    gamma = np.ravel(gamma)
    g2 = ch.b**2
    p1 = ch.p1
    if g2 >= 1.0:
        # receiver 2 is the stronger one and decodes user 1's layer first
        r1 = capacity((1.0 - gamma) * p1 / (1.0 + gamma * p1))
        r2 = capacity(gamma * g2 * p1)
    else:
        r1 = capacity((1.0 - gamma) * p1)
        r2 = capacity(gamma * g2 * p1 / (1.0 + (1.0 - gamma) * g2 * p1))
    return np.column_stack([r1, r2])


# ---------------------------------------------------------------------------
# frontier tracing


@dataclass
class _Box:
    lo: np.ndarray
    hi: np.ndarray
    axes: list[np.ndarray] = field(default_factory=list)


def _param_box(spec: InnerBoundSpec) -> _Box:
    ch, n = spec.channel, spec.grid
    if spec.scheme in ("joint", "sequential"):
        lam_hi = spec.lambda_scale * costa_lambda(ch)
        lo = np.zeros(4)
        hi = np.array([1.0, 1.0, lam_hi, lam_hi])
        if ch.p2 == 0:
            lo[0] = 1.0  # no cooperation without X2
    elif spec.scheme == "superposition":
        lo, hi = np.zeros(2), np.ones(2)
    else:
        lo, hi = np.zeros(1), np.ones(1)
    axes = [np.linspace(l, h, n) for l, h in zip(lo, hi)]
    return _Box(lo, hi, axes)


def _evaluator(spec: InnerBoundSpec):
    ch = spec.channel
    if spec.scheme == "joint":
        return lambda P: _joint_batch(ch, P)
    if spec.scheme == "sequential":
        return lambda P: _sequential_batch(ch, P)
    if spec.scheme == "superposition":
        if ch.p2 == 0:
            raise ValueError("superposition scheme needs P2 > 0; use the bc scheme")
        return lambda P: _superposition_batch(ch, P)
    return lambda P: _bc_batch(ch, P[:, 0])[:, None, :]


def _score(pairs: np.ndarray, w) -> np.ndarray:
    """Best weighted sum over the corners of each parametrization.

    ``w`` is a scalar or an array broadcast against the leading axes.
    """
    w = np.asarray(w, dtype=float)[..., None]
    return np.max(w * pairs[..., 0] + (1.0 - w) * pairs[..., 1], axis=-1)


def _clean(corners: np.ndarray) -> np.ndarray:
    """Corner rates with undefined values zeroed and negatives clipped."""
    return np.maximum(np.where(np.isfinite(corners), corners, 0.0), 0.0)


def _hull(pool, provenance: str) -> RateRegion:
    return pareto_frontier(np.concatenate([c.reshape(-1, 2) for _, c in pool]), provenance=provenance)


def _vertex_owners(pool, hull: RateRegion):
    """Hull vertices by increasing R1, with the parametrization and corners producing each.

    Only these parametrizations can maximize a weighted sum rate, so the
    rest of the pool can be dropped.
    """
    params = np.concatenate([p for p, _ in pool])
    corners = np.concatenate([c for _, c in pool])
    v = hull.as_array()[::-1]
    flat = corners.reshape(-1, 2)
    pos = np.minimum(np.searchsorted(v[:, 0], flat[:, 0]), v.shape[0] - 1)
    hit = np.flatnonzero((v[pos, 0] == flat[:, 0]) & (v[pos, 1] == flat[:, 1]))
    owner = np.full(v.shape[0], -1)
    owner[pos[hit]] = hit // corners.shape[1]
    if np.any(owner < 0):
        raise RuntimeError("hull vertex without a parametrization")
    return v, params[owner], corners[owner]


def _support_vertex(verts: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Index of the vertex maximizing w R1 + (1 - w) R2; ``verts`` by increasing R1."""
    n1 = verts[:-1, 1] - verts[1:, 1]
    n2 = verts[1:, 0] - verts[:-1, 0]
    return np.searchsorted(n1 / (n1 + n2), weights)


def _simplex_refine(evaluate, weights, starts, lo, hi, scale, iters, pool):
    """Nelder-Mead on ``w R1 + (1 - w) R2`` for every weight at once.

    ``starts`` (W, d) are the initial points and ``scale`` (d,) the initial
    simplex edge per axis; axes with zero scale stay fixed. The simplex may
    leave the box; points are evaluated at their projection onto it, which
    keeps the objective continuous without collapsing the simplex on a
    face. A weight stops once its simplex has shrunk below ``SIMPLEX_XTOL``
    initial edges. Every
    evaluated parametrization is appended to ``pool`` with its corners.
    """
    free = np.flatnonzero(scale > 0)
    n = free.size

    def score(points, w):                   # points (k, d), w (k,)
        flat = np.clip(points, lo, hi)
        cp = _clean(evaluate(flat))
        pool.append((flat, cp))
        return _score(cp, w)

    W = starts.shape[0]
    simplex = np.repeat(starts[:, None, :], n + 1, axis=1)
    for a, i in enumerate(free):
        simplex[:, a + 1, i] += scale[i]
    vals = score(simplex.reshape(-1, starts.shape[1]), np.repeat(weights, n + 1)).reshape(W, n + 1)
    live = np.ones(W, dtype=bool)
    for _ in range(iters):
        act = np.flatnonzero(live)
        if act.size == 0:
            break
        order = np.argsort(-vals[act], axis=1)
        sx = np.take_along_axis(simplex[act], order[:, :, None], axis=1)
        sv = np.take_along_axis(vals[act], order, axis=1)
        w = weights[act]
        best, second, worst = sv[:, 0], sv[:, -2], sv[:, -1]
        centroid = sx[:, :-1].mean(axis=1)
        step = centroid - sx[:, -1]
        xr = centroid + step
        fr = score(xr, w)
        # second probe: expansion, outside or inside contraction
        expand = fr > best
        outside = (fr <= second) & (fr > worst)
        inside = fr <= worst
        probe = expand | outside | inside
        coef = np.where(expand, 2.0, np.where(outside, 0.5, -0.5))
        xp = centroid + coef[:, None] * step
        fp = np.full(act.size, -np.inf)
        if np.any(probe):
            fp[probe] = score(xp[probe], w[probe])
        new_x, new_f = xr.copy(), fr.copy()
        use_p = (expand & (fp > fr)) | (outside & (fp >= fr)) | (inside & (fp > worst))
        new_x[use_p], new_f[use_p] = xp[use_p], fp[use_p]
        shrink = (outside | inside) & ~use_p
        sx[~shrink, -1] = new_x[~shrink]
        sv[~shrink, -1] = new_f[~shrink]
        if np.any(shrink):
            k = np.flatnonzero(shrink)
            shrunk = sx[k, :1] + 0.5 * (sx[k, 1:] - sx[k, :1])
            sv[k, 1:] = score(shrunk.reshape(-1, sx.shape[2]), np.repeat(w[k], n)).reshape(k.size, n)
            sx[k, 1:] = shrunk
        simplex[act], vals[act] = sx, sv
        live[act] = np.max(np.abs(sx - sx[:, :1])[..., free] / scale[free], axis=(1, 2)) > SIMPLEX_XTOL
    return vals.max(axis=1)


def _edges(verts: np.ndarray, min_len: float = 1e-3, quantum: int = WEIGHT_QUANTUM):
    """Normal weights of the frontier's sloped edges and their left vertex index.

    ``verts`` is ordered by increasing R1. Edges shorter than ``min_len``
    are skipped (their chord sag is negligible); among edges whose weights
    round to the same multiple of ``1 / quantum`` only the longest is kept.
    """
    n1 = verts[:-1, 1] - verts[1:, 1]
    n2 = verts[1:, 0] - verts[:-1, 0]
    length = np.hypot(n1, n2)
    idx = np.flatnonzero((n1 > 0) & (n2 > 0) & (length > min_len))
    w = n1[idx] / (n1[idx] + n2[idx])
    key = np.round(w * quantum)
    order = np.lexsort((-length[idx], key))
    _, first = np.unique(key[order], return_index=True)
    pick = order[first]
    return w[pick], idx[pick]


def trace_frontier(spec: InnerBoundSpec) -> RateRegion:
    """Grid sweep over the scheme's parameter box, local refinement, Pareto closure.

    Refinement maximizes w R1 + (1 - w) R2 with a simplex search that runs
    for many weights at once. Simplex moves follow the curved ridges where
    two rate bounds cross; axis-aligned moves stall there. The first pass
    uses ``n_weights`` uniform weights started at the best grid point. Each
    of the ``refine_rounds`` further passes takes the weights normal to the
    current frontier's edges and starts one search from each end of the
    edge, which concentrates effort where the frontier bends and escapes
    local optima sitting at either end. Vertices within ``FRONTIER_TOL``
    of a chord are dropped from the result. Deterministic for a spec.
    """
    box = _param_box(spec)
    evaluate = _evaluator(spec)
    mesh = np.meshgrid(*box.axes, indexing="ij")
    params = np.column_stack([m.ravel() for m in mesh])
    pool = [(params, _clean(evaluate(params)))]
    hull = _hull(pool, spec.scheme)

    span = box.hi - box.lo
    if spec.refine_rounds > 0 and np.any(span > 0):
        scale = span / (spec.grid - 1)
        for r in range(spec.refine_rounds + 1):
            verts, owners, corners = _vertex_owners(pool, hull)
            pool[:] = [(owners, corners)]
            if r == 0:
                weights = np.linspace(0.0, 1.0, spec.n_weights)
                starts = owners[_support_vertex(verts, weights)]
            else:
                # both ends of every edge are optimal for its normal weight
                w, left = _edges(verts)
                if w.size == 0:
                    break
                weights = np.concatenate([w, w])
                starts = np.concatenate([owners[left], owners[left + 1]])
            _simplex_refine(evaluate, weights, starts, box.lo, box.hi, scale / 2 ** r, REFINE_ITERS, pool)
            hull = _hull(pool, spec.scheme)
    return simplify(hull, FRONTIER_TOL)
