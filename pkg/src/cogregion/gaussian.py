"""Scalar Gaussian cognitive interference channel and Gaussian mutual information.

Channel (unit-variance noises Z1, Z2)::

    Y1 = X1 + a X2 + Z1
    Y2 = b X1 + X2 + Z2

Inputs are built from three independent Gaussians::

    X2  ~ N(0, P2),  X1c ~ N(0, alpha beta P1),  X1a ~ N(0, alpha (1-beta) P1)
    U1c = X1c + lambda1 X2
    U1a = X1a + lambda2 X2
    X1  = X1c + X1a + sqrt((1-alpha) P1 / P2) X2

Degenerate covariances are common (alpha or beta at 0 or 1, lambda = 0,
P2 = 0). They are handled by restricting every block to the span of its
eigenvectors with eigenvalue above ``RANK_RTOL * trace``. A nondegenerate
component of one set that is a deterministic linear function of the other
set gives infinite mutual information, which is returned as ``math.inf``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RANK_RTOL = 1e-10

LABELS = ("X2", "X1c", "X1a", "U1c", "U1a", "X1", "Y1", "Y2")
_IDX = {name: i for i, name in enumerate(LABELS)}
# independent sources: X1c, X1a, X2, Z1, Z2
_N_SRC = 5


@dataclass(frozen=True)
class GaussianChannel:
    a: float
    b: float
    p1: float
    p2: float

    def __post_init__(self):
        for name in ("a", "b", "p1", "p2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.p1 < 0 or self.p2 < 0:
            raise ValueError("powers must be nonnegative")

    @classmethod
    def from_squared_gains(cls, a2: float, b2: float, p1: float, p2: float) -> GaussianChannel:
        if a2 < 0 or b2 < 0:
            raise ValueError("squared gains must be nonnegative")
        return cls(math.sqrt(a2), math.sqrt(b2), float(p1), float(p2))

    @classmethod
    def from_json(cls, path) -> GaussianChannel:
        cfg = json.loads(Path(path).read_text())
        try:
            return cls.from_squared_gains(cfg["a2"], cfg["b2"], cfg["p1"], cfg["p2"])
        except KeyError as exc:
            raise ValueError(f"channel config missing key {exc}") from None

    def to_json_dict(self) -> dict:
        return {"a2": self.a**2, "b2": self.b**2, "p1": self.p1, "p2": self.p2}

    def replace(self, **kw) -> GaussianChannel:
        d = dict(a=self.a, b=self.b, p1=self.p1, p2=self.p2)
        d.update(kw)
        return GaussianChannel(**d)


@dataclass(frozen=True)
class DpcParams:
    alpha: float
    beta: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if not (self.lambda1 >= 0.0 and self.lambda2 >= 0.0):
            raise ValueError("lambda1 and lambda2 must be nonnegative")
        if not all(math.isfinite(v) for v in (self.lambda1, self.lambda2)):
            raise ValueError("lambdas must be finite")


def costa_lambda(ch: GaussianChannel) -> float:
    """Dirty-paper coefficient a P1 / (P1 + 1) for the interference a X2 at receiver 1."""
    return ch.a * ch.p1 / (ch.p1 + 1.0)


@dataclass(frozen=True)
class JointGaussian:
    labels: tuple[str, ...]
    cov: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        n = len(self.labels)
        if cov.shape != (n, n):
            raise ValueError("covariance shape does not match labels")
        scale = max(np.max(np.abs(cov)), 1.0)
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-9 * max(np.trace(cov), 1.0):
            raise ValueError("covariance is not positive semidefinite")
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)

    def index(self, names) -> list[int]:
        pos = {n: i for i, n in enumerate(self.labels)}
        try:
            return [pos[n] for n in names]
        except KeyError as exc:
            raise ValueError(f"unknown label {exc}") from None

    def var(self, name: str) -> float:
        i = self.index([name])[0]
        return float(self.cov[i, i])


def _coefficients(ch: GaussianChannel, p: DpcParams) -> tuple[np.ndarray, np.ndarray]:
    """Rows of LABELS as linear maps of the sources (X1c, X1a, X2, Z1, Z2)."""
    alpha = 1.0 if ch.p2 == 0 else p.alpha
    coop = 0.0 if ch.p2 == 0 else math.sqrt((1.0 - alpha) * ch.p1 / ch.p2)
    src_var = np.array([alpha * p.beta * ch.p1, alpha * (1.0 - p.beta) * ch.p1, ch.p2, 1.0, 1.0])
    x2 = np.array([0, 0, 1, 0, 0], dtype=float)
    x1c = np.array([1, 0, 0, 0, 0], dtype=float)
    x1a = np.array([0, 1, 0, 0, 0], dtype=float)
    z1 = np.array([0, 0, 0, 1, 0], dtype=float)
    z2 = np.array([0, 0, 0, 0, 1], dtype=float)
    x1 = x1c + x1a + coop * x2
    rows = [
        x2,
        x1c,
        x1a,
        x1c + p.lambda1 * x2,
        x1a + p.lambda2 * x2,
        x1,
        x1 + ch.a * x2 + z1,
        ch.b * x1 + x2 + z2,
    ]
    return np.vstack(rows), src_var


def assemble_joint(ch: GaussianChannel, p: DpcParams) -> JointGaussian:
    """Full second-moment matrix of (X2, X1c, X1a, U1c, U1a, X1, Y1, Y2).

    With P2 = 0 the channel is the broadcast special case: X2 is the zero
    signal and alpha is taken as 1 (no cooperation term).
    """
    m, s = _coefficients(ch, p)
    cov = (m * s) @ m.T
    return JointGaussian(LABELS, 0.5 * (cov + cov.T))


def _range_basis(cov: np.ndarray, ref: np.ndarray | None = None) -> np.ndarray:
    """Basis of the nondegenerate subspace of ``cov``.

    Rank is decided on the block rescaled by the reference standard
    deviations ``ref`` (default: its own diagonal), so a variable of tiny
    but nonzero variance still counts. Conditional covariances pass the
    unconditional variances, which makes exactly determined components
    vanish. Basis columns are in the original coordinates.
    """
    n = cov.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    d = np.sqrt(np.maximum(np.diag(cov) if ref is None else ref, 0.0))
    live = d > 0
    if not np.any(live):
        return np.zeros((n, 0))
    inv = np.where(live, 1.0 / np.where(live, d, 1.0), 0.0)
    w, v = np.linalg.eigh(cov * np.outer(inv, inv))
    return inv[:, None] * v[:, w > RANK_RTOL * live.sum()]


def _whitener(cov: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Map W with W.T @ cov @ W = I on the span of ``basis``."""
    w, u = np.linalg.eigh(basis.T @ cov @ basis)
    return basis @ u / np.sqrt(w)


def _mi_cov(cov: np.ndarray, ia: list[int], ib: list[int], ref: np.ndarray | None = None) -> float:
    """Mutual information from the canonical correlations of the two blocks.

    Whitening each block first makes the result (and the test for an exactly
    determined relation) independent of the scale of either set.
    """
    ref = np.diag(cov) if ref is None else ref
    sa = cov[np.ix_(ia, ia)]
    sb = cov[np.ix_(ib, ib)]
    va = _range_basis(sa, ref[ia])
    vb = _range_basis(sb, ref[ib])
    if va.shape[1] == 0 or vb.shape[1] == 0:
        return 0.0
    cross = _whitener(sa, va).T @ cov[np.ix_(ia, ib)] @ _whitener(sb, vb)
    sigma = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    gap = (1.0 - sigma) * (1.0 + sigma)
    if gap.min() <= RANK_RTOL:
        return math.inf
    return float(-0.5 * np.sum(np.log2(gap)))


def _check_sets(jg: JointGaussian, *sets, allow_empty_last=False):
    seen: set[str] = set()
    for k, s in enumerate(sets):
        s = list(s)
        if not s and not (allow_empty_last and k == len(sets) - 1):
            raise ValueError("label sets must be nonempty")
        if seen.intersection(s) or len(set(s)) != len(s):
            raise ValueError("label sets must be disjoint")
        seen.update(s)
    jg.index(seen)


def mi(jg: JointGaussian, set_a, set_b) -> float:
    """I(A; B) in bits for disjoint label sets of a joint Gaussian."""
    set_a, set_b = list(set_a), list(set_b)
    _check_sets(jg, set_a, set_b)
    return _mi_cov(jg.cov, jg.index(set_a), jg.index(set_b))


def _conditional_cov(cov: np.ndarray, keep: list[int], given: list[int]) -> np.ndarray:
    skk = cov[np.ix_(keep, keep)]
    if not given:
        return skk
    sgg = cov[np.ix_(given, given)]
    v = _range_basis(sgg)
    if v.shape[1] == 0:
        return skk
    proj = cov[np.ix_(keep, given)] @ v
    out = skk - proj @ np.linalg.solve(v.T @ sgg @ v, proj.T)
    return 0.5 * (out + out.T)


def mi_cond(jg: JointGaussian, set_a, set_b, set_c=()) -> float:
    """I(A; B | C) in bits, through the Gaussian conditional covariance given C."""
    set_a, set_b, set_c = list(set_a), list(set_b), list(set_c)
    _check_sets(jg, set_a, set_b, set_c, allow_empty_last=True)
    if not set_c:
        return mi(jg, set_a, set_b)
    ia, ib, ic = jg.index(set_a), jg.index(set_b), jg.index(set_c)
    cc = _conditional_cov(jg.cov, ia + ib, ic)
    na = len(ia)
    ref = np.diag(jg.cov)[ia + ib]
    return _mi_cov(cc, list(range(na)), list(range(na, na + len(ib))), ref)


# ---------------------------------------------------------------------------
# Batched path used by grid sweeps. Every term needed by the inner bounds has
# a scalar "target" variable, so each mutual information is a ratio of
# conditional variances: I(T; S) = 0.5 log2(var T / var(T | S)).


def batch_covariances(ch: GaussianChannel, alpha, beta, lambda1, lambda2) -> np.ndarray:
    """Stack of LABELS covariances, shape (n, 8, 8), for parameter arrays."""
    alpha, beta, lambda1, lambda2 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (alpha, beta, lambda1, lambda2)))
    alpha, beta = alpha.ravel(), beta.ravel()
    lambda1, lambda2 = lambda1.ravel(), lambda2.ravel()
    n = alpha.size
    if ch.p2 == 0:
        alpha = np.ones_like(alpha)
        coop = np.zeros(n)
    else:
        coop = np.sqrt((1.0 - alpha) * ch.p1 / ch.p2)
    m = np.zeros((n, 8, _N_SRC))
    m[:, 0, 2] = 1.0                                   # X2
    m[:, 1, 0] = 1.0                                   # X1c
    m[:, 2, 1] = 1.0                                   # X1a
    m[:, 3, 0] = 1.0; m[:, 3, 2] = lambda1             # U1c
    m[:, 4, 1] = 1.0; m[:, 4, 2] = lambda2             # U1a
    m[:, 5, 0] = 1.0; m[:, 5, 1] = 1.0; m[:, 5, 2] = coop          # X1
    m[:, 6, :3] = m[:, 5, :3]; m[:, 6, 2] += ch.a; m[:, 6, 3] = 1.0  # Y1
    m[:, 7, :3] = ch.b * m[:, 5, :3]; m[:, 7, 2] += 1.0; m[:, 7, 4] = 1.0  # Y2
    s = np.empty((n, _N_SRC))
    s[:, 0] = alpha * beta * ch.p1
    s[:, 1] = alpha * (1.0 - beta) * ch.p1
    s[:, 2] = ch.p2
    s[:, 3] = 1.0
    s[:, 4] = 1.0
    return np.einsum("nik,nk,njk->nij", m, s, m)


def _batch_pinv_factor(sgg: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """F with F @ F.T the pseudo-inverse of each covariance, rank decided on the scale ``ref``.

    Applying the factor (rather than the explicit pseudo-inverse) keeps
    precision when the conditioning variables are nearly collinear.
    """
    d = np.sqrt(np.maximum(ref, 0.0))
    live = d > 0
    inv = np.where(live, 1.0 / np.where(live, d, 1.0), 0.0)
    w, v = np.linalg.eigh(sgg * inv[:, :, None] * inv[:, None, :])
    keep = w > RANK_RTOL * live.sum(axis=1)[:, None]
    scale = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    return v * inv[:, :, None] * scale[:, None, :]


def _quad(x: np.ndarray, factor: np.ndarray) -> np.ndarray:
    """x P x.T for P = factor factor.T, batched; x has shape (n, k, g)."""
    y = x @ factor
    return y @ np.swapaxes(y, 1, 2)


def _batch_schur(cov: np.ndarray, keep: list[int], given: list[int]) -> np.ndarray:
    """Conditional covariance of ``keep`` given ``given`` for each matrix in the stack."""
    skk = cov[:, keep][:, :, keep]
    if not given:
        return skk
    skg = cov[:, keep][:, :, given]
    f = _batch_pinv_factor(cov[:, given][:, :, given], np.diagonal(cov, axis1=1, axis2=2)[:, given])
    out = skk - _quad(skg, f)
    return 0.5 * (out + np.swapaxes(out, 1, 2))


def batch_cond_var(cov: np.ndarray, target: str, given=()) -> np.ndarray:
    """var(T | S) for each covariance in the stack; exact zeros for determined T."""
    t = _IDX[target]
    vt = cov[:, t, t]
    cv = _batch_schur(cov, [t], [_IDX[x] for x in given])[:, 0, 0]
    zero = cv <= RANK_RTOL * np.maximum(vt, np.finfo(float).tiny)
    return np.where(zero, 0.0, cv)


def batch_mi_scalar_cond(cov: np.ndarray, target: str, given, cond=()) -> np.ndarray:
    """I(T; S | C) = -0.5 log2(1 - r) with r the share of var(T | C) explained by S.

    0 when T is determined by C (or constant), inf when T is determined by
    (S, C). Working with the explained share keeps small values accurate.
    """
    t, g, c = _IDX[target], [_IDX[x] for x in given], [_IDX[x] for x in cond]
    vt = cov[:, t, t]
    part = _batch_schur(cov, [t] + g, c)
    vc = part[:, 0, 0]
    cross = part[:, 0, 1:]
    ref = np.diagonal(cov, axis1=1, axis2=2)[:, g]
    explained = _quad(cross[:, None, :], _batch_pinv_factor(part[:, 1:, 1:], ref))[:, 0, 0]
    live = vc > RANK_RTOL * np.maximum(vt, np.finfo(float).tiny)
    share = np.where(live, explained / np.where(live, vc, 1.0), 0.0)
    gap = 1.0 - np.clip(share, 0.0, 1.0)
    det = live & (gap <= RANK_RTOL)
    out = np.zeros_like(vt)
    ok = live & ~det
    out[ok] = -0.5 * np.log2(gap[ok])
    out[det] = np.inf
    return out


def batch_mi_scalar(cov: np.ndarray, target: str, given) -> np.ndarray:
    """I(T; S); 0 for constant T and inf when T is determined by S."""
    return batch_mi_scalar_cond(cov, target, given)
