"""Fourier-Motzkin elimination for rate-split inequality systems.

A system holds integer coefficient rows ``A`` (m x n) and a bound matrix
``b`` (m x K): K numeric instances sharing the same coefficient pattern are
eliminated together, which is what makes checking many random
parametrizations cheap. Every variable carries an implicit ``x >= 0`` row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import RateRegion, pareto_frontier

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class IneqSystem:
    """Rows ``coeffs @ x <= bounds[:, k]`` for instance k, over ``vars``.

    ``feasible[k]`` is cleared when elimination produces a constant row
    ``0 <= bound`` that instance k violates.
    """

    vars: tuple[str, ...]
    coeffs: np.ndarray
    bounds: np.ndarray
    feasible: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.int64).reshape(-1, len(self.vars))
        b = np.asarray(self.bounds, dtype=float).reshape(c.shape[0], -1)
        f = np.asarray(self.feasible, dtype=bool).reshape(-1)
        if f.size != b.shape[1]:
            raise ValueError("feasible flags do not match the number of instances")
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("variable names must be unique")
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "feasible", f)

    @classmethod
    def from_rows(cls, vars: Sequence[str], coeffs, bounds) -> IneqSystem:
        """Build a rate-split system; coefficients must be -1, 0 or +1.

        ``bounds`` is (m,) for one instance or (m, K) for K instances.
        Nonnegativity rows for every variable are appended.
        """
        vars = tuple(vars)
        c = np.asarray(coeffs)
        if c.ndim != 2 or c.shape[1] != len(vars):
            raise ValueError("coefficient matrix must be (rows, len(vars))")
        if not np.all(np.isin(c, (-1, 0, 1))):
            raise ValueError("coefficients must be -1, 0 or +1")
        b = np.asarray(bounds, dtype=float)
        b = b.reshape(c.shape[0], -1)
        if not np.all(np.isfinite(b)):
            raise ValueError("bounds must be finite")
        n, k = len(vars), b.shape[1]
        c = np.vstack([c.astype(np.int64), -np.eye(n, dtype=np.int64)])
        b = np.vstack([b, np.zeros((n, k))])
        return _pruned(cls(vars, c, b, np.ones(k, dtype=bool)))

    @property
    def n_instances(self) -> int:
        return self.bounds.shape[1]

    def index(self, var: str) -> int:
        try:
            return self.vars.index(var)
        except ValueError:
            raise ValueError(f"unknown variable {var!r}") from None

    def satisfied(self, x, k: int = 0, tol: float = FEAS_TOL) -> bool:
        """Whether point ``x`` (ordered as ``vars``) satisfies instance ``k``."""
        lhs = self.coeffs @ np.asarray(x, dtype=float)
        return bool(self.feasible[k] and np.all(lhs <= self.bounds[:, k] + tol))


def _pruned(sys: IneqSystem) -> IneqSystem:
    """Normalize rows by their gcd, fold constant rows into ``feasible``,
    and keep the tightest bound among rows with identical coefficients."""
    c, b, feas = sys.coeffs, sys.bounds, sys.feasible.copy()
    if c.shape[0] == 0:
        return sys
    g = np.gcd.reduce(np.abs(c), axis=1)
    zero = g == 0
    if np.any(zero):
        feas &= np.all(b[zero] >= -FEAS_TOL, axis=0)
    c, b, g = c[~zero], b[~zero], g[~zero]
    c = c // g[:, None]
    b = b / g[:, None]
    if c.shape[0] == 0:
        return IneqSystem(sys.vars, c, b, feas)
    uniq, inv = np.unique(c, axis=0, return_inverse=True)
    tight = np.full((uniq.shape[0], b.shape[1]), np.inf)
    np.minimum.at(tight, inv.reshape(-1), b)
    return IneqSystem(sys.vars, uniq, tight, feas)


def eliminate(sys: IneqSystem, var: str) -> IneqSystem:
    """Project out ``var``: pair every upper row with every lower row."""
    j = sys.index(var)
    c, b = sys.coeffs, sys.bounds
    col = c[:, j]
    up, lo, keep = col > 0, col < 0, col == 0
    cu, bu = c[up], b[up]
    cl, bl = c[lo], b[lo]
    # positive multipliers that cancel column j
    mu = -col[lo]          # applied to upper rows
    ml = col[up]           # applied to lower rows
    comb_c = (cu[:, None, :] * mu[None, :, None] + cl[None, :, :] * ml[:, None, None]).reshape(-1, c.shape[1])
    comb_b = (bu[:, None, :] * mu[None, :, None] + bl[None, :, :] * ml[:, None, None]).reshape(-1, b.shape[1])
    new_c = np.delete(np.vstack([c[keep], comb_c]), j, axis=1)
    new_b = np.vstack([b[keep], comb_b])
    out_vars = sys.vars[:j] + sys.vars[j + 1:]
    return _pruned(IneqSystem(out_vars, new_c, new_b, sys.feasible))


def eliminate_all(sys: IneqSystem, names: Sequence[str]) -> IneqSystem:
    for v in names:
        sys = eliminate(sys, v)
    return sys


def _vertex_table(coeffs: np.ndarray, bounds: np.ndarray, tol: float):
    """Pairwise line intersections of a 2-D system and their feasibility.

    Returns points ``(pairs, K, 2)`` and a mask ``(pairs, K)`` marking the
    intersections that satisfy every row of instance k, i.e. the vertices.
    """
    m = coeffs.shape[0]
    i, j = np.triu_indices(m, k=1)
    a = coeffs.astype(float)
    det = a[i, 0] * a[j, 1] - a[i, 1] * a[j, 0]
    ok = det != 0
    i, j, det = i[ok], j[ok], det[ok]
    # Cramer's rule for every instance at once
    x = (bounds[i] * a[j, 1][:, None] - bounds[j] * a[i, 1][:, None]) / det[:, None]
    y = (a[i, 0][:, None] * bounds[j] - a[j, 0][:, None] * bounds[i]) / det[:, None]
    pts = np.stack([x, y], axis=-1)
    lhs = np.einsum("rc,pkc->pkr", a, pts)
    slack = tol * (1.0 + np.abs(bounds.T))[None, :, :]
    good = np.all(lhs <= bounds.T[None, :, :] + slack, axis=-1)
    return pts, good


def project_system(sys: IneqSystem, tol: float = FEAS_TOL) -> IneqSystem:
    """The (R1, R2) system left after eliminating every split rate, with
    rows that no polygon vertex meets with equality removed.

    Syntactic pruning during elimination keeps only the tightest row per
    coefficient vector; this final pass removes the geometrically redundant
    rows too. A row is kept when it is supported in at least one instance.
    """
    others = [v for v in sys.vars if v not in ("R1", "R2")]
    proj = eliminate_all(sys, others)
    order = [proj.index("R1"), proj.index("R2")]
    coeffs = proj.coeffs[:, order]
    pts, good = _vertex_table(coeffs, proj.bounds, tol)
    good &= proj.feasible[None, :]
    # inside the nonnegative quadrant a nonempty polygon always has a vertex
    feasible = proj.feasible & np.any(good, axis=0)
    if not np.any(good):
        return IneqSystem(("R1", "R2"), coeffs, proj.bounds, feasible)
    lhs = np.einsum("rc,pkc->pkr", coeffs.astype(float), pts)
    tight = np.abs(lhs - proj.bounds.T[None]) <= tol * (1.0 + np.abs(proj.bounds.T[None]))
    keep = np.any(tight & good[:, :, None], axis=(0, 1))
    return IneqSystem(("R1", "R2"), coeffs[keep], proj.bounds[keep], feasible)


def project_vertices(sys: IneqSystem, tol: float = FEAS_TOL, table: bool = False):
    """Eliminate every variable except R1 and R2 and return the polygon vertices.

    By default a list with one ``(v, 2)`` array per instance (``None`` when
    the instance is infeasible). With ``table=True`` the raw
    ``(points, mask)`` pair from all line intersections is returned instead,
    with infeasible instances fully masked.
    """
    for name in ("R1", "R2"):
        sys.index(name)
    others = [v for v in sys.vars if v not in ("R1", "R2")]
    proj = eliminate_all(sys, others)
    coeffs = proj.coeffs[:, [proj.index("R1"), proj.index("R2")]]
    pts, good = _vertex_table(coeffs, proj.bounds, tol)
    good &= proj.feasible[None, :]
    if table:
        return pts, good
    out = []
    for k in range(proj.n_instances):
        v = pts[good[:, k], k]
        out.append(v if v.shape[0] else None)
    return out


def project_to_r1r2(sys: IneqSystem, tol: float = FEAS_TOL):
    """Eliminate every split rate and return the (R1, R2) region.

    Returns a ``RateRegion`` for a single-instance system and a list of
    regions otherwise. Infeasible instances give the empty region. The
    result is the Pareto boundary, i.e. the downward closure of the
    projected polygon.
    """
    regions = []
    for v in project_vertices(sys, tol):
        if v is None:
            regions.append(RateRegion.empty("fme"))
        else:
            regions.append(pareto_frontier(np.maximum(v, 0.0), provenance="fme"))
    return regions[0] if sys.n_instances == 1 else regions


# ---------------------------------------------------------------------------
# builders for the systems used by the inner bounds


def _rows(vars: Sequence[str], rows: Sequence[dict]) -> np.ndarray:
    out = np.zeros((len(rows), len(vars)), dtype=np.int64)
    for r, row in enumerate(rows):
        for name, c in row.items():
            out[r, vars.index(name)] = c
    return out


def _split_rows(total: str, parts: Sequence[str]) -> list[dict]:
    eq = {total: 1, **{p: -1 for p in parts}}
    return [eq, {k: -v for k, v in eq.items()}]


def joint_system(private, r1, r2_side, r2_sum) -> IneqSystem:
    """Joint decoding with X2a and Q absent, over (R1a, Rc, R1, R2).

    R1a <= private, R1 <= r1, R2 <= r2_side, R2 + Rc <= r2_sum.
    """
    vars = ("R1a", "Rc", "R1", "R2")
    rows = [{"R1a": 1}, {"R1": 1}, {"R2": 1}, {"R2": 1, "Rc": 1}] + _split_rows("R1", ("R1a", "Rc"))
    b = np.vstack([np.atleast_1d(v) for v in (private, r1, r2_side, r2_sum)])
    b = np.vstack([b, np.zeros((2, b.shape[1]))])
    return IneqSystem.from_rows(vars, _rows(vars, rows), b)


def superposition_system(private, r1, sum_rx1, common) -> IneqSystem:
    """R1a <= private, R1 <= r1, R1 + R2 <= sum_rx1, Rc + R2 <= common."""
    vars = ("R1a", "Rc", "R1", "R2")
    rows = [{"R1a": 1}, {"R1": 1}, {"R1": 1, "R2": 1}, {"Rc": 1, "R2": 1}] + _split_rows("R1", ("R1a", "Rc"))
    b = np.vstack([np.atleast_1d(v) for v in (private, r1, sum_rx1, common)])
    b = np.vstack([b, np.zeros((2, b.shape[1]))])
    return IneqSystem.from_rows(vars, _rows(vars, rows), b)


THM1_ROWS = (
    {"R1a": 1},
    {"R1": 1},
    {"R2": 1},
    {"R2": 1, "Rc": 1},
    {"R2b": 1},
    {"R2b": 1, "Rc": 1},
)
THM2_ROWS = ({"R1a": 1}, {"Rc": 1}, {"R2a": 1}, {"R2b": 1})
SPLIT_VARS = ("R1a", "Rc", "R2a", "R2b", "R1", "R2")


def split_system(rows: Sequence[dict], rhs) -> IneqSystem:
    """General rate-split system over (R1a, Rc, R2a, R2b, R1, R2).

    ``rhs`` has one entry (or one column of instances) per row in ``rows``.
    """
    vars = SPLIT_VARS
    all_rows = list(rows) + _split_rows("R1", ("R1a", "Rc")) + _split_rows("R2", ("R2a", "R2b"))
    b = np.asarray(rhs, dtype=float).reshape(len(rows), -1)
    b = np.vstack([b, np.zeros((4, b.shape[1]))])
    return IneqSystem.from_rows(vars, _rows(vars, all_rows), b)
