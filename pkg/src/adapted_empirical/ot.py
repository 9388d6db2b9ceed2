"""Exact discrete optimal transport.

The workhorse is :func:`transport_simplex`, a transportation (bipartite
network) simplex that keeps a spanning-tree basis of ``n + m - 1`` cells.
Supplies are integers whenever both measures carry rational weights, so
flows stay exact; a float path with a 1e-9 feasibility tolerance covers
weight systems whose common denominator would not fit in 53 bits.

Pricing is Dantzig with lowest-arc-index tie breaks and falls back to
Bland's rule after a run of degenerate pivots.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import state_norms
from .measure import DiscreteMeasure
from .simplex import LPError

__all__ = [
    "Coupling",
    "TransportResult",
    "transport_simplex",
    "cost_matrix",
    "w1_exact_1d",
    "wp_exact_1d",
    "wp_discrete",
    "wp_with_value_to_go",
    "integer_supplies",
]

EXACT_LIMIT = 2**53
FLOAT_FEAS_TOL = 1e-9
DEGENERATE_SWITCH = 50


@dataclass
class TransportResult:
    objective: float
    rows: np.ndarray
    cols: np.ndarray
    flow: np.ndarray
    total: float
    u: np.ndarray
    v: np.ndarray
    exact: bool
    iterations: int

    @property
    def mass(self) -> np.ndarray:
        return self.flow / self.total


@dataclass
class Coupling:
    """Sparse transport plan between atoms of two measures."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    value: float
    exact: bool = True
    dual_value: float | None = None

    def dense(self, n: int, m: int) -> np.ndarray:
        out = np.zeros((n, m))
        np.add.at(out, (self.rows, self.cols), self.mass)
        return out

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.mass))


def _northwest_corner(a, b):
    n, m = len(a), len(b)
    ra, rb = a.copy(), b.copy()
    rows, cols, flow = [], [], []
    i = j = 0
    while True:
        f = min(ra[i], rb[j])
        rows.append(i)
        cols.append(j)
        flow.append(f)
        ra[i] -= f
        rb[j] -= f
        if i == n - 1 and j == m - 1:
            break
        if ra[i] <= 0 and i < n - 1:
            i += 1
        else:
            j += 1
    return np.array(rows), np.array(cols), np.array(flow, dtype=a.dtype)


class _SpanningTree:
    """Basis tree rooted at row node 0, with node potentials kept in step.

    Nodes ``0..n-1`` are rows and ``n..n+m-1`` columns; ``pot`` holds u
    then v, with ``u_i + v_j = C_ij`` on every basic arc.
    """

    def __init__(self, C, rows, cols):
        self.C = C
        self.n, self.m = C.shape
        self.rows, self.cols = rows, cols
        size = self.n + self.m
        self.adj = [set() for _ in range(size)]
        for k, (i, j) in enumerate(zip(rows, cols)):
            self.adj[i].add(k)
            self.adj[self.n + j].add(k)
        self.parent = np.full(size, -1, dtype=np.int64)
        self.depth = np.zeros(size, dtype=np.int64)
        self.pot = np.zeros(size)
        self.rebuild()

    def _other(self, node, k):
        return self.n + self.cols[k] if node < self.n else self.rows[k]

    def _hang(self, start, shift_row: float = 0.0, recompute: bool = False) -> list:
        """Walk the subtree below ``start``, fixing parents, depths and potentials; returns its nodes."""
        queue = deque([start])
        seen = []
        n, C, pot = self.n, self.C, self.pot
        while queue:
            node = queue.popleft()
            seen.append(node)
            if recompute:
                if node != start or self.parent[node] >= 0:
                    k = self.parent[node]
                    i, j = self.rows[k], self.cols[k]
                    pot[node] = C[i, j] - pot[n + j] if node < n else C[i, j] - pot[i]
            else:
                pot[node] += shift_row if node < n else -shift_row
            for k in self.adj[node]:
                if k == self.parent[node]:
                    continue
                child = self._other(node, k)
                self.parent[child] = k
                self.depth[child] = self.depth[node] + 1
                queue.append(child)
        return seen

    def rebuild(self):
        self.parent[0] = -1
        self.depth[0] = 0
        self.pot[0] = 0.0
        self._hang(0, recompute=True)

    def cycle(self, i, j):
        """Tree path from column ``j`` to row ``i`` as (arcs from the column side, arcs from the row side)."""
        p, q = i, self.n + j
        up_p, up_q = [], []
        while self.depth[p] > self.depth[q]:
            k = self.parent[p]
            up_p.append(k)
            p = self._other(p, k)
        while self.depth[q] > self.depth[p]:
            k = self.parent[q]
            up_q.append(k)
            q = self._other(q, k)
        while p != q:
            k = self.parent[p]
            up_p.append(k)
            p = self._other(p, k)
            k = self.parent[q]
            up_q.append(k)
            q = self._other(q, k)
        return up_q, up_p

    def swap(self, leave, i, j, row_side: bool):
        """Replace basic arc ``leave`` by (i, j); ``row_side`` says the cut-off subtree holds row i."""
        n = self.n
        r = self.C[i, j] - self.pot[i] - self.pot[n + j]
        a, b = self.rows[leave], n + self.cols[leave]
        self.adj[a].discard(leave)
        self.adj[b].discard(leave)
        self.rows[leave], self.cols[leave] = i, j
        self.adj[i].add(leave)
        self.adj[n + j].add(leave)
        inside, outside = (i, n + j) if row_side else (n + j, i)
        self.parent[inside] = leave
        self.depth[inside] = self.depth[outside] + 1
        # the re-hung subtree shifts so that the entering arc has zero reduced cost
        shift = r if row_side else -r
        nodes = np.array(self._hang(inside, shift_row=shift))
        return nodes[nodes < n], nodes[nodes >= n] - n, shift


def transport_simplex(cost, supply, demand, *, max_iter: int | None = None) -> TransportResult:
    """Solve the balanced transportation problem ``min <C, F>`` over flows F >= 0.

    ``supply`` and ``demand`` are integer arrays with equal sums (exact
    mode) or nonnegative floats summing to the same total within 1e-9.
    """
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] == 0 or C.shape[1] == 0:
        raise ValueError("cost must be a non-empty 2-D array")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost entries must be finite")
    n, m = C.shape
    a, b = np.asarray(supply), np.asarray(demand)
    if a.shape != (n,) or b.shape != (m,):
        raise ValueError(f"supply/demand shapes {a.shape}, {b.shape} do not match cost {C.shape}")
    exact = np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer)
    if exact:
        a, b = a.astype(np.int64), b.astype(np.int64)
        total = int(a.sum())
        if total != int(b.sum()):
            raise ValueError("supply and demand totals differ")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("supplies must be nonnegative")
    else:
        a, b = a.astype(np.float64), b.astype(np.float64)
        total = float(a.sum())
        if abs(total - b.sum()) > FLOAT_FEAS_TOL * max(1.0, total) or np.any(a < 0) or np.any(b < 0):
            raise ValueError("supply and demand must be nonnegative with equal totals")
        b = b * (total / b.sum())
    if max_iter is None:
        max_iter = 20 * n * m + 1000

    rows, cols, flow = _northwest_corner(a, b)
    tree = _SpanningTree(C, rows, cols)
    rtol = 1e-12 * max(1.0, float(np.abs(C).max())) * (n + m)
    ftol = 0 if exact else FLOAT_FEAS_TOL * max(1.0, total) * 1e-3
    degenerate_run = 0
    it = 0
    fresh = True
    red = C - tree.pot[:n, None] - tree.pot[None, n:]
    while True:
        if degenerate_run >= DEGENERATE_SWITCH:
            neg = np.flatnonzero(red.ravel() < -rtol)
            e = int(neg[0]) if neg.size else -1
        else:
            e = int(np.argmin(red))
            if red.flat[e] >= -rtol:
                e = -1
        if e < 0:
            if fresh:
                break
            # confirm optimality against potentials recomputed from scratch
            tree.rebuild()
            red = C - tree.pot[:n, None] - tree.pot[None, n:]
            fresh = True
            continue
        if it >= max_iter:
            raise LPError(f"transportation simplex did not converge in {max_iter} pivots")
        it += 1
        fresh = False
        i, j = divmod(e, m)
        up_q, up_p = tree.cycle(i, j)
        path = up_q + up_p[::-1]
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[k] for k in minus)
        tied = [k for k in minus if flow[k] - theta <= ftol]
        leave = min(tied, key=lambda k: rows[k] * m + cols[k])
        for k in minus:
            flow[k] -= theta
        for k in plus:
            flow[k] += theta
        flow[leave] = theta
        # the leaving arc sits on the row's side of the cycle exactly when the cut-off part holds row i
        moved_rows, moved_cols, shift = tree.swap(leave, i, j, row_side=leave in up_p)
        red[moved_rows, :] -= shift
        red[:, moved_cols] += shift
        degenerate_run = degenerate_run + 1 if theta <= ftol else 0

    if not exact:
        flow = np.maximum(flow, 0.0)
    u, v = tree.pot[:n].copy(), tree.pot[n:].copy()
    objective = float(np.dot(flow.astype(np.float64), C[rows, cols]) / total)
    return TransportResult(objective, rows.copy(), cols.copy(), flow.copy(), total, u, v, bool(exact), it)


def cost_matrix(x, y, p: float = 1.0) -> np.ndarray:
    """``||x_i - y_j||^p`` with the Euclidean norm; rows of x and y are points of R^d."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[1] != y.shape[1]:
        raise ValueError("dimension mismatch")
    dist = state_norms(x[:, None, :] - y[None, :, :])
    return dist if p == 1 else dist**p


def integer_supplies(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Supplies of both measures over their least common denominator.

    Falls back to float weights (``exact=False``) when that denominator
    does not fit in 53 bits.
    """
    L = math.lcm(mu.denom, nu.denom)
    if L >= EXACT_LIMIT:
        return mu.weights, nu.weights, False
    return mu.counts * (L // mu.denom), nu.counts * (L // nu.denom), True


def _check_p(p):
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")


def wp_exact_1d(x, a, y, b, p: float = 1.0) -> float:
    """``W_p^p`` between 1-D measures by the quantile (sorted sweep) formula.

    ``a`` and ``b`` are integer counts (any totals) or float weights.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    a, b = np.asarray(a), np.asarray(b)
    ox, oy = np.argsort(x, kind="stable"), np.argsort(y, kind="stable")
    x, a, y, b = x[ox], a[ox], y[oy], b[oy]
    L = 0
    if np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer):
        L = math.lcm(int(a.sum()), int(b.sum()))
    if 0 < L < EXACT_LIMIT:
        ca = np.cumsum(a.astype(np.int64) * (L // int(a.sum())))
        cb = np.cumsum(b.astype(np.int64) * (L // int(b.sum())))
        total = float(L)
    else:
        ca = np.cumsum(a / a.sum())
        cb = np.cumsum(b / b.sum())
        ca[-1] = cb[-1] = 1.0
        total = 1.0
    br = np.union1d(ca, cb)
    lengths = np.diff(np.concatenate([[0], br])).astype(np.float64)
    ix = np.minimum(np.searchsorted(ca, br, side="left"), len(x) - 1)
    iy = np.minimum(np.searchsorted(cb, br, side="left"), len(y) - 1)
    gap = np.abs(x[ix] - y[iy])
    if p != 1:
        gap = gap**p
    return float(np.dot(lengths, gap) / total)


def w1_exact_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """W_1 between measures on the real line via the quantile functions."""
    if mu.d != 1 or nu.d != 1:
        raise ValueError("w1_exact_1d needs measures on R^1")
    return wp_exact_1d(mu.atoms[:, 0], mu.counts, nu.atoms[:, 0], nu.counts, 1.0)


def _solve(mu, nu, C) -> Coupling:
    a, b, exact = integer_supplies(mu, nu)
    res = transport_simplex(C, a, b)
    dual = float((np.dot(a, res.u) + np.dot(b, res.v)) / res.total)
    keep = res.flow > 0
    return Coupling(res.rows[keep], res.cols[keep], res.mass[keep], res.objective, exact, dual)


def wp_discrete(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 1.0) -> tuple[float, Coupling]:
    """``W_p`` and an optimal basic plan (``plan.value`` holds the unrooted cost)."""
    _check_p(p)
    if mu.d != nu.d:
        raise ValueError(f"dimension mismatch: {mu.d} vs {nu.d}")
    plan = _solve(mu, nu, cost_matrix(mu.atoms, nu.atoms, p))
    value = max(plan.value, 0.0)
    return (value if p == 1 else value ** (1.0 / p)), plan


def wp_with_value_to_go(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, vtg) -> tuple[float, Coupling]:
    """Transport with cost ``||x_i - y_j||^p + vtg[i, j]``; returns the unrooted optimum."""
    _check_p(p)
    if mu.d != nu.d:
        raise ValueError(f"dimension mismatch: {mu.d} vs {nu.d}")
    vtg = np.asarray(vtg, dtype=np.float64)
    if vtg.shape != (len(mu), len(nu)):
        raise ValueError(f"value-to-go shape {vtg.shape} != {(len(mu), len(nu))}")
    if np.any(vtg < 0) or not np.all(np.isfinite(vtg)):
        raise ValueError("value-to-go entries must be finite and nonnegative")
    plan = _solve(mu, nu, cost_matrix(mu.atoms, nu.atoms, p) + vtg)
    return plan.value, plan
