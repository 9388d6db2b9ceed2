"""Adapted Wasserstein (nested) distance between path-measure trees.

:func:`aw_nested` runs the backward recursion over node pairs of equal
depth: the value of a node pair is the optimal transport cost between the
two children kernels, where moving child ``a`` onto child ``b`` costs
``||x_a - y_b||^p`` plus the value already computed for ``(a, b)``.
:func:`bicausal_lp_oracle` solves the same problem as one linear program
over joint leaf probabilities with the causality constraints written out,
and is only meant for cross-checking on small trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import PathMeasureTree
from .ot import EXACT_LIMIT, cost_matrix, transport_simplex, wp_exact_1d
from .simplex import simplex_solve

__all__ = [
    "BudgetExceeded",
    "ValueTable",
    "aw_nested",
    "bicausal_lp_oracle",
    "bicausal_constraints",
    "w_flat",
    "DEFAULT_ORACLE_CAP",
]

DEFAULT_ORACLE_CAP = 400


class BudgetExceeded(RuntimeError):
    "Raised when a problem is larger than the configured node-pair budget."


@dataclass
class ValueTable:
    """Value-to-go matrices per level; ``tables[t]`` is indexed by (mu node, nu node) at level t.

    The leaf level is identically zero and stored as ``None``.
    """

    tables: list

    def __getitem__(self, t: int) -> np.ndarray | None:
        return self.tables[t]

    def __len__(self):
        return len(self.tables)


def _check_pair(mu: PathMeasureTree, nu: PathMeasureTree, p: float):
    if not isinstance(mu, PathMeasureTree) or not isinstance(nu, PathMeasureTree):
        raise TypeError("expected two PathMeasureTree instances")
    if mu.dims != nu.dims:
        raise ValueError(f"trees have different dims: {mu.dims} vs {nu.dims}")
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")


def _block_transport(a, b, C) -> float:
    A, B = int(a.sum()), int(b.sum())
    L = math.lcm(A, B)
    if L < EXACT_LIMIT:
        res = transport_simplex(C, a * (L // A), b * (L // B))
    else:
        res = transport_simplex(C, a / A, b / B)
    return res.objective


def _dirac_rows(V, done, X, cm, pm, Y, cn, pn, p):
    """Fill rows of ``V`` whose kernel on the X side is a single atom."""
    single = np.flatnonzero(np.diff(pm) == 1)
    if single.size == 0:
        return
    totals = np.add.reduceat(cn, pn[:-1]).astype(np.float64)
    for i in single:
        dist = cost_matrix(X[pm[i] : pm[i] + 1], Y, p)[0]
        V[i, :] = np.add.reduceat(cn * dist, pn[:-1]) / totals
        done[i, :] = True


def aw_nested(mu: PathMeasureTree, nu: PathMeasureTree, p: float = 1.0, *, max_pairs: int | None = None):
    """Adapted Wasserstein distance of order ``p`` and the value tables of the recursion.

    ``max_pairs`` bounds the node-pair count of any level that needs a value
    table; larger problems raise :class:`BudgetExceeded`.
    """
    _check_pair(mu, nu, p)
    T, d = mu.T, mu.d
    for t in range(T - 1):
        pairs = mu.level_size(t) * nu.level_size(t)
        if max_pairs is not None and pairs > max_pairs:
            raise BudgetExceeded(
                f"level {t + 1} has {mu.level_size(t)} x {nu.level_size(t)} = {pairs} node pairs "
                f"(budget {max_pairs})"
            )
    tables: list = [None] * T
    V_next = None
    for t in range(T - 2, -1, -1):
        pm, pn = mu.child_ptr(t), nu.child_ptr(t)
        X, Y = mu.points[t + 1], nu.points[t + 1]
        cm, cn = mu.counts[t + 1], nu.counts[t + 1]
        V = np.empty((mu.level_size(t), nu.level_size(t)))
        done = np.zeros(V.shape, dtype=bool)
        if V_next is None:
            # a kernel that is a point mass is transported by a weighted sum of distances
            _dirac_rows(V, done, X, cm, pm, Y, cn, pn, p)
            _dirac_rows(V.T, done.T, Y, cn, pn, X, cm, pm, p)
        for i in range(V.shape[0]):
            xs = slice(pm[i], pm[i + 1])
            for j in range(V.shape[1]):
                if done[i, j]:
                    continue
                ys = slice(pn[j], pn[j + 1])
                if V_next is None and d == 1:
                    V[i, j] = wp_exact_1d(X[xs, 0], cm[xs], Y[ys, 0], cn[ys], p)
                    continue
                C = cost_matrix(X[xs], Y[ys], p)
                if V_next is not None:
                    C = C + V_next[xs, ys]
                V[i, j] = _block_transport(cm[xs], cn[ys], C)
        tables[t] = V
        V_next = V
    C = cost_matrix(mu.points[0], nu.points[0], p)
    if V_next is not None:
        C = C + V_next
    obj = max(_block_transport(mu.counts[0], nu.counts[0], C), 0.0)
    value = obj if p == 1 else obj ** (1.0 / p)
    return value, ValueTable(tables)


def _path_cost(mu: PathMeasureTree, nu: PathMeasureTree, p: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X, a = mu.leaves()
    Y, b = nu.leaves()
    C = np.zeros((X.shape[0], Y.shape[0]))
    for t in range(mu.T):
        C += cost_matrix(X[:, t, :], Y[:, t, :], p)
    return C, a, b


def w_flat(mu: PathMeasureTree, nu: PathMeasureTree, p: float = 1.0) -> float:
    """Plain Wasserstein distance between the leaf measures on R^{dT} (sum-norm path cost)."""
    _check_pair(mu, nu, p)
    C, a, b = _path_cost(mu, nu, p)
    obj = max(_block_transport(a, b, C), 0.0)
    return obj if p == 1 else obj ** (1.0 / p)


def bicausal_constraints(mu: PathMeasureTree, nu: PathMeasureTree) -> tuple[np.ndarray, np.ndarray]:
    """Equality system ``A @ pi = b`` over leaf-pair masses ``pi[k * n_nu + l]``.

    For every level, every pair of parent nodes ``(i, j)`` (the root pair
    first) and every child ``a`` of ``i``::

        pi(a, j) - mu(a | i) * pi(i, j) = 0

    where ``pi(., .)`` sums the leaf pairs below the two nodes, and the
    same with the roles of the trees swapped. For the root pair
    ``pi(root, root) = 1`` moves to the right-hand side.
    """
    T = mu.T
    Lm, Ln = mu.level_size(T - 1), nu.level_size(T - 1)
    rows, rhs = [], []

    def block(lo_m, hi_m, lo_n, hi_n):
        mask = np.zeros((Lm, Ln))
        mask[lo_m:hi_m, lo_n:hi_n] = 1.0
        return mask

    for t in range(-1, T - 1):
        if t == -1:
            lm_par = np.array([0, Lm])
            ln_par = np.array([0, Ln])
            cm_par = np.array([mu.total])
            cn_par = np.array([nu.total])
        else:
            lm_par, ln_par = mu.leaf_ptr(t), nu.leaf_ptr(t)
            cm_par, cn_par = mu.counts[t], nu.counts[t]
        lm_child, ln_child = mu.leaf_ptr(t + 1), nu.leaf_ptr(t + 1)
        cpm, cpn = mu.child_ptr(t), nu.child_ptr(t)
        cm_child, cn_child = mu.counts[t + 1], nu.counts[t + 1]
        for i in range(len(cm_par)):
            for j in range(len(cn_par)):
                parent = block(lm_par[i], lm_par[i + 1], ln_par[j], ln_par[j + 1])
                for a in range(cpm[i], cpm[i + 1]):
                    w = cm_child[a] / cm_par[i]
                    child = block(lm_child[a], lm_child[a + 1], ln_par[j], ln_par[j + 1])
                    if t == -1:
                        rows.append(child.ravel())
                        rhs.append(w)
                    else:
                        rows.append((child - w * parent).ravel())
                        rhs.append(0.0)
                for b in range(cpn[j], cpn[j + 1]):
                    w = cn_child[b] / cn_par[j]
                    child = block(lm_par[i], lm_par[i + 1], ln_child[b], ln_child[b + 1])
                    if t == -1:
                        rows.append(child.ravel())
                        rhs.append(w)
                    else:
                        rows.append((child - w * parent).ravel())
                        rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def bicausal_lp_oracle(mu: PathMeasureTree, nu: PathMeasureTree, p: float = 1.0, *, max_pairs: int = DEFAULT_ORACLE_CAP) -> float:
    """Adapted Wasserstein distance by a direct LP over bicausal couplings (dense simplex)."""
    _check_pair(mu, nu, p)
    n_vars = mu.level_size(mu.T - 1) * nu.level_size(nu.T - 1)
    if n_vars > max_pairs:
        raise BudgetExceeded(f"{n_vars} leaf pairs exceed the oracle cap of {max_pairs}")
    C, _, _ = _path_cost(mu, nu, p)
    A, b = bicausal_constraints(mu, nu)
    res = simplex_solve(C.ravel(), A, b)
    obj = max(res.fun, 0.0)
    return obj if p == 1 else obj ** (1.0 / p)
