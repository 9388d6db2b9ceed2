"""Dense two-phase tableau simplex for small equality-form LPs.

    minimise c @ x  subject to  A @ x = b,  x >= 0

Pricing is Dantzig (most negative reduced cost, lowest index on ties) and
switches to Bland's rule after a run of degenerate pivots, which rules out
cycling. Redundant equality rows are detected at the end of phase one and
dropped. Only meant for verification-scale problems (a few thousand
columns at most).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPError", "InfeasibleError", "UnboundedError", "LPResult", "simplex_solve"]

DEGENERATE_SWITCH = 50


class LPError(RuntimeError):
    pass


class InfeasibleError(LPError):
    "Raised when the equality system has no nonnegative solution."


class UnboundedError(LPError):
    "Raised when the objective is unbounded below."


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    iterations: int
    basis: np.ndarray


class _Tableau:
    def __init__(self, tab: np.ndarray, basis: np.ndarray, tol: float):
        self.tab = tab
        self.basis = basis
        self.tol = tol
        self.iterations = 0

    def pivot(self, r: int, k: int) -> None:
        tab = self.tab
        tab[r] /= tab[r, k]
        col = tab[:, k].copy()
        col[r] = 0.0
        tab -= np.outer(col, tab[r])
        tab[:, k] = 0.0
        tab[r, k] = 1.0
        self.basis[r] = k
        self.iterations += 1

    def run(self, allowed: np.ndarray, max_iter: int) -> None:
        """Iterate on the objective in the last row over columns where ``allowed``."""
        tab, tol = self.tab, self.tol
        degenerate_run = 0
        while True:
            if self.iterations >= max_iter:
                raise LPError(f"simplex did not converge in {max_iter} pivots")
            red = tab[-1, :-1]
            cand = np.flatnonzero(allowed & (red < -tol))
            if cand.size == 0:
                return
            bland = degenerate_run >= DEGENERATE_SWITCH
            k = cand[0] if bland else cand[np.argmin(red[cand])]
            col = tab[:-1, k]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                raise UnboundedError("objective unbounded below")
            ratios = tab[rows, -1] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + tol * max(1.0, abs(best))]
            r = tied[np.argmin(self.basis[tied])]
            degenerate_run = degenerate_run + 1 if tab[r, -1] <= tol else 0
            self.pivot(r, k)


def simplex_solve(c, A, b, *, tol: float = 1e-10, max_iter: int | None = None) -> LPResult:
    c = np.asarray(c, dtype=np.float64)
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # phase one: artificial columns n..n+m-1
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n] = -A.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    tb = _Tableau(tab, basis, tol)
    allowed = np.ones(n + m, dtype=bool)
    tb.run(allowed, max_iter)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -tb.tab[-1, -1] > 1e-8 * scale:
        raise InfeasibleError(f"infeasible LP (phase-one residual {-tb.tab[-1, -1]:.3g})")

    # drive leftover artificials out of the basis, dropping redundant rows
    keep = np.ones(m + 1, dtype=bool)
    for r in range(m):
        if tb.basis[r] >= n:
            row = tb.tab[r, :n]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size:
                tb.pivot(r, nz[0])
            else:
                keep[r] = False
    tab = tb.tab[keep]
    basis = tb.basis[keep[:-1]]
    tab = np.delete(tab, np.s_[n : n + m], axis=1)

    # phase two
    tab[-1, :] = 0.0
    tab[-1, :n] = c
    for r, k in enumerate(basis):
        if tab[-1, k] != 0.0:
            tab[-1] -= tab[-1, k] * tab[r]
    tb2 = _Tableau(tab, basis, tol)
    tb2.iterations = tb.iterations
    tb2.run(np.ones(n, dtype=bool), max_iter)

    x = np.zeros(n)
    x[tb2.basis] = tb2.tab[:-1, -1]
    x[x < 0] = 0.0
    return LPResult(x=x, fun=float(c @ x), iterations=tb2.iterations, basis=tb2.basis.copy())
