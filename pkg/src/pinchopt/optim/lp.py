"""Dense two-phase tableau simplex for small box-bounded LPs.

maximize c^T x  subject to  A x <= b,  lo <= x <= hi

Desk-scale only (tens of variables). Bland's rule is used for both the
entering and leaving choice so the method cannot cycle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, float).reshape(-1, n)
        self.b = np.asarray(self.b, float).ravel()
        self.lo = np.broadcast_to(np.asarray(self.lo, float), (n,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, float), (n,)).copy()
        if self.A.shape[0] != self.b.size:
            raise ValueError("A and b disagree on the number of constraints")
        if np.any(self.lo > self.hi):
            raise ValueError("lo must not exceed hi")
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise ValueError("box bounds must be finite")


@dataclass
class LpResult:
    x: np.ndarray | None
    status: str  # "optimal" | "infeasible" | "max-iterations"
    objective: float
    iterations: int


def _pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex(T, basis, allowed, tol, max_iter):
    """Maximize over the tableau in place. Returns (status, iterations)."""
    for it in range(max_iter):
        red = T[-1, :-1]
        enter = next((j for j in allowed if red[j] < -tol), None)
        if enter is None:
            return "optimal", it
        col = T[:-1, enter]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            return "unbounded", it
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        leave = min(ties, key=lambda i: basis[i])
        _pivot(T, leave, enter)
        basis[leave] = enter
    return "max-iterations", max_iter


def solve_lp(problem: LpProblem, tol: float = 1e-10, max_iter: int = 5000) -> LpResult:
    c, A, b, lo, hi = problem.c, problem.A, problem.b, problem.lo, problem.hi
    n = c.size
    # shift to y = x - lo in [0, hi - lo]; the upper box becomes ordinary rows
    rows = np.vstack([A, np.eye(n)])
    rhs = np.concatenate([b - A @ lo, hi - lo])
    m = rows.shape[0]

    flip = rhs < 0
    rows[flip] *= -1.0
    rhs = np.abs(rhs)
    n_art = int(flip.sum())
    n_cols = n + m + n_art
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :n] = rows
    T[:m, n:n + m] = np.eye(m)
    T[np.flatnonzero(flip), n + np.flatnonzero(flip)] = -1.0
    art_rows = np.flatnonzero(flip)
    T[art_rows, n + m + np.arange(n_art)] = 1.0
    T[:m, -1] = rhs
    basis = [n + i for i in range(m)]
    for k, i in enumerate(art_rows):
        basis[i] = n + m + k

    iters = 0
    scale = max(1.0, float(np.max(rhs, initial=0.0)))
    if n_art:
        T[-1, :] = -T[art_rows].sum(axis=0)
        T[-1, n + m:n + m + n_art] = 0.0
        status, it = _simplex(T, basis, range(n_cols), tol, max_iter)
        iters += it
        if status == "max-iterations":
            return LpResult(None, status, np.nan, iters)
        if T[-1, -1] < -1e-9 * scale:
            return LpResult(None, "infeasible", np.nan, iters)
        # push zero-level artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= n + m:
                cand = np.flatnonzero(np.abs(T[i, :n + m]) > tol)
                if cand.size == 0:
                    continue
                _pivot(T, i, int(cand[0]))
                basis[i] = int(cand[0])
            keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[i] for i in keep]
        T = np.delete(T, np.s_[n + m:n + m + n_art], axis=1)

    cost = np.zeros(n + m)
    cost[:n] = c
    T[-1, :] = 0.0
    T[-1, :n + m] = -cost
    for i, j in enumerate(basis):
        T[-1] += cost[j] * T[i]
    status, it = _simplex(T, basis, range(n + m), tol, max_iter)
    iters += it
    if status != "optimal":
        # unbounded cannot happen with finite boxes; surface anything odd
        return LpResult(None, status, np.nan, iters)

    y = np.zeros(n + m)
    for i, j in enumerate(basis):
        y[j] = T[i, -1]
    x = np.clip(y[:n] + lo, lo, hi)
    return LpResult(x, "optimal", float(c @ x), iters)
