"""Dense two-phase simplex with Bland's rule, plus vertex enumeration.

Problem form:  minimise c.y  subject to  A y <= b,  y >= 0.
Sizes here are small (tens of variables), so a dense tableau is fine and
Bland's rule rules out cycling on the degenerate polytopes that box plus
shape constraints produce.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleSet, UnboundedLP

PIVOT_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class LPResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray  # lambda >= 0 for the rows of A
    dual_objective: float
    iterations: int

    @property
    def duality_gap(self) -> float:
        return abs(self.objective - self.dual_objective)


def _pivot(T, row, col):
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run_simplex(T, basis, n_cols, max_iter):
    """Minimise the objective held in the last row of T (reduced costs)
    over the first ``n_cols`` columns; returns the iteration count."""
    it = 0
    while True:
        red = T[-1, :n_cols]
        cand = np.flatnonzero(red < -PIVOT_TOL)
        if len(cand) == 0:
            return it
        col = int(cand[0])  # Bland: smallest index
        colv = T[:-1, col]
        pos = np.flatnonzero(colv > PIVOT_TOL)
        if len(pos) == 0:
            raise UnboundedLP("objective is unbounded below")
        ratios = T[pos, -1] / colv[pos]
        best = ratios.min()
        ties = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))  # Bland tie-break
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise RuntimeError("simplex iteration limit reached")


def simplex(c, A, b, max_iter: int = 50000) -> LPResult:
    """Solve min c.y s.t. A y <= b, y >= 0 exactly up to round-off."""
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    # columns: y (n) | slack (m) | artificial (rows with b < 0)
    art_rows = np.flatnonzero(sign < 0)
    n_art = len(art_rows)
    n_tot = n + m + n_art
    T = np.zeros((m + 1, n_tot + 1))
    T[:m, :n] = sign[:, None] * A
    T[:m, n:n + m] = np.diag(sign)
    for k, r in enumerate(art_rows):
        T[r, n + m + k] = 1.0
    T[:m, -1] = sign * b
    basis = np.array([n + i for i in range(m)])
    for k, r in enumerate(art_rows):
        basis[r] = n + m + k

    it = 0
    if n_art:
        # phase 1: minimise the sum of artificials
        T[-1, :] = 0.0
        T[-1, n + m:n + m + n_art] = 1.0
        for r in art_rows:
            T[-1] -= T[r]
        it += _run_simplex(T, basis, n_tot, max_iter)
        if -T[-1, -1] > 1e-9 * max(1.0, np.abs(b).max()):
            raise InfeasibleSet(f"phase 1 residual {-T[-1, -1]:.3g}")
        # drive artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n + m:
                cols = np.flatnonzero(np.abs(T[r, :n + m]) > 1e-9)
                if len(cols):
                    _pivot(T, r, int(cols[0]))
                    basis[r] = int(cols[0])
                else:
                    keep[r] = False
        if not keep.all():
            T = np.vstack([T[:-1][keep], T[-1:]])
            basis = basis[keep]
        T = np.delete(T, np.s_[n + m:n + m + n_art], axis=1)
    n_std = n + m
    cz = np.concatenate([c, np.zeros(m)])
    T[-1, :] = 0.0
    T[-1, :n_std] = cz
    for r, bcol in enumerate(basis):
        T[-1] -= cz[bcol] * T[r]
    it += _run_simplex(T, basis, n_std, max_iter)

    z = np.zeros(n_std)
    z[basis] = T[:-1, -1]
    x = z[:n]
    obj = float(c @ x)
    # duals from B^T pi = c_B on the sign-adjusted equality system
    M = np.hstack([sign[:, None] * A, np.diag(sign)])
    rows_kept = np.arange(m) if len(basis) == m else None
    if rows_kept is not None:
        B = M[:, basis]
        pi = np.linalg.solve(B.T, cz[basis])
    else:  # redundant rows were dropped; least-squares duals
        pi = np.linalg.lstsq(M[:, basis].T, cz[basis], rcond=None)[0]
    lam = -sign * pi
    lam = np.where(np.abs(lam) < 1e-12, 0.0, lam)
    return LPResult(x, obj, lam, float(-b @ lam), it)


# ---------------------------------------------------------------------------
# polytope {f : G f <= h} helpers


def minimise_linear(c, G, h, lower: np.ndarray) -> LPResult:
    """min c.f over {G f <= h, f >= lower} via the shift y = f - lower."""
    lower = np.asarray(lower, dtype=float)
    res = simplex(c, G, h - G @ lower)
    x = res.x + lower
    return LPResult(x, float(c @ x), res.duals, res.dual_objective + float(c @ lower), res.iterations)


def enumerate_vertices_bruteforce(G, h, tol: float = 1e-9) -> np.ndarray:
    """All vertices of {G f <= h} by trying every set of n active rows."""
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    m, n = G.shape
    found = []
    for rows in itertools.combinations(range(m), n):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, h[list(rows)])
        if np.all(G @ v <= h + tol * max(1.0, np.abs(h).max())):
            if not any(np.allclose(v, w, atol=1e-9) for w in found):
                found.append(v)
    return np.array(found).reshape(-1, n)


def enumerate_vertices_graph(G, h, start, tol: float = 1e-9, limit: int = 200000) -> np.ndarray:
    """Vertices of the bounded polytope {G f <= h} by walking its edges
    from the vertex ``start``."""
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    m, n = G.shape
    scale = tol * max(1.0, np.abs(h).max())
    norms = np.linalg.norm(G, axis=1)

    def key(v):
        return tuple(np.round(v / (1e3 * scale), 0).astype(np.int64))

    seen = {key(start): np.asarray(start, float)}
    queue = [np.asarray(start, float)]
    while queue:
        v = queue.pop()
        slack = h - G @ v
        active = np.flatnonzero(slack <= scale * np.maximum(1.0, norms))
        if len(active) == n:
            # simple vertex: edge j leaves row j, i.e. G_A d = -e_j
            try:
                D = -np.linalg.inv(G[active])
            except np.linalg.LinAlgError:
                D = None
            if D is not None:
                GD = G @ D
                GD[active] = 0.0
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratios = np.where(GD > 1e-12, slack[:, None] / GD, np.inf)
                steps = ratios.min(axis=0)
                for j in np.flatnonzero(np.isfinite(steps) & (steps > scale)):
                    w = v + steps[j] * D[:, j]
                    k = key(w)
                    if k not in seen:
                        seen[k] = w
                        queue.append(w)
                        if len(seen) > limit:
                            raise RuntimeError("vertex limit exceeded")
                continue
        for rows in itertools.combinations(active, n - 1):
            sub = G[list(rows)]
            if n == 1:
                dirs = [np.ones(1)]
            else:
                _, s, vt = np.linalg.svd(sub)
                if s[-1] < 1e-10 * max(1.0, s[0]):
                    continue
                dirs = [vt[-1]]
            for d0 in dirs:
                for d in (d0, -d0):
                    gd = G @ d
                    # stay feasible for the other active rows
                    others = np.setdiff1d(active, rows)
                    if np.any(gd[others] > 1e-10):
                        continue
                    pos = gd > 1e-12
                    if not np.any(pos):
                        continue
                    step = np.min(slack[pos] / gd[pos])
                    if step <= scale:
                        continue
                    w = v + step * d
                    k = key(w)
                    if k not in seen:
                        seen[k] = w
                        queue.append(w)
                        if len(seen) > limit:
                            raise RuntimeError("vertex limit exceeded")
    return np.array(list(seen.values()))
