"""Shape-constrained least squares: isotonic and concave/convex projections."""
from __future__ import annotations

import numpy as np

from .exceptions import NonUniformGrid


def pava(y, weights=None) -> np.ndarray:
    """Euclidean projection of ``y`` onto nondecreasing vectors (pool adjacent violators)."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    means: list[float] = []
    wsum: list[float] = []
    counts: list[int] = []
    for i in range(n):
        means.append(y[i])
        wsum.append(w[i])
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), wsum.pop(), counts.pop()
            m1, w1, c1 = means.pop(), wsum.pop(), counts.pop()
            wt = w1 + w2
            means.append((w1 * m1 + w2 * m2) / wt)
            wsum.append(wt)
            counts.append(c1 + c2)
    return np.repeat(means, counts)


def second_difference_matrix(xs) -> np.ndarray:
    """Rows give the change of slope at each interior node.

    Row i (node i+1) is (f_{i+2}-f_{i+1})/h_{i+1} - (f_{i+1}-f_i)/h_i, which on a
    uniform grid is the second difference f_i - 2 f_{i+1} + f_{i+2} divided by h.
    """
    xs = np.asarray(xs, dtype=float)
    h = np.diff(xs)
    if np.any(h <= 0):
        raise NonUniformGrid("grid nodes must be strictly increasing")
    n = len(xs)
    D = np.zeros((max(n - 2, 0), n))
    for i in range(n - 2):
        D[i, i] = 1.0 / h[i]
        D[i, i + 1] = -1.0 / h[i] - 1.0 / h[i + 1]
        D[i, i + 2] = 1.0 / h[i + 1]
    return D


def nnls_active_set(A, b, tol: float = 1e-12, max_iter: int | None = None):
    """min ||A x - b|| subject to x >= 0 (Lawson-Hanson active set)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    max_iter = max_iter or 3 * n + 10
    scale = max(1.0, np.abs(A).max() * max(1.0, np.abs(b).max()))
    grad = A.T @ (b - A @ x)
    it = 0
    while np.any(~passive) and grad[~passive].max() > tol * scale:
        j = np.flatnonzero(~passive)[np.argmax(grad[~passive])]
        passive[j] = True
        while True:
            it += 1
            if it > max_iter:
                raise RuntimeError("active-set iterations exhausted")
            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if np.all(z[passive] > 0):
                x = z
                break
            neg = passive & (z <= 0)
            alpha = np.min(x[neg] / (x[neg] - z[neg]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
        grad = A.T @ (b - A @ x)
    return x


def fit_curvature(xs, g, sign: int = -1):
    """Least-squares fit of ``g`` with sign(curvature) fixed.

    sign = -1: concave (slopes nonincreasing); sign = +1: convex.
    Solved through the dual nonnegative least squares problem: with
    D the slope-change matrix, f = g - s D^T lam, lam >= 0.
    Returns (f, lam).
    """
    xs = np.asarray(xs, dtype=float)
    g = np.asarray(g, dtype=float)
    if len(xs) != len(g):
        raise ValueError("xs and g must have the same length")
    if len(g) < 3:
        return g.copy(), np.zeros(0)
    D = second_difference_matrix(xs)
    # concave: D f <= 0  ->  f = g - D^T lam ;  convex: -D f <= 0 -> f = g + D^T lam
    C = D if sign < 0 else -D
    lam = nnls_active_set(C.T, g)
    return g - C.T @ lam, lam


def kkt_residual(xs, g, f, lam, sign: int = -1) -> dict:
    D = second_difference_matrix(xs)
    C = D if sign < 0 else -D
    cf = C @ f
    return {
        "stationarity": float(np.abs(f - g + C.T @ lam).max()) if len(lam) else float(np.abs(f - g).max()),
        "primal": float(max(cf.max(), 0.0)) if len(cf) else 0.0,
        "dual": float(max(-lam.min(), 0.0)) if len(lam) else 0.0,
        "complementarity": float(np.abs(lam * cf).max()) if len(lam) else 0.0,
    }
