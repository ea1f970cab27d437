"""Brute-force reference solvers used by the tests."""
from __future__ import annotations

import itertools

import numpy as np


def isotonic_bruteforce(y):
    """Best nondecreasing fit by trying every split into consecutive blocks."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    best, best_f = np.inf, None
    for cuts in itertools.product((0, 1), repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        f = np.concatenate([np.full(b - a, y[a:b].mean()) for a, b in zip(bounds, bounds[1:])])
        if np.all(np.diff(f) >= -1e-12):
            sse = float(np.sum((f - y) ** 2))
            if sse < best:
                best, best_f = sse, f
    return best_f


def curvature_bruteforce(xs, g, C):
    """min ||f - g|| s.t. C f <= 0 by trying every active set of rows as
    equalities and keeping the best feasible projection."""
    g = np.asarray(g, dtype=float)
    m = len(C)
    best, best_f = np.inf, None
    for k in range(m + 1):
        for rows in itertools.combinations(range(m), k):
            if rows:
                A = C[list(rows)]
                # projection of g onto {A f = 0}
                f = g - A.T @ np.linalg.lstsq(A @ A.T, A @ g, rcond=None)[0]
            else:
                f = g.copy()
            if np.all(C @ f <= 1e-10):
                sse = float(np.sum((f - g) ** 2))
                if sse < best - 1e-14:
                    best, best_f = sse, f
    return best_f


def monotone_max_distance(lower, upper, centre):
    """max sum (f_i - c_i)^2 over nondecreasing f with lower <= f <= upper.

    The maximum of a convex function sits at a vertex, and every vertex takes
    its values among the bounds, so a DP over that finite value set is exact.
    """
    vals = np.unique(np.concatenate([lower, upper]))
    n = len(centre)
    neg = -np.inf
    best = np.where((vals >= lower[0] - 1e-12) & (vals <= upper[0] + 1e-12), (vals - centre[0]) ** 2, neg)
    for i in range(1, n):
        run = np.maximum.accumulate(best)  # best over values <= v
        ok = (vals >= lower[i] - 1e-12) & (vals <= upper[i] + 1e-12)
        best = np.where(ok, run + (vals - centre[i]) ** 2, neg)
    return float(best.max())


def random_admissible_set(rng, n, cls, radius=None):
    """Admissible set around noisy anchors of a random member of ``cls``."""
    from aer.error_estimation import AdmissibleSet

    xs = np.sort(rng.uniform(0, 1, n)) + 0.1 * np.arange(n)
    if cls == "monotone":
        base = np.sort(rng.normal(size=n))
    elif cls == "concave":
        base = -(xs - xs.mean()) ** 2 * rng.uniform(0.5, 3)
    elif cls == "convex":
        base = (xs - xs.mean()) ** 2 * rng.uniform(0.5, 3)
    else:
        base = rng.normal(size=n)
    r = rng.uniform(0.1, 0.6) if radius is None else radius
    # noise below r/2 keeps the base function admissible
    anchors = base + 0.5 * r * rng.uniform(-1, 1, n)
    return AdmissibleSet(cls, xs, anchors, r, float(anchors.min()) - 3 * r, float(anchors.max()) + r)
