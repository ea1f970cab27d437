import numpy as np
import pytest
from scipy.optimize import linprog

from aer.exceptions import InfeasibleSet, UnboundedLP
from aer.lp import enumerate_vertices_bruteforce, enumerate_vertices_graph, minimise_linear, simplex


def test_simplex_matches_linprog(rng):
    for _ in range(200):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        A = np.vstack([A, np.ones((1, n))])  # keeps it bounded
        b = np.append(b, 5.0)
        c = rng.normal(size=n)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
        if ref.status == 2:
            with pytest.raises(InfeasibleSet):
                simplex(c, A, b)
            continue
        res = simplex(c, A, b)
        assert res.objective == pytest.approx(ref.fun, abs=1e-8)
        assert res.duality_gap < 1e-8
        assert np.all(res.duals >= -1e-10)
        assert np.all(A @ res.x <= b + 1e-9)


def test_unbounded():
    with pytest.raises(UnboundedLP):
        simplex([-1.0, 0.0], [[0.0, 1.0]], [1.0])


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule; Bland's rule terminates
    c = np.array([-0.75, 150, -0.02, 6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0, 0, 1.0])
    res = simplex(c, A, b)
    assert res.objective == pytest.approx(-0.05)


def test_vertex_enumerations_agree(rng):
    for _ in range(20):
        n = int(rng.integers(2, 4))
        lo = rng.uniform(-1, 0, n)
        hi = lo + rng.uniform(0.5, 2, n)
        S = np.zeros((n - 1, n))
        S[np.arange(n - 1), np.arange(n - 1)] = 1.0
        S[np.arange(n - 1), np.arange(1, n)] = -1.0
        G = np.vstack([S, np.eye(n), -np.eye(n)])
        h = np.concatenate([np.zeros(n - 1), hi, -lo])
        start = minimise_linear(np.ones(n), np.vstack([S, np.eye(n)]), np.concatenate([np.zeros(n - 1), hi]), lo).x
        a = enumerate_vertices_bruteforce(G, h)
        b = enumerate_vertices_graph(G, h, start)
        assert len(a) == len(b)
        for v in a:
            assert np.min(np.linalg.norm(b - v, axis=1)) < 1e-8
