"""A posteriori error bounds for a reconstructed source.

The admissible set is the polytope of node vectors f that satisfy the shape
constraint, the box C_l <= f_i <= C_u, and |f_i - a_i| <= r around the
anchors a_i = k u_i w_i.  Coordinate extremes over this polytope give node
brackets, which are extended to pointwise envelopes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .asymptotics import PhysicalSetup
from .exceptions import InfeasibleEstimate, InfeasibleSet
from .lp import enumerate_vertices_graph, minimise_linear
from .shapefit import second_difference_matrix

EXACT_MAX_NODES = 12
FEAS_TOL = 1e-8


def noise_constant(u, w, k: float, delta: float, model: str = "product") -> float:
    """Data-error constant C with |k u w - k u^d w^d| <= C delta.

    ``product``: exact bound for multiplicative noise on both factors,
    k max|u^d w^d| (2 + delta) / (1 - delta)^2.
    ``sup``: 2 (max|u| + max|w|), the cruder sup-norm constant.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if model == "product":
        if delta >= 1:
            raise ValueError("delta must be below 1")
        return float(k * np.max(np.abs(u * w)) * (2.0 + delta) / (1.0 - delta) ** 2)
    if model == "sup":
        return float(2.0 * (np.max(np.abs(u)) + np.max(np.abs(w))))
    raise ValueError(f"unknown noise model {model!r}")


def calibrate_c1(setup: PhysicalSetup, xs, anchors_noiseless, f_true) -> float:
    """max_i |f*(x_i) - a_i| / (mu |ln mu|) on noiseless anchors."""
    xs = np.asarray(xs, dtype=float)
    gap = np.abs(np.asarray(f_true(xs), dtype=float) - np.asarray(anchors_noiseless, dtype=float))
    return float(gap.max() / setup.mu_log_mu)


@dataclass(frozen=True, eq=False)
class AdmissibleSet:
    constraint_class: str
    xs: np.ndarray
    anchors: np.ndarray
    radius: float
    c_lower: float
    c_upper: float

    def __post_init__(self):
        if self.constraint_class not in ("monotone", "concave", "convex", "none"):
            raise ValueError(f"unknown constraint class {self.constraint_class!r}")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if len(self.xs) != len(self.anchors):
            raise ValueError("xs and anchors differ in length")
        if np.any(self.lower > self.upper + FEAS_TOL):
            raise InfeasibleSet("data radius and box bounds do not intersect")

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def lower(self) -> np.ndarray:
        return np.maximum(self.c_lower, self.anchors - self.radius)

    @property
    def upper(self) -> np.ndarray:
        return np.minimum(self.c_upper, self.anchors + self.radius)

    def shape_matrix(self) -> np.ndarray:
        """Rows S with S f <= 0 encoding the shape class."""
        n = self.n
        if self.constraint_class == "monotone":
            S = np.zeros((max(n - 1, 0), n))
            idx = np.arange(n - 1)
            S[idx, idx] = 1.0
            S[idx, idx + 1] = -1.0
            return S
        if self.constraint_class in ("concave", "convex"):
            D = second_difference_matrix(self.xs)
            return D if self.constraint_class == "concave" else -D
        return np.zeros((0, n))

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """(G, h) with the polytope written as G f <= h."""
        n = self.n
        S = self.shape_matrix()
        G = np.vstack([S, np.eye(n), -np.eye(n)])
        h = np.concatenate([np.zeros(len(S)), self.upper, -self.lower])
        return G, h

    def contains(self, f, tol: float = FEAS_TOL) -> bool:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n,):
            return False
        G, h = self.inequalities()
        scale = max(1.0, float(np.abs(h).max()))
        return bool(np.all(G @ f <= h + tol * scale))


def build_admissible_set(
    setup: PhysicalSetup,
    xs,
    anchors,
    u,
    w,
    delta: float,
    constraint_class: str = "monotone",
    c1: float = 0.0,
    c_lower: float | None = None,
    smoothed: bool = False,
    u_sup: float | None = None,
    w_sup: float | None = None,
) -> AdmissibleSet:
    """Radius r = C delta + c1 mu |ln mu|.

    With observed w, C is the product bound of ``noise_constant``.  When w
    comes from smoothing no pointwise bound exists and C is the sup constant
    2 (max|u| + max|u_x|) taken over the whole record (``u_sup``, ``w_sup``,
    transition layer included).  The box top is that sup constant; the bottom
    defaults to min(anchors) - 3 r.
    """
    anchors = np.asarray(anchors, dtype=float)
    u_sup = float(np.max(np.abs(u))) if u_sup is None else u_sup
    w_sup = float(np.max(np.abs(w))) if w_sup is None else w_sup
    sup_const = 2.0 * (u_sup + w_sup)
    c_noise = sup_const if smoothed else noise_constant(u, w, setup.k, delta, "product")
    radius = c_noise * delta + c1 * setup.mu_log_mu
    c_upper = max(sup_const, float(anchors.max()) + radius)
    if c_lower is None:
        c_lower = float(anchors.min()) - 3.0 * radius
    return AdmissibleSet(constraint_class, np.asarray(xs, dtype=float), anchors, radius, c_lower, c_upper)


# ---------------------------------------------------------------------------
# coordinate extremes


@dataclass(frozen=True, eq=False)
class Extremes:
    low: np.ndarray
    up: np.ndarray
    max_duality_gap: float = 0.0


def coordinate_extremes(aset: AdmissibleSet) -> Extremes:
    """Node-wise min and max of f_i over the admissible polytope."""
    lower, upper = aset.lower, aset.upper
    if aset.constraint_class == "none":
        return Extremes(lower.copy(), upper.copy())
    n = aset.n
    S = aset.shape_matrix()
    G = np.vstack([S, np.eye(n)])
    h = np.concatenate([np.zeros(len(S)), upper])
    low = np.empty(n)
    up = np.empty(n)
    gap = 0.0
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        lo_res = minimise_linear(c, G, h, lower)
        hi_res = minimise_linear(-c, G, h, lower)
        low[i] = lo_res.x[i]
        up[i] = hi_res.x[i]
        gap = max(gap, lo_res.duality_gap, hi_res.duality_gap)
    return Extremes(low, up, gap)


# ---------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True, eq=False)
class Envelope:
    xs: np.ndarray
    node_low: np.ndarray
    node_up: np.ndarray
    kind: str
    degenerate: tuple = field(default_factory=tuple)

    def f_low(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "monotone":
            j = np.clip(np.searchsorted(self.xs, x, side="left") - 1, 0, len(self.xs) - 1)
            return self.node_low[j]
        if self.kind == "concave":
            return np.interp(x, self.xs, self.node_low)
        if self.kind == "convex":
            return -_concave_upper(self.xs, -self.node_up, -self.node_low, x)[0]
        return np.interp(x, self.xs, self.node_low)

    def f_up(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "monotone":
            j = np.clip(np.searchsorted(self.xs, x, side="right"), 0, len(self.xs) - 1)
            return self.node_up[j]
        if self.kind == "concave":
            return _concave_upper(self.xs, self.node_low, self.node_up, x)[0]
        if self.kind == "convex":
            return np.interp(x, self.xs, self.node_up)
        return np.interp(x, self.xs, self.node_up)


def monotone_envelope(extremes: Extremes, xs) -> Envelope:
    """Step envelopes: f_low on (x_i, x_{i+1}] is low_i, f_up on
    [x_i, x_{i+1}) is up_{i+1}."""
    return Envelope(np.asarray(xs, dtype=float), extremes.low, extremes.up, "monotone")


def _line(x1, y1, x2, y2, x):
    return y1 + (y2 - y1) * (x - x1) / (x2 - x1)


def _concave_upper(xs, low, up, x):
    """Upper envelope for concave members.

    On an interior interval [x_i, x_{i+1}] the member stays below the
    extension of the line through (x_{i-1}, low_{i-1}), (x_i, up_i) and below
    the extension of the line through (x_{i+1}, up_{i+1}), (x_{i+2}, low_{i+2});
    the envelope is the smaller of the two, which switches lines at their
    intersection.  The two end intervals use the chord of the up values.
    Returns (values, indices of intervals whose lines are parallel).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = len(xs)
    out = np.interp(x, xs, up)
    degenerate = []
    j = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, n - 2)
    for i in range(1, n - 2):
        sel = j == i
        sa = (up[i] - low[i - 1]) / (xs[i] - xs[i - 1])
        sb = (low[i + 2] - up[i + 1]) / (xs[i + 2] - xs[i + 1])
        if abs(sa - sb) <= 1e-14 * max(1.0, abs(sa), abs(sb)):
            degenerate.append(i)
            continue
        if not np.any(sel):
            continue
        la = _line(xs[i - 1], low[i - 1], xs[i], up[i], x[sel])
        lb = _line(xs[i + 1], up[i + 1], xs[i + 2], low[i + 2], x[sel])
        out[sel] = np.minimum(la, lb)
    return out, tuple(degenerate)


def breakpoints(xs, low, up) -> np.ndarray:
    """Intersection abscissae of the two upper lines on interior intervals
    (NaN where the lines are parallel)."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    out = np.full(max(n - 3, 0), np.nan)
    for i in range(1, n - 2):
        sa = (up[i] - low[i - 1]) / (xs[i] - xs[i - 1])
        sb = (low[i + 2] - up[i + 1]) / (xs[i + 2] - xs[i + 1])
        if abs(sa - sb) > 1e-14 * max(1.0, abs(sa), abs(sb)):
            out[i - 1] = (up[i + 1] - up[i] + sa * xs[i] - sb * xs[i + 1]) / (sa - sb)
    return out


def concave_envelope(extremes: Extremes, xs) -> Envelope:
    xs = np.asarray(xs, dtype=float)
    _, degenerate = _concave_upper(xs, extremes.low, extremes.up, xs)
    return Envelope(xs, extremes.low, extremes.up, "concave", degenerate)


def convex_envelope(extremes: Extremes, xs) -> Envelope:
    """Mirror image of the concave construction: f_up is the chord of the
    up values and f_low the larger of the two extension lines."""
    xs = np.asarray(xs, dtype=float)
    _, degenerate = _concave_upper(xs, -extremes.up, -extremes.low, xs)
    return Envelope(xs, extremes.low, extremes.up, "convex", degenerate)


def build_envelope(extremes: Extremes, xs, constraint_class: str) -> Envelope:
    if constraint_class == "monotone":
        return monotone_envelope(extremes, xs)
    if constraint_class == "concave":
        return concave_envelope(extremes, xs)
    if constraint_class == "convex":
        return convex_envelope(extremes, xs)
    return Envelope(np.asarray(xs, dtype=float), extremes.low, extremes.up, "none")


def pointwise_delta2(envelope: Envelope, xs_dense) -> np.ndarray:
    """Delta_2(x) = f_up(x) - f_low(x)."""
    return envelope.f_up(xs_dense) - envelope.f_low(xs_dense)


# ---------------------------------------------------------------------------
# relative a posteriori error


def aposteriori_delta1(
    aset: AdmissibleSet,
    f_delta,
    mode: str = "relaxation",
    extremes: Extremes | None = None,
    check: bool = True,
) -> tuple[float, float]:
    """(delta1_bar, delta1): max ||f - f^d||^2 over the set and its square
    root relative to ||f^d||.

    ``relaxation`` bounds the maximum through the node brackets, which is an
    upper bound since the box of brackets contains the set; ``exact``
    enumerates the vertices (n <= 12), where a convex function peaks.
    """
    f_delta = np.asarray(f_delta, dtype=float)
    if check and not aset.contains(f_delta):
        raise InfeasibleEstimate("the reconstruction lies outside the admissible set")
    norm = float(np.linalg.norm(f_delta))
    if mode == "relaxation":
        ext = extremes or coordinate_extremes(aset)
        bar = float(np.sum(np.maximum((ext.up - f_delta) ** 2, (ext.low - f_delta) ** 2)))
    elif mode == "exact":
        bar = float(np.max(np.sum((polytope_vertices(aset) - f_delta) ** 2, axis=1)))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    delta1 = np.sqrt(bar) / norm if norm > 0 else (0.0 if bar == 0 else np.inf)
    return bar, float(delta1)


def polytope_vertices(aset: AdmissibleSet) -> np.ndarray:
    if aset.n > EXACT_MAX_NODES:
        raise ValueError(f"exact mode supports at most {EXACT_MAX_NODES} nodes")
    G, h = aset.inequalities()
    if aset.constraint_class == "none":
        grid = np.array(np.meshgrid(*zip(aset.lower, aset.upper), indexing="ij"))
        return grid.reshape(aset.n, -1).T
    # a vertex to start from: lexicographic-ish minimiser of a generic cost
    n = aset.n
    S = aset.shape_matrix()
    Gs = np.vstack([S, np.eye(n)])
    hs = np.concatenate([np.zeros(len(S)), aset.upper])
    start = minimise_linear(1.0 + np.arange(n) / (7.0 * n), Gs, hs, aset.lower).x
    return enumerate_vertices_graph(G, h, start)


@dataclass(frozen=True, eq=False)
class ErrorReport:
    xs: np.ndarray
    f_delta: np.ndarray
    envelope: Envelope
    delta1: float
    delta1_bar: float
    feasible: bool
    radius: float
    admissible: AdmissibleSet

    @property
    def delta2(self) -> np.ndarray:
        return pointwise_delta2(self.envelope, self.xs)

    def table(self, x=None) -> dict:
        """Columns of the report sampled at ``x`` (default: the fit nodes)."""
        x = self.xs if x is None else np.asarray(x, dtype=float)
        return {
            "x": x,
            "f_delta": np.interp(x, self.xs, self.f_delta),
            "f_low": self.envelope.f_low(x),
            "f_up": self.envelope.f_up(x),
            "delta2": pointwise_delta2(self.envelope, x),
        }

    def brackets(self, values, tol: float = 1e-9) -> bool:
        """True when node values lie in [low_i, up_i]."""
        values = np.asarray(values, dtype=float)
        e = self.envelope
        scale = tol * max(1.0, float(np.abs(e.node_up).max()))
        return bool(np.all(values >= e.node_low - scale) and np.all(values <= e.node_up + scale))


def error_report(aset: AdmissibleSet, f_delta, mode: str = "relaxation") -> ErrorReport:
    """Extremes, envelope and Delta_1 for a fitted node vector.

    An estimate outside the set is reported with ``feasible=False`` and the
    relaxation bound, which needs only the node brackets.
    """
    f_delta = np.asarray(f_delta, dtype=float)
    ext = coordinate_extremes(aset)
    env = build_envelope(ext, aset.xs, aset.constraint_class)
    feasible = aset.contains(f_delta)
    if feasible or mode == "relaxation":
        bar, d1 = aposteriori_delta1(aset, f_delta, mode if feasible else "relaxation", ext, check=False)
    else:
        bar, d1 = aposteriori_delta1(aset, f_delta, "relaxation", ext, check=False)
    return ErrorReport(aset.xs, f_delta, env, d1, bar, feasible, aset.radius, aset)
