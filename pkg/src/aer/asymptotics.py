"""Zero-order asymptotic solution of the Burgers-type autowave equation.

The model is

    mu u_xx - u_t = -k u u_x + f(x),   u(0,t) = u_left,  u(1,t) = u_right,

with a moving interior transition layer.  Away from the layer the solution
follows the reduced (mu = 0) branches phi_left / phi_right; the layer centre
x0(t) moves with the Rankine-Hugoniot speed of the two branches and the layer
itself is a logistic profile in the stretched variable xi = (x - x0(t)) / mu.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expit

from .exceptions import (
    DegenerateLayer,
    FrontExitedDomain,
    NonFiniteSource,
    NonrealRegularFunction,
    OutOfDomain,
    StepTooLarge,
)

DEFAULT_QUAD_NODES = 4096


@dataclass(frozen=True)
class PhysicalSetup:
    """Problem constants.  Assumption 1 is reported by `check_assumptions`,
    not enforced here, so that invalid setups can still be diagnosed."""

    mu: float
    k: float
    u_left: float
    u_right: float
    t_final: float
    x0_init: float

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if not self.k > 0.0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if not 0.0 < self.x0_init < 1.0:
            raise ValueError(f"x0_init must lie in (0, 1), got {self.x0_init}")

    @property
    def mu_log_mu(self) -> float:
        return self.mu * abs(np.log(self.mu))


# ---------------------------------------------------------------------------
# source function and its antiderivative


@dataclass(frozen=True, eq=False)
class SourceFunction:
    """f(x) on [0, 1] together with F(x) = int_0^x f on a dense uniform grid.

    F between nodes is a cubic Hermite interpolant that uses f as the slope,
    so F' = f holds exactly at every node.
    """

    func: Callable[[np.ndarray], np.ndarray]
    nodes: np.ndarray
    values: np.ndarray
    cumulative: np.ndarray
    pos_mass: float
    neg_mass: float
    _hermite: CubicHermiteSpline = field(repr=False)

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def F(self, x):
        """Antiderivative int_0^x f(s) ds."""
        return self._hermite(np.asarray(x, dtype=float))

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])


def _cumulative_simpson(y: np.ndarray, h: float) -> np.ndarray:
    """Running integral on a uniform grid with an even number of intervals.

    Even nodes use composite Simpson; odd nodes add the exact integral of the
    panel's interpolating parabola over its first half.
    """
    n = len(y) - 1
    out = np.zeros_like(y)
    f0, f1, f2 = y[0:-1:2], y[1::2], y[2::2]
    panels = h / 3.0 * (f0 + 4.0 * f1 + f2)
    out[2::2] = np.cumsum(panels)
    out[1::2] = out[0:-1:2] + h / 12.0 * (5.0 * f0 + 8.0 * f1 - f2)
    assert n % 2 == 0
    return out


def _simpson(y: np.ndarray, h: float) -> float:
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def _as_callable(f) -> Callable[[np.ndarray], np.ndarray]:
    if callable(f):
        def func(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
        return func
    # tabulated source: (xs, values), linear interpolation between samples
    xs, vals = (np.asarray(a, dtype=float) for a in f)
    if xs.ndim != 1 or xs.shape != vals.shape or len(xs) < 2:
        raise ValueError("tabulated source needs matching 1-D xs and values")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("tabulated source xs must be strictly increasing")
    return lambda x: np.interp(np.asarray(x, dtype=float), xs, vals)


def build_cumulative(f, n_quad: int = DEFAULT_QUAD_NODES) -> SourceFunction:
    """Tabulate f and its running integral.

    ``f`` is either a vectorised callable or a ``(xs, values)`` table.
    ``n_quad`` is the number of quadrature intervals (rounded up to even).
    """
    if n_quad < 64:
        raise ValueError("n_quad must be at least 64")
    n_quad += n_quad % 2
    func = _as_callable(f)
    nodes = np.linspace(0.0, 1.0, n_quad + 1)
    values = func(nodes)
    if not np.all(np.isfinite(values)):
        bad = nodes[~np.isfinite(values)][0]
        raise NonFiniteSource(f"source is not finite at x = {bad:.6g}")
    h = 1.0 / n_quad
    cumulative = _cumulative_simpson(values, h)
    pos_mass = _simpson(np.maximum(values, 0.0), h)
    neg_mass = -_simpson(np.minimum(values, 0.0), h)
    hermite = CubicHermiteSpline(nodes, cumulative, values)
    return SourceFunction(func, nodes, values, cumulative, pos_mass, neg_mass, hermite)


# ---------------------------------------------------------------------------
# regular (outer) functions


@dataclass(frozen=True, eq=False)
class RegularPair:
    """Closed-form solutions of the degenerate equation -k phi phi' + f = 0."""

    setup: PhysicalSetup
    source: SourceFunction

    def _left_radicand(self, x):
        return 2.0 / self.setup.k * self.source.F(x) + self.setup.u_left ** 2

    def _right_radicand(self, x):
        s = self.setup
        return s.u_right ** 2 - 2.0 / s.k * (self.source.total - self.source.F(x))

    def phi_left(self, x):
        return -np.sqrt(self._left_radicand(x))

    def phi_right(self, x):
        return np.sqrt(self._right_radicand(x))

    def dphi_left(self, x):
        return self.source(x) / (self.setup.k * self.phi_left(x))

    def dphi_right(self, x):
        return self.source(x) / (self.setup.k * self.phi_right(x))

    def p_left(self, x):
        """P^l = (phi_left - phi_right) / 2, negative under Assumptions 1-2."""
        return 0.5 * (self.phi_left(x) - self.phi_right(x))

    def front_speed(self, x):
        return -0.5 * self.setup.k * (self.phi_left(x) + self.phi_right(x))


def regular_functions(setup: PhysicalSetup, src: SourceFunction) -> RegularPair:
    pair = RegularPair(setup, src)
    left = pair._left_radicand(src.nodes)
    right = pair._right_radicand(src.nodes)
    if left.min() <= 0.0 or right.min() <= 0.0:
        which = "phi_left" if left.min() <= 0.0 else "phi_right"
        raise NonrealRegularFunction(
            f"radicand of {which} is not positive on [0, 1] (Assumption 2 violated)"
        )
    return pair


# ---------------------------------------------------------------------------
# front dynamics


@dataclass(frozen=True, eq=False)
class FrontPath:
    times: np.ndarray
    x0: np.ndarray
    v0: np.ndarray
    p_left: np.ndarray
    p_right: np.ndarray
    _interp: CubicHermiteSpline = field(repr=False)
    regular: RegularPair = field(repr=False)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
            raise OutOfDomain("time outside the integrated front path")
        return self._interp(np.clip(t, self.times[0], self.times[-1]))

    def amplitude(self, t):
        """P^l(x0(t)) at arbitrary t (negative)."""
        return self.regular.p_left(self.position(t))

    def velocity(self, t):
        return self.regular.front_speed(self.position(t))


def _rk4_step(rhs, x, dt):
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_front(
    setup: PhysicalSetup,
    reg: RegularPair,
    dt: float | None = None,
    margin: float | None = None,
    tol: float = 1e-9,
) -> FrontPath:
    """Integrate dx0/dt = -(k/2)(phi_left(x0) + phi_right(x0)) with classical RK4.

    Every step is checked against two half steps; a local discrepancy above
    ``tol`` raises StepTooLarge.  The front must stay inside
    [margin, 1 - margin], default margin 10 mu.
    """
    T = setup.t_final
    if dt is None:
        dt = T / 2000
    if dt <= 0:
        raise ValueError("dt must be positive")
    if margin is None:
        margin = 10.0 * setup.mu
    n_steps = max(1, int(np.ceil(T / dt - 1e-9)))
    dt = T / n_steps
    times = np.linspace(0.0, T, n_steps + 1)

    rhs = lambda x: float(reg.front_speed(x))  # noqa: E731
    lo, hi = margin, 1.0 - margin

    x = np.empty(n_steps + 1)
    x[0] = setup.x0_init
    if not lo <= x[0] <= hi:
        raise FrontExitedDomain(
            f"initial front x0 = {x[0]:.4g} outside [{lo:.4g}, {hi:.4g}] (Assumption 3)"
        )
    for j in range(n_steps):
        full = _rk4_step(rhs, x[j], dt)
        half = _rk4_step(rhs, _rk4_step(rhs, x[j], 0.5 * dt), 0.5 * dt)
        if abs(full - half) > tol:
            raise StepTooLarge(
                f"RK4 step-doubling error {abs(full - half):.2e} > {tol:.1e} at t = {times[j]:.4g}"
            )
        x[j + 1] = half
        if not lo <= x[j + 1] <= hi:
            raise FrontExitedDomain(
                f"front left [{lo:.4g}, {hi:.4g}] at t = {times[j + 1]:.4g} "
                f"(x0 = {x[j + 1]:.4g}; Assumption 3 violated)"
            )
    v = reg.front_speed(x)
    p_left = reg.p_left(x)
    interp = CubicHermiteSpline(times, x, v)
    return FrontPath(times, x, v, p_left, -p_left, interp, reg)


# ---------------------------------------------------------------------------
# transition layer


def layer_profile_q0(p_left, k: float, xi):
    """Q0 in the stretched variable; left branch for xi <= 0, right for xi > 0.

    Q0^{l,r} = -2 P^{l,r} / (exp(xi k P^{l,r}) + 1) with P^r = -P^l.  Written
    with the logistic function to stay finite for large |xi|.
    """
    xi = np.asarray(xi, dtype=float)
    amp = np.abs(p_left)
    z = xi * k * amp
    # left: -2 P^l / (e^{-z} + 1) = 2|P| expit(z);  right: -2|P| expit(-z)
    return np.where(xi <= 0.0, 2.0 * amp * expit(z), -2.0 * amp * expit(-z))


def layer_profile_q0_dxi(p_left, k: float, xi):
    xi = np.asarray(xi, dtype=float)
    amp = np.abs(p_left)
    s = expit(-np.abs(xi) * k * amp)
    # both branches share the same derivative form by symmetry
    return 2.0 * k * amp ** 2 * s * (1.0 - s)


@dataclass(frozen=True)
class LayerGeometry:
    x0: float
    width: float
    xi_left: float
    xi_right: float
    x_left: float
    x_right: float


def layer_width(p_left: float, x0: float, setup: PhysicalSetup, threshold: float | None = None) -> LayerGeometry:
    """Width of the region where |Q0| exceeds mu**2.

    Inverts 2|P| / (exp(xi k |P|) + 1) = mu**2 exactly on each side.
    """
    thr = setup.mu ** 2 if threshold is None else threshold
    amp = abs(float(p_left))
    if amp <= thr / 2.0:
        raise DegenerateLayer(f"layer amplitude |P| = {amp:.3g} not above {thr / 2:.3g}")
    xi_hat = np.log(2.0 * amp / thr - 1.0) / (setup.k * amp)
    # |P^l| = |P^r|, so both sides have the same stretched half-width
    width = setup.mu * 2.0 * xi_hat
    return LayerGeometry(
        x0=float(x0),
        width=float(width),
        xi_left=float(xi_hat),
        xi_right=float(xi_hat),
        x_left=float(x0 - setup.mu * xi_hat),
        x_right=float(x0 + setup.mu * xi_hat),
    )


# ---------------------------------------------------------------------------
# assembled solution


@dataclass(frozen=True, eq=False)
class AsymptoticSolution:
    setup: PhysicalSetup
    regular: RegularPair
    front: FrontPath

    def _check(self, x, t):
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-14) or np.any(x > 1 + 1e-14):
            raise OutOfDomain("x outside [0, 1]")
        if t < -1e-14 or t > self.setup.t_final + 1e-12:
            raise OutOfDomain(f"t = {t} outside [0, {self.setup.t_final}]")
        return np.clip(x, 0.0, 1.0)

    def stretched(self, x, t):
        return (np.asarray(x, dtype=float) - self.front.position(t)) / self.setup.mu

    def u0(self, x, t: float):
        x = self._check(x, t)
        x0 = float(self.front.position(t))
        p = float(self.regular.p_left(x0))
        xi = (x - x0) / self.setup.mu
        outer = np.where(xi <= 0.0, self.regular.phi_left(x), self.regular.phi_right(x))
        return outer + layer_profile_q0(p, self.setup.k, xi)

    def u0_dx(self, x, t: float):
        x = self._check(x, t)
        x0 = float(self.front.position(t))
        p = float(self.regular.p_left(x0))
        xi = (x - x0) / self.setup.mu
        outer = np.where(xi <= 0.0, self.regular.dphi_left(x), self.regular.dphi_right(x))
        return outer + layer_profile_q0_dxi(p, self.setup.k, xi) / self.setup.mu

    def regular_part(self, x, t: float):
        """phi_left left of x0(t), phi_right right of it (no layer term)."""
        x = self._check(x, t)
        x0 = float(self.front.position(t))
        return np.where(x <= x0, self.regular.phi_left(x), self.regular.phi_right(x))

    def layer(self, t: float) -> LayerGeometry:
        x0 = float(self.front.position(t))
        return layer_width(self.regular.p_left(x0), x0, self.setup)

    def lattice(self, xs, ts, part: str = "u0") -> np.ndarray:
        fn = {"u0": self.u0, "regular": self.regular_part, "u0_dx": self.u0_dx}[part]
        return np.vstack([fn(xs, float(t)) for t in ts])


def evaluate_u0(sol: AsymptoticSolution, x, t: float):
    return sol.u0(x, t)


def evaluate_u0_dx(sol: AsymptoticSolution, x, t: float):
    return sol.u0_dx(x, t)


# ---------------------------------------------------------------------------
# assumptions


@dataclass
class AssumptionReport:
    a1: bool
    a2: bool
    a3: bool | None
    a4: str
    messages: list[str]

    @property
    def ok(self) -> bool:
        return bool(self.a1 and self.a2 and self.a3)

    def first_failure(self) -> str | None:
        for name in ("a1", "a2", "a3"):
            if not getattr(self, name):
                return name.upper()
        return None


def check_assumptions(
    setup: PhysicalSetup,
    src: SourceFunction,
    dt: float | None = None,
    margin: float | None = None,
) -> AssumptionReport:
    msgs = []
    a1 = setup.u_left < 0.0 < setup.u_right and setup.u_right - setup.u_left > 2 * setup.mu ** 2
    if not a1:
        msgs.append(
            f"Assumption 1 fails: need u_left < 0 < u_right and u_right - u_left > 2 mu^2 "
            f"(got u_left = {setup.u_left}, u_right = {setup.u_right})"
        )
    lim_r = 0.5 * setup.k * setup.u_right ** 2
    lim_l = 0.5 * setup.k * setup.u_left ** 2
    a2 = lim_r > src.pos_mass and lim_l > src.neg_mass
    if not a2:
        msgs.append(
            f"Assumption 2 fails: positive mass {src.pos_mass:.4g} vs (k/2)u_r^2 = {lim_r:.4g}, "
            f"negative mass {src.neg_mass:.4g} vs (k/2)u_l^2 = {lim_l:.4g}"
        )
    a3: bool | None = None
    if a1 and a2:
        try:
            integrate_front(setup, regular_functions(setup, src), dt=dt, margin=margin)
            a3 = True
        except (FrontExitedDomain, NonrealRegularFunction) as exc:
            a3 = False
            msgs.append(f"Assumption 3 fails: {exc}")
    else:
        msgs.append("Assumption 3 not checked (regular functions unavailable)")
    a4 = "not enforced: the default tanh initial profile places the layer at x0_init"
    return AssumptionReport(a1, bool(a2), a3, a4, msgs)


def build_solution(
    setup: PhysicalSetup,
    src: SourceFunction,
    dt: float | None = None,
    margin: float | None = None,
) -> AsymptoticSolution:
    reg = regular_functions(setup, src)
    front = integrate_front(setup, reg, dt=dt, margin=margin)
    return AsymptoticSolution(setup, reg, front)


def exponential_bound_constants(front: FrontPath, k: float) -> tuple[float, float, float, float]:
    """(C_low, kappa_low, C_up, kappa_up) with
    C_low e^{kappa_low xi} <= |Q0^l(xi)| <= C_up e^{kappa_up xi} for xi <= 0.

    C_low/C_up are inf/sup of |P| along the path.  The rates follow from
    1/cosh(z/2) <= 1 and e^z + 1 <= 2 e^z for the logistic profile.
    """
    amp = np.abs(front.p_left)
    return float(amp.min()), float(k * amp.max()), float(amp.max()), float(0.5 * k * amp.min())
