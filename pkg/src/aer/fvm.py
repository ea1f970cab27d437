"""Finite-volume reference solver for mu u_xx - u_t = -k u u_x + f(x).

Rewritten in conservation form  u_t + (-k u^2 / 2)_x = mu u_xx - f,  the
advective flux is discretised with local Lax-Friedrichs (Rusanov) fluxes and
advanced explicitly, while diffusion is implicit.  Time stepping is the
second-order IMEX Runge-Kutta scheme ARS(2,2,2) (two tridiagonal solves per
step).  Dirichlet data enter through the boundary faces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .asymptotics import PhysicalSetup, SourceFunction
from .exceptions import CFLViolation, EmptyRegion, NonFiniteState, TimeNotStored

CFL_SAFETY = 0.9
# default step is the stability limit divided by this, so that halving it
# changes the solution far below the spatial error
TIME_REFINEMENT = 8
ARS_GAMMA = 1.0 - 1.0 / np.sqrt(2.0)
ARS_DELTA = 1.0 - 1.0 / (2.0 * ARS_GAMMA)
N_SNAPSHOTS = 201


@dataclass(frozen=True)
class SpatialGrid:
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 3:
            raise ValueError("need at least 3 cells")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    @property
    def nodes(self) -> np.ndarray:
        """Cell centres plus the two boundary points."""
        return np.concatenate(([0.0], self.centers, [1.0]))


@dataclass(frozen=True, eq=False)
class FieldSeries:
    """u on the lattice ``x`` (boundary points included) x ``times``.

    ``values[j, i]`` is u(x[i], times[j]).
    """

    x: np.ndarray
    times: np.ndarray
    values: np.ndarray
    setup: PhysicalSetup | None = None
    grid: SpatialGrid | None = None

    def time_index(self, t: float, tol: float = 1e-10) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > tol:
            raise TimeNotStored(f"t = {t} is not a stored snapshot")
        return j

    def at(self, t: float) -> np.ndarray:
        return self.values[self.time_index(t)]


def default_initial_condition(setup: PhysicalSetup, x, x0_init: float | None = None) -> np.ndarray:
    """tanh profile joining u_left and u_right at x0_init with width mu."""
    x0 = setup.x0_init if x0_init is None else x0_init
    if not 0.0 < x0 < 1.0:
        raise ValueError("x0_init must lie in (0, 1)")
    amp = 0.5 * (setup.u_right - setup.u_left)
    mid = 0.5 * (setup.u_right + setup.u_left)
    return amp * np.tanh((np.asarray(x, dtype=float) - x0) / setup.mu) + mid


def stable_dt(setup: PhysicalSetup, grid: SpatialGrid, umax: float) -> float:
    """Advective CFL limit; diffusion is implicit and L-stable, so it adds none."""
    return CFL_SAFETY * grid.h / (setup.k * umax)


def _diffusion_bands(n: int, r: float) -> np.ndarray:
    """Banded form of I - dt mu L with ghost-cell Dirichlet closure."""
    ab = np.zeros((3, n))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, 0] = ab[1, -1] = 1.0 + 3.0 * r
    ab[2, :-1] = -r
    return ab


def _rusanov_flux(ul, ur, k):
    a = k * np.maximum(np.abs(ul), np.abs(ur))
    return -0.25 * k * (ul * ul + ur * ur) - 0.5 * a * (ur - ul)


def _face_states(u_ext, scheme):
    """Left/right states at the n+1 faces from the ghost-extended cell array."""
    if scheme == "rusanov":
        return u_ext[:-1], u_ext[1:]
    # minmod-limited linear reconstruction
    d = np.diff(u_ext)
    slope = np.zeros_like(u_ext)
    slope[1:-1] = np.where(d[:-1] * d[1:] > 0, np.sign(d[1:]) * np.minimum(np.abs(d[:-1]), np.abs(d[1:])), 0.0)
    left = u_ext[:-1] + 0.5 * slope[:-1]
    right = u_ext[1:] - 0.5 * slope[1:]
    return left, right


def solve_forward(
    setup: PhysicalSetup,
    src: SourceFunction,
    u_init=None,
    grid: SpatialGrid | None = None,
    dt: float | None = None,
    times=None,
    scheme: str = "rusanov",
) -> FieldSeries:
    """Integrate the PDE over [0, T] and store snapshots at ``times``.

    ``u_init`` is sampled at cell centres (callable or array); default is the
    tanh profile.  Default ``times`` is 201 uniform instants over [0, T].
    ``scheme`` is "rusanov" (first order in space) or "muscl" (minmod
    reconstruction).  Default ``dt`` is the stability limit over
    TIME_REFINEMENT.
    """
    if scheme not in ("rusanov", "muscl"):
        raise ValueError(f"unknown scheme {scheme!r}")
    grid = grid or SpatialGrid(500)
    xc = grid.centers
    if u_init is None:
        u = default_initial_condition(setup, xc)
    elif callable(u_init):
        u = np.asarray(u_init(xc), dtype=float)
    else:
        u = np.array(u_init, dtype=float)
    if u.shape != xc.shape:
        raise ValueError("u_init does not match the grid")

    T = setup.t_final
    if times is None:
        times = np.linspace(0.0, T, N_SNAPSHOTS)
    times = np.unique(np.asarray(times, dtype=float))
    if times[0] < 0 or times[-1] > T + 1e-12:
        raise ValueError("snapshot times must lie in [0, T]")

    ul, ur, k, mu, h = setup.u_left, setup.u_right, setup.k, setup.mu, grid.h
    umax = max(np.abs(u).max(), abs(ul), abs(ur))
    limit = stable_dt(setup, grid, umax)
    if dt is None:
        dt = limit / TIME_REFINEMENT
    elif dt > limit * (1 + 1e-12):
        raise CFLViolation(f"dt = {dt:.3g} exceeds the stable bound {limit:.3g}")

    fx = src(xc)
    bc = np.zeros_like(u)
    bc[0], bc[-1] = 2.0 * ul, 2.0 * ur

    def explicit_rate(v):
        ext = np.concatenate(([ul], v, [ur]))
        if scheme == "muscl":
            # boundary faces see the Dirichlet value directly
            ext_g = np.concatenate(([2 * ul - v[0]], v, [2 * ur - v[-1]]))
            left, right = _face_states(ext_g, "muscl")
            left[0] = right[0] = ul
            left[-1] = right[-1] = ur
        else:
            left, right = _face_states(ext, "rusanov")
        flux = _rusanov_flux(left, right, k)
        return -(flux[1:] - flux[:-1]) / h - fx

    def diffusion_rate(v):
        lap = np.empty_like(v)
        lap[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
        lap[0] = v[1] - 3.0 * v[0]
        lap[-1] = v[-2] - 3.0 * v[-1]
        return mu / (h * h) * (lap + bc)

    out = np.empty((len(times), grid.n_cells))
    t = 0.0
    j = 0
    bands_cache: dict[float, np.ndarray] = {}
    while j < len(times):
        if abs(times[j] - t) <= 1e-12:
            out[j] = u
            j += 1
            continue
        step = min(dt, times[j] - t)
        if step < 1e-14:
            t = times[j]
            continue
        # ARS(2,2,2): L-stable implicit diffusion, explicit advection and source
        r = mu * ARS_GAMMA * step / (h * h)
        key = round(step, 15)
        if key not in bands_cache:
            bands_cache[key] = _diffusion_bands(grid.n_cells, r)
        ab = bands_cache[key]
        e0 = explicit_rate(u)
        u2 = solve_banded((1, 1), ab, u + step * ARS_GAMMA * e0 + r * bc, check_finite=False)
        e2 = explicit_rate(u2)
        rhs = u + step * (ARS_DELTA * e0 + (1.0 - ARS_DELTA) * e2) + step * (1.0 - ARS_GAMMA) * diffusion_rate(u2)
        u = solve_banded((1, 1), ab, rhs + r * bc, check_finite=False)
        t += step
        if not np.all(np.isfinite(u)):
            raise NonFiniteState(f"non-finite state at t = {t:.4g}")
        if step == dt and setup.k * np.abs(u).max() * dt > h * (1 + 1e-9) / CFL_SAFETY:
            raise CFLViolation(f"advective CFL exceeded at t = {t:.4g}")

    values = np.hstack([np.full((len(times), 1), ul), out, np.full((len(times), 1), ur)])
    return FieldSeries(grid.nodes, times, values, setup, grid)


def sample_observations(series: FieldSeries, t0: float, xs) -> tuple[np.ndarray, np.ndarray]:
    """Exact (pre-noise) u and u_x at positions ``xs`` at time t0.

    u_x uses second-order differences over the cell centres and is held
    constant over the half cells next to the walls, where the one-sided
    difference to the Dirichlet value is inaccurate.  Both are linearly
    interpolated onto ``xs``.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0) or np.any(xs > 1):
        raise ValueError("observation points must lie in [0, 1]")
    u = series.at(t0)
    xc, uc = series.x[1:-1], u[1:-1]
    du = np.gradient(uc, xc, edge_order=2)
    return np.interp(xs, series.x, u), np.interp(xs, xc, du)


def relative_l2_error(approx, reference: FieldSeries, region=None) -> float:
    """||approx - reference|| / ||reference|| over the reference lattice.

    ``approx`` is either an array shaped like ``reference.values`` or a
    callable ``(x, t) -> u`` evaluated per snapshot.  ``region`` is an optional
    boolean mask with the same shape selecting lattice points.
    """
    ref = reference.values
    if callable(approx):
        vals = np.vstack([approx(reference.x, float(t)) for t in reference.times])
    else:
        vals = np.asarray(approx, dtype=float)
    if vals.shape != ref.shape:
        raise ValueError("approximation does not match the reference lattice")
    if region is None:
        region = np.ones(ref.shape, dtype=bool)
    if not np.any(region):
        raise EmptyRegion("no lattice points in the requested region")
    num = np.sqrt(np.sum((vals - ref)[region] ** 2))
    den = np.sqrt(np.sum(ref[region] ** 2))
    return float(num / den)


def argmax_gradient(series: FieldSeries) -> np.ndarray:
    """Position of max |u_x| at each snapshot (front tracker)."""
    du = np.abs(np.diff(series.values, axis=1))
    idx = np.argmax(du, axis=1)
    return 0.5 * (series.x[idx] + series.x[idx + 1])


def max_principle_bounds(setup: PhysicalSetup, src: SourceFunction, u_init) -> tuple[float, float]:
    """Comparison-principle bounds for the solution over [0, T].

    Without a source these are the extremes of the initial and boundary
    data; a source can move the solution by at most T * max|f|.
    """
    lo = min(np.min(u_init), setup.u_left, setup.u_right)
    hi = max(np.max(u_init), setup.u_left, setup.u_right)
    drift = setup.t_final * float(np.abs(src.values).max())
    return lo - drift, hi + drift
