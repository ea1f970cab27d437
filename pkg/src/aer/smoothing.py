"""Cubic smoothing splines with the regularisation parameter set by the
discrepancy principle.

The spline minimises

    (1/m) sum_i (s(x_i) - y_i)^2 + eps * int s''(x)^2 dx

over natural cubic splines with knots at the data sites (Reinsch form).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solveh_banded

from .exceptions import DegenerateSide, DiscrepancyUnreachable

LOG_EPS_RANGE = (-16.0, 4.0)
MAX_BISECTIONS = 60


def _reinsch_bands(x):
    h = np.diff(x)
    m = len(x)
    # Q is m x (m-2), R is (m-2) x (m-2) tridiagonal
    q_lo = 1.0 / h[:-1]
    q_mid = -1.0 / h[:-1] - 1.0 / h[1:]
    q_hi = 1.0 / h[1:]
    r_diag = (h[:-1] + h[1:]) / 3.0
    r_off = h[1:-1] / 6.0
    assert m >= 3
    return q_lo, q_mid, q_hi, r_diag, r_off


def _qt_times(vec, q_lo, q_mid, q_hi):
    return q_lo * vec[:-2] + q_mid * vec[1:-1] + q_hi * vec[2:]


def _q_times(gamma, q_lo, q_mid, q_hi):
    out = np.zeros(len(gamma) + 2)
    out[:-2] += q_lo * gamma
    out[1:-1] += q_mid * gamma
    out[2:] += q_hi * gamma
    return out


def smoothing_spline_values(x, y, eps: float) -> np.ndarray:
    """Knot values of the penalised spline for parameter ``eps``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = len(x)
    if m < 3:
        return y.copy()
    q_lo, q_mid, q_hi, r_diag, r_off = _reinsch_bands(x)
    alpha = m * eps
    # Q^T Q is pentadiagonal; assemble R + alpha Q^T Q in upper banded storage
    n = m - 2
    d0 = r_diag + alpha * (q_lo ** 2 + q_mid ** 2 + q_hi ** 2)
    d1 = r_off + alpha * (q_mid[:-1] * q_lo[1:] + q_hi[:-1] * q_mid[1:])
    d2 = alpha * (q_hi[:-2] * q_lo[2:])
    ab = np.zeros((3, n))
    ab[2] = d0
    ab[1, 1:] = d1
    ab[0, 2:] = d2
    rhs = _qt_times(y, q_lo, q_mid, q_hi)
    gamma = solveh_banded(ab, rhs, lower=False, check_finite=False)
    return y - alpha * _q_times(gamma, q_lo, q_mid, q_hi)


@dataclass(frozen=True, eq=False)
class SmoothedField:
    x: np.ndarray
    y: np.ndarray
    knots_values: np.ndarray
    epsilon: float
    residual: float
    target: float
    reached: bool
    trace: list = field(default_factory=list, repr=False)

    @property
    def spline(self) -> CubicSpline:
        return CubicSpline(self.x, self.knots_values, bc_type="natural")

    def __call__(self, xq):
        return self.spline(np.asarray(xq, dtype=float))

    def derivative(self, xq):
        return self.spline(np.asarray(xq, dtype=float), 1)


def _misfit(x, y, eps):
    s = smoothing_spline_values(x, y, eps)
    return s, float(np.mean((s - y) ** 2))


def smooth_field(x, y, noise_level: float, strict: bool = False, rel_tol: float = 1e-3) -> SmoothedField:
    """Smooth one side of the data so that the mean-square misfit equals
    ``noise_level ** 2`` (absolute level).

    Bisection on log10(eps) over [-16, 4].  If even the smallest eps leaves a
    misfit above the target, the near-interpolating spline is returned with
    ``reached=False`` (or DiscrepancyUnreachable if ``strict``).  If the
    largest eps stays below the target, the least-squares line limit is
    returned, also with ``reached=False``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 4:
        raise DegenerateSide(f"need at least 4 points on a side, got {len(x)}")
    if noise_level <= 0:
        raise ValueError("noise level must be positive")
    target = noise_level ** 2
    lo, hi = LOG_EPS_RANGE
    trace = []
    s_lo, m_lo = _misfit(x, y, 10.0 ** lo)
    trace.append((lo, m_lo))
    if m_lo > target:
        if strict:
            raise DiscrepancyUnreachable(
                f"misfit {m_lo:.3g} at eps = 1e{lo:g} already exceeds target {target:.3g}"
            )
        return SmoothedField(x, y, s_lo, 10.0 ** lo, m_lo, target, False, trace)
    s_hi, m_hi = _misfit(x, y, 10.0 ** hi)
    trace.append((hi, m_hi))
    if m_hi < target:
        return SmoothedField(x, y, s_hi, 10.0 ** hi, m_hi, target, False, trace)
    best = (s_hi, m_hi, hi)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        s_mid, m_mid = _misfit(x, y, 10.0 ** mid)
        trace.append((mid, m_mid))
        best = (s_mid, m_mid, mid)
        if abs(m_mid / target - 1.0) < rel_tol:
            break
        if m_mid > target:
            hi = mid
        else:
            lo = mid
    s, m, le = best
    return SmoothedField(x, y, s, 10.0 ** le, m, target, abs(m / target - 1.0) < 10 * rel_tol, trace)
