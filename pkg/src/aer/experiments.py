"""Config-driven runners shared by the CLI, the scripts and the acceptance
suite."""
from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .asymptotics import (
    AsymptoticSolution,
    AssumptionReport,
    SourceFunction,
    build_cumulative,
    build_solution,
    check_assumptions,
)
from .config import ExperimentConfig, dump_config
from .error_estimation import ErrorReport, calibrate_c1
from .fvm import FieldSeries, SpatialGrid, argmax_gradient, relative_l2_error, sample_observations, solve_forward
from .inversion import (
    AEROptions,
    Observations,
    Reconstruction,
    SourceEstimate,
    add_noise,
    gap_mask,
    reconstruct,
    relative_source_error,
    run_aer,
    uniform_grid,
)


class AssumptionFailure(RuntimeError):
    def __init__(self, report: AssumptionReport):
        super().__init__("; ".join(report.messages) or "assumptions violated")
        self.report = report


def max_workers() -> int:
    env = os.environ.get("AER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# problem set-up


@dataclass(frozen=True, eq=False)
class Problem:
    config: ExperimentConfig
    source: SourceFunction
    solution: AsymptoticSolution

    @property
    def setup(self):
        return self.config.setup

    @property
    def f_true(self):
        return self.config.source.callable()


def assumptions(cfg: ExperimentConfig) -> AssumptionReport:
    src = build_cumulative(cfg.source.quadrature_input())
    return check_assumptions(cfg.setup, src, margin=cfg.front_margin)


def build_problem(cfg: ExperimentConfig) -> Problem:
    src = build_cumulative(cfg.source.quadrature_input())
    rep = check_assumptions(cfg.setup, src, margin=cfg.front_margin)
    if not rep.ok:
        raise AssumptionFailure(rep)
    return Problem(cfg, src, build_solution(cfg.setup, src, margin=cfg.front_margin))


# ---------------------------------------------------------------------------
# forward


@dataclass(frozen=True, eq=False)
class ForwardResult:
    problem: Problem
    series: FieldSeries
    u0: np.ndarray
    relative_error: float
    regular_error: float
    per_snapshot_error: np.ndarray
    x0: np.ndarray
    layer_width: np.ndarray
    fvm_front: np.ndarray
    runtime: float


def run_forward(cfg: ExperimentConfig, problem: Problem | None = None) -> ForwardResult:
    problem = problem or build_problem(cfg)
    sol = problem.solution
    start = time.perf_counter()
    times = np.linspace(0.0, cfg.setup.t_final, cfg.grid.n_snapshots)
    series = solve_forward(cfg.setup, problem.source, grid=SpatialGrid(cfg.grid.n_cells), times=times, scheme=cfg.grid.scheme)
    runtime = time.perf_counter() - start
    u0 = sol.lattice(series.x, series.times, "u0")
    reg = sol.lattice(series.x, series.times, "regular")
    per = np.sqrt(np.sum((u0 - series.values) ** 2, axis=1) / np.sum(series.values ** 2, axis=1))
    widths = np.array([sol.layer(float(t)).width for t in series.times])
    return ForwardResult(
        problem,
        series,
        u0,
        relative_l2_error(u0, series),
        relative_l2_error(reg, series),
        per,
        np.asarray(sol.front.position(series.times)),
        widths,
        argmax_gradient(series),
        runtime,
    )


# ---------------------------------------------------------------------------
# inverse


_DATA_CACHE: dict = {}
_DATA_LOCK = threading.Lock()


def _exact_data(cfg: ExperimentConfig):
    problem = build_problem(cfg)
    series = solve_forward(
        cfg.setup,
        problem.source,
        grid=SpatialGrid(cfg.grid.data_cells),
        times=[0.0, cfg.t0],
        scheme=cfg.grid.data_scheme,
    )
    xs = uniform_grid(cfg.grid.n_obs)
    u, w = sample_observations(series, cfg.t0, xs)
    return problem, xs, u, w


def _data_key(cfg: ExperimentConfig) -> ExperimentConfig:
    """Config stripped of fields that do not affect the exact data."""
    return replace(cfg, delta=0.0, seed=0, c1=None, sweep=type(cfg.sweep)(), outputs=type(cfg.outputs)())


def exact_data(cfg: ExperimentConfig):
    """(problem, xs, u, u_x) before noise, from the reference solver
    (cached per data-relevant configuration)."""
    key_cfg = _data_key(cfg)
    key = dump_config(key_cfg)
    with _DATA_LOCK:
        if key not in _DATA_CACHE:
            if len(_DATA_CACHE) > 32:
                _DATA_CACHE.clear()
            _DATA_CACHE[key] = _exact_data(key_cfg)
        return _DATA_CACHE[key]


def observe(cfg: ExperimentConfig, seed: int | None = None, delta: float | None = None) -> Observations:
    _, xs, u, w = exact_data(cfg)
    seed = cfg.seed if seed is None else seed
    delta = cfg.delta if delta is None else delta
    mask = gap_mask(xs, cfg.gaps)
    return add_noise(xs, u, w if cfg.gradient_observed else None, delta, seed, cfg.t0, mask)


def aer_options(cfg: ExperimentConfig, c1: float = 0.0) -> AEROptions:
    return AEROptions(
        constraint_class=cfg.constraint_class,
        layer_mode=cfg.layer_mode,
        derivative=cfg.derivative,
        c1=c1,
        delta1_mode=cfg.delta1_mode,
        discrepancy_scale=cfg.discrepancy_scale,
    )


def noiseless_reconstruction(cfg: ExperimentConfig) -> Reconstruction:
    problem = exact_data(cfg)[0]
    obs = observe(cfg, seed=0, delta=0.0)
    return reconstruct(cfg.setup, obs, aer_options(cfg), problem.solution.front)


def calibrated_c1(cfg: ExperimentConfig) -> float:
    """Explicit ``c1`` from the config, or sup|f* - f0| / (mu |ln mu|) from a
    noiseless run (a calibration against the known source)."""
    if cfg.c1 is not None:
        return cfg.c1
    rec = noiseless_reconstruction(cfg)
    return calibrate_c1(cfg.setup, rec.fit.xs, rec.anchors, cfg.source.callable())


@dataclass(frozen=True, eq=False)
class InverseResult:
    config: ExperimentConfig
    observations: Observations
    estimate: SourceEstimate
    report: ErrorReport
    reconstruction: Reconstruction
    c1: float
    relative_error: float
    contains_truth: bool
    contains_estimate: bool
    runtime: float

    @property
    def discrepancy_ratios(self) -> list:
        return [sf.residual / sf.target for sf in self.reconstruction.data.smoothed.values()]


def run_inverse(cfg: ExperimentConfig, seed: int | None = None, delta: float | None = None, c1: float | None = None) -> InverseResult:
    problem = exact_data(cfg)[0]
    c1 = calibrated_c1(cfg) if c1 is None else c1
    obs = observe(cfg, seed, delta)
    start = time.perf_counter()
    est, rep, rec = run_aer(cfg.setup, obs, aer_options(cfg, c1), problem.solution.front)
    runtime = time.perf_counter() - start
    f = cfg.source.callable()
    return InverseResult(
        cfg,
        obs,
        est,
        rep,
        rec,
        c1,
        relative_source_error(est, f),
        rep.brackets(f(rep.xs)),
        rep.brackets(rep.f_delta),
        runtime,
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    kind: str
    value: float
    seed: int
    relative_error: float
    delta1: float
    ratio: float  # mu sweep: ||f* - f0|| / (mu |ln mu|)
    runtime: float
    status: str


def _delta_run(cfg, delta, seed, c1):
    start = time.perf_counter()
    try:
        res = run_inverse(cfg, seed=seed, delta=delta, c1=c1)
        return SweepRow("delta", delta, seed, res.relative_error, res.report.delta1, float("nan"), time.perf_counter() - start, "ok")
    except Exception as exc:  # recorded per row
        return SweepRow("delta", delta, seed, float("nan"), float("nan"), float("nan"), time.perf_counter() - start, f"error: {type(exc).__name__}: {exc}")


def source_l2_distance(est: SourceEstimate, f, n_dense: int = 20001) -> float:
    x = np.linspace(0.0, 1.0, n_dense)
    return float(np.sqrt(np.trapezoid((est(x) - f(x)) ** 2, x)))


def mu_config(cfg: ExperimentConfig, mu: float) -> ExperimentConfig:
    """Same problem at another mu.  The front margin shrinks with mu but never
    exceeds half the initial front position."""
    margin = min(10.0 * mu, 0.5 * cfg.setup.x0_init) if cfg.front_margin is None else cfg.front_margin
    return replace(cfg, setup=replace(cfg.setup, mu=mu), front_margin=margin, c1=None)


def _mu_run(cfg, mu):
    start = time.perf_counter()
    try:
        c = mu_config(cfg, mu)
        rec = noiseless_reconstruction(c)
        f = c.source.callable()
        dist = source_l2_distance(rec.estimate, f)
        rel = relative_source_error(rec.estimate, f)
        return SweepRow("mu", mu, 0, rel, float("nan"), dist / c.setup.mu_log_mu, time.perf_counter() - start, "ok")
    except Exception as exc:
        return SweepRow("mu", mu, 0, float("nan"), float("nan"), float("nan"), time.perf_counter() - start, f"error: {type(exc).__name__}: {exc}")


def fit_loglog_slope(values, errors) -> float:
    v = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    ok = np.isfinite(e) & (e > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(v[ok]), np.log(e[ok]), 1)[0])


@dataclass(frozen=True)
class SweepResult:
    kind: str
    rows: list
    slope: float  # delta sweep only

    def medians(self) -> dict:
        out = {}
        for v in sorted({r.value for r in self.rows}):
            errs = [r.relative_error for r in self.rows if r.value == v and r.status == "ok"]
            out[v] = float(np.median(errs)) if errs else float("nan")
        return out

    @property
    def n_ok(self) -> int:
        return sum(r.status == "ok" for r in self.rows)


def run_sweep(cfg: ExperimentConfig, kind: str, values=None, seeds: int | None = None) -> SweepResult:
    """Delta sweep: one inverse run per (delta, seed), slope of the median
    error in log-log.  Mu sweep: one noiseless run per mu."""
    if kind not in ("delta", "mu"):
        raise ValueError("sweep kind must be 'delta' or 'mu'")
    values = list(values if values is not None else getattr(cfg.sweep, kind))
    if not values:
        raise ValueError(f"empty {kind} sweep list")
    seeds = cfg.sweep.seeds if seeds is None else seeds
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        if kind == "delta":
            c1 = calibrated_c1(cfg)
            jobs = [pool.submit(_delta_run, cfg, float(d), s, c1) for d in values for s in range(seeds)]
        else:
            jobs = [pool.submit(_mu_run, cfg, float(m)) for m in values]
        rows = [j.result() for j in jobs]
    slope = float("nan")
    if kind == "delta":
        res = SweepResult(kind, rows, slope)
        med = res.medians()
        slope = fit_loglog_slope(list(med), list(med.values()))
    return SweepResult(kind, rows, slope)
