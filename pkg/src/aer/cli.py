"""Command-line entry point ``aer``.

Exit codes: 0 ok, 1 usage, 2 assumptions, 3 solver, 4 infeasible set.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, dump_config, example_config, load_config
from .exceptions import AERError, InfeasibleSet
from .io import atomic_write_text, read_observations, write_columns, write_error_report, write_field_series, write_observations

EXIT_OK, EXIT_USAGE, EXIT_ASSUMPTIONS, EXIT_SOLVER, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", type=Path, help="experiment JSON file")
    p.add_argument("--example", type=int, choices=(1, 2, 3), help="use a built-in example config")
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--plots", action="store_true", help="also write SVG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aer", description="Asymptotic expansion regularisation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("check-assumptions", "check the solvability assumptions"),
        ("forward", "asymptotic and reference forward solutions"),
        ("invert", "reconstruct the source from noisy data"),
        ("errors", "a posteriori error report for stored observations"),
    ]:
        _common(sub.add_parser(name, help=help_))
    sw = sub.add_parser("sweep", help="noise-level or mu sweep")
    _common(sw)
    sw.add_argument("--kind", choices=("delta", "mu"), default="delta")
    sw.add_argument("--values", type=float, nargs="*", help="sweep points (default from config)")
    sw.add_argument("--seeds", type=int, help="seeds per point (delta sweep)")
    rep = sub.add_parser("reproduce-example", help="forward and inverse run of a reference problem")
    rep.add_argument("number", type=int, choices=(1, 2, 3))
    for flag in ("--seed", "--delta"):
        rep.add_argument(flag, type=int if flag == "--seed" else float)
    rep.add_argument("--out", type=Path)
    rep.add_argument("--plots", action="store_true")
    return parser


def resolve_config(args) -> ExperimentConfig:
    if getattr(args, "config", None) is not None and getattr(args, "example", None) is not None:
        raise UsageError("give either --config or --example, not both")
    if getattr(args, "number", None) is not None:
        cfg = example_config(args.number)
    elif getattr(args, "config", None) is not None:
        cfg = load_config(args.config)
    elif getattr(args, "example", None) is not None:
        cfg = example_config(args.example)
    else:
        raise UsageError("a configuration is required: pass --config PATH or --example N")
    out = str(args.out) if args.out is not None else None
    return cfg.with_overrides(seed=args.seed, delta=args.delta, directory=out, plots=True if args.plots else None)


def _outdir(cfg: ExperimentConfig) -> Path:
    d = Path(cfg.outputs.directory)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# commands


def cmd_check_assumptions(cfg: ExperimentConfig) -> int:
    rep = ex.assumptions(cfg)
    for name in ("a1", "a2", "a3"):
        print(f"{name.upper()}: {'pass' if getattr(rep, name) else 'FAIL'}")
    print(f"A4: {rep.a4}")
    for m in rep.messages:
        print(m, file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_ASSUMPTIONS


def cmd_forward(cfg: ExperimentConfig) -> int:
    res = ex.run_forward(cfg)
    out = _outdir(cfg)
    s = res.series
    write_field_series(out / "u0.csv", replace(s, values=res.u0))
    write_field_series(out / "fvm.csv", s)
    write_columns(
        out / "forward_report.csv",
        ("t", "x0", "layer_width", "fvm_front", "relative_error"),
        [s.times, res.x0, res.layer_width, res.fvm_front, res.per_snapshot_error],
    )
    write_columns(
        out / "forward_summary.csv",
        ("relative_error", "regular_error", "n_cells"),
        [[res.relative_error], [res.regular_error], [cfg.grid.n_cells]],
    )
    if cfg.outputs.plots:
        from .plots import plot_fields, plot_front

        plot_fields(out / "fields.svg", s.x, s.times, res.u0, s.values)
        plot_front(out / "front.svg", s.times, res.x0, res.fvm_front, res.layer_width)
    print(f"relative error U0 vs reference: {res.relative_error:.6g}")
    print(f"relative error regular part:    {res.regular_error:.6g}")
    print(f"reference solve: {res.runtime:.2f} s")
    return EXIT_OK


def _write_inverse(cfg: ExperimentConfig, res: ex.InverseResult, out: Path, with_obs: bool = True):
    if with_obs:
        write_observations(out / "obs.csv", res.observations)
    est = res.estimate
    used = est.used if est.used is not None else np.ones(len(est.xs), dtype=bool)
    write_columns(out / "f_delta.csv", ("x", "f_delta", "used"), [est.xs, est.values, used.astype(int)])
    write_error_report(out / "error_report.csv", res.report)
    if cfg.outputs.plots:
        from .plots import plot_reconstruction

        plot_reconstruction(out / "reconstruction.svg", est, cfg.source.callable(), res.report)
    print(f"relative error vs f*: {res.relative_error:.6g}")
    print(f"Delta1: {res.report.delta1:.6g} (feasible: {res.report.feasible})")


def cmd_invert(cfg: ExperimentConfig) -> int:
    res = ex.run_inverse(cfg)
    _write_inverse(cfg, res, _outdir(cfg))
    return EXIT_OK


def cmd_errors(cfg: ExperimentConfig) -> int:
    """Error report for ``obs.csv`` in the output directory (generated first
    when absent)."""
    out = _outdir(cfg)
    obs_path = out / "obs.csv"
    if not obs_path.exists():
        write_observations(obs_path, ex.observe(cfg))
    obs = read_observations(obs_path, cfg.t0, cfg.delta, cfg.seed)
    problem = ex.exact_data(cfg)[0]
    c1 = ex.calibrated_c1(cfg)
    from .inversion import relative_source_error, run_aer

    est, rep, rec = run_aer(cfg.setup, obs, ex.aer_options(cfg, c1), problem.solution.front)
    f = cfg.source.callable()
    res = ex.InverseResult(cfg, obs, est, rep, rec, c1, relative_source_error(est, f), rep.brackets(f(rep.xs)), rep.brackets(rep.f_delta), 0.0)
    _write_inverse(cfg, res, out, with_obs=False)
    return EXIT_OK


def write_sweep(path, res: ex.SweepResult) -> Path:
    """One row per run; the fitted log-log slope is repeated on every row."""
    rows = res.rows
    return write_columns(
        path,
        ("kind", "value", "seed", "relative_error", "delta1", "ratio", "runtime_s", "status", "slope"),
        [
            [r.kind for r in rows],
            [r.value for r in rows],
            [r.seed for r in rows],
            [r.relative_error for r in rows],
            [r.delta1 for r in rows],
            [r.ratio for r in rows],
            [r.runtime for r in rows],
            [r.status for r in rows],
            [res.slope for _ in rows],
        ],
    )


def cmd_sweep(cfg: ExperimentConfig, kind: str, values, seeds) -> int:
    if values is not None and len(values) == 0:
        raise UsageError("empty sweep list")
    try:
        res = ex.run_sweep(cfg, kind, values, seeds)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_sweep(_outdir(cfg) / f"sweep_{kind}.csv", res)
    for v, m in res.medians().items():
        print(f"{kind} = {v:g}: median relative error {m:.6g}")
    if kind == "delta":
        print(f"log-log slope: {res.slope:.4f}")
    else:
        for r in res.rows:
            print(f"mu = {r.value:g}: ||f* - f0|| / (mu |ln mu|) = {r.ratio:.6g}")
    return EXIT_OK if res.n_ok >= 1 else EXIT_SOLVER


def cmd_reproduce(cfg: ExperimentConfig) -> int:
    atomic_write_text(_outdir(cfg) / "config.json", dump_config(cfg) + "\n")
    code = cmd_forward(cfg)
    if code != EXIT_OK:
        return code
    return cmd_invert(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "check-assumptions":
            return cmd_check_assumptions(cfg)
        if args.command == "forward":
            return cmd_forward(cfg)
        if args.command == "invert":
            return cmd_invert(cfg)
        if args.command == "errors":
            return cmd_errors(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.kind, args.values, args.seeds)
        return cmd_reproduce(cfg)
    except (UsageError, ConfigError) as exc:
        print(f"aer: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ex.AssumptionFailure as exc:
        print(f"aer: assumption check failed: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTIONS
    except InfeasibleSet as exc:
        print(f"aer: infeasible admissible set: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AERError as exc:
        print(f"aer: solver failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
