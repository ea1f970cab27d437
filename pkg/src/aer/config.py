"""Experiment configuration: one JSON document, schema-versioned, strict keys."""
from __future__ import annotations

import ast
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .asymptotics import PhysicalSetup
from .examples import EX3_GAP, EXAMPLES, SOURCES

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


_EXPR_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
}
_EXPR_CONSTS = {"pi": np.pi, "e": np.e}
_EXPR_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def compile_expression(expr: str):
    """Turn an arithmetic expression in ``x`` into a vectorised callable."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad source expression {expr!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ConfigError(f"unsupported syntax in source expression: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _EXPR_FUNCS and node.id not in _EXPR_CONSTS and node.id != "x":
            raise ConfigError(f"unknown name {node.id!r} in source expression")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _EXPR_FUNCS):
            raise ConfigError("only elementary functions may be called in a source expression")
    code = compile(tree, "<source>", "eval")

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(eval(code, {"__builtins__": {}}, {**_EXPR_FUNCS, **_EXPR_CONSTS, "x": x}), x.shape).astype(float)

    return f


@dataclass(frozen=True)
class SourceSpec:
    name: str | None = None
    expression: str | None = None
    table: dict | None = None

    def __post_init__(self):
        given = [v is not None for v in (self.name, self.expression, self.table)]
        if sum(given) != 1:
            raise ConfigError("source needs exactly one of name, expression, table")
        if self.name is not None and self.name not in SOURCES:
            raise ConfigError(f"unknown source name {self.name!r}; known: {sorted(SOURCES)}")
        if self.expression is not None:
            compile_expression(self.expression)
        if self.table is not None:
            if set(self.table) != {"x", "f"}:
                raise ConfigError("source table needs keys 'x' and 'f'")
            if len(self.table["x"]) != len(self.table["f"]) or len(self.table["x"]) < 2:
                raise ConfigError("source table columns must have equal length >= 2")

    def callable(self):
        if self.name is not None:
            return SOURCES[self.name]
        if self.expression is not None:
            return compile_expression(self.expression)
        xs = np.asarray(self.table["x"], dtype=float)
        fs = np.asarray(self.table["f"], dtype=float)
        return lambda x: np.interp(np.asarray(x, dtype=float), xs, fs)

    def quadrature_input(self):
        """What ``build_cumulative`` should receive."""
        if self.table is not None:
            return (np.asarray(self.table["x"], float), np.asarray(self.table["f"], float))
        return self.callable()


@dataclass(frozen=True)
class GridConfig:
    n_cells: int = 500
    n_obs: int = 20
    scheme: str = "rusanov"
    n_snapshots: int = 201
    data_cells: int = 500  # reference solve that produces inverse data
    data_scheme: str = "rusanov"

    def __post_init__(self):
        for name in ("n_cells", "data_cells"):
            if getattr(self, name) < 3:
                raise ConfigError(f"grid.{name} must be at least 3")
        if self.n_obs < 2:
            raise ConfigError("grid.n_obs must be at least 2")
        if self.n_snapshots < 2:
            raise ConfigError("grid.n_snapshots must be at least 2")
        for name in ("scheme", "data_scheme"):
            if getattr(self, name) not in ("rusanov", "muscl"):
                raise ConfigError(f"grid.{name} must be 'rusanov' or 'muscl'")


@dataclass(frozen=True)
class SweepConfig:
    delta: tuple = ()
    mu: tuple = ()
    seeds: int = 20


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    plots: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    setup: PhysicalSetup
    source: SourceSpec
    grid: GridConfig = field(default_factory=GridConfig)
    t0: float = 0.2
    delta: float = 0.01
    seed: int = 0
    constraint_class: str = "monotone"
    layer_mode: str = "oracle"
    gradient_observed: bool = True
    gaps: tuple = ()
    c1: float | None = None  # None: calibrate from a noiseless run
    delta1_mode: str = "relaxation"
    discrepancy_scale: str = "std"
    derivative: str = "difference"
    front_margin: float | None = None
    sweep: SweepConfig = field(default_factory=SweepConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version {self.schema_version} is not supported (expected {SCHEMA_VERSION})")
        if not 0.0 < self.t0 <= self.setup.t_final:
            raise ConfigError("t0 must lie in (0, t_final]")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)")
        if self.constraint_class not in ("monotone", "concave", "convex", "none"):
            raise ConfigError(f"unknown constraint_class {self.constraint_class!r}")
        if self.layer_mode not in ("oracle", "data"):
            raise ConfigError("layer_mode must be 'oracle' or 'data'")
        if self.delta1_mode not in ("relaxation", "exact"):
            raise ConfigError("delta1_mode must be 'relaxation' or 'exact'")
        if self.discrepancy_scale not in ("std", "rms", "absolute"):
            raise ConfigError("discrepancy_scale must be 'std', 'rms' or 'absolute'")
        if self.derivative not in ("difference", "analytic"):
            raise ConfigError("derivative must be 'difference' or 'analytic'")
        for gap in self.gaps:
            if len(gap) != 2 or not 0.0 <= gap[0] < gap[1] <= 1.0:
                raise ConfigError(f"gap {gap!r} is not an interval inside [0, 1]")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        outputs = {k: kw.pop(k) for k in ("directory", "plots") if k in kw}
        cfg = replace(self, **kw)
        if outputs:
            cfg = replace(cfg, outputs=replace(cfg.outputs, **outputs))
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gaps"] = [list(g) for g in self.gaps]
        d["sweep"]["delta"] = list(self.sweep.delta)
        d["sweep"]["mu"] = list(self.sweep.mu)
        d["source"] = {k: v for k, v in d["source"].items() if v is not None}
        order = ["schema_version"] + [k for k in d if k != "schema_version"]
        return {k: d[k] for k in order}


_REQUIRED = ("schema_version", "name", "setup", "source")


def _strict(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise ConfigError(f"missing required key(s): {missing}")
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s): {sorted(unknown)}")
    d = dict(data)
    d["setup"] = _strict(PhysicalSetup, d["setup"], "setup")
    d["source"] = _strict(SourceSpec, d["source"], "source")
    if "grid" in d:
        d["grid"] = _strict(GridConfig, d["grid"], "grid")
    if "sweep" in d:
        sw = dict(d["sweep"]) if isinstance(d["sweep"], dict) else d["sweep"]
        if isinstance(sw, dict):
            for key in ("delta", "mu"):
                if key in sw:
                    sw[key] = tuple(float(v) for v in sw[key])
        d["sweep"] = _strict(SweepConfig, sw, "sweep")
    if "outputs" in d:
        d["outputs"] = _strict(OutputConfig, d["outputs"], "outputs")
    if "gaps" in d:
        d["gaps"] = tuple(tuple(float(v) for v in g) for g in d["gaps"])
    try:
        return ExperimentConfig(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)


def example_config(number: int) -> ExperimentConfig:
    """Built-in configuration reproducing one of the three reference problems."""
    if number not in EXAMPLES:
        raise ConfigError(f"no example {number}; choose 1, 2 or 3")
    ex = EXAMPLES[number]
    inv = ex.inverse
    grid = GridConfig(n_obs=inv.n)
    extra = {}
    if number == 3:
        # u-only data: sharper reference data and a data-driven layer window
        grid = replace(grid, data_cells=2000, data_scheme="muscl")
        extra = dict(layer_mode="data", sweep=SweepConfig(delta=(1e-4, 3e-4, 1e-3, 3e-3, 1e-2), seeds=20))
    elif number == 1:
        extra = dict(sweep=SweepConfig(mu=(0.04, 0.02, 0.01), seeds=20))
    return ExperimentConfig(
        name=ex.name,
        setup=ex.setup,
        source=SourceSpec(name=ex.source),
        grid=grid,
        t0=inv.t0,
        delta=inv.delta,
        constraint_class=inv.constraint_class,
        gradient_observed=inv.gradient_observed,
        gaps=tuple(inv.gaps),
        **extra,
    )


def gap_config() -> ExperimentConfig:
    """Third problem at t0 = 0.17 with a masked stretch of the right side."""
    base = example_config(3)
    return replace(base, name="ex3_gap", t0=EX3_GAP.t0, delta=EX3_GAP.delta, gaps=tuple(EX3_GAP.gaps))
