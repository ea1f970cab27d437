import json

import numpy as np
import pytest

from aer.config import (
    ConfigError,
    compile_expression,
    config_from_dict,
    dump_config,
    example_config,
    gap_config,
    load_config,
)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_dump_load_round_trip(tmp_path, n):
    cfg = example_config(n)
    p = tmp_path / "c.json"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg


def test_gap_config_round_trip():
    cfg = gap_config()
    assert config_from_dict(json.loads(dump_config(cfg))) == cfg
    assert cfg.gaps == ((0.77, 0.87),)


def _base():
    return json.loads(dump_config(example_config(1)))


@pytest.mark.parametrize("key", ["schema_version", "name", "setup", "source"])
def test_missing_required_key(key):
    d = _base()
    del d[key]
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict(d)


@pytest.mark.parametrize(
    "path,value",
    [
        (("bogus",), 1),
        (("setup", "extra"), 1),
        (("grid", "cells"), 5),
        (("outputs", "format"), "png"),
    ],
)
def test_unknown_keys_rejected(path, value):
    d = _base()
    node = d
    for p in path[:-1]:
        node = node[p]
    node[path[-1]] = value
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict(d)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(schema_version=2),
        lambda d: d.update(delta=1.5),
        lambda d: d.update(t0=0.9),
        lambda d: d.update(constraint_class="wiggly"),
        lambda d: d["setup"].update(mu=2.0),
        lambda d: d["grid"].update(scheme="weno"),
        lambda d: d.update(source={"name": "nope"}),
        lambda d: d.update(source={"name": "ex1", "expression": "x"}),
        lambda d: d.update(gaps=[[0.5, 0.2]]),
    ],
)
def test_invalid_values(mutate):
    d = _base()
    mutate(d)
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_expression_source():
    d = _base()
    d["source"] = {"expression": "x*sin(3*pi*x)"}
    cfg = config_from_dict(d)
    x = np.linspace(0, 1, 5)
    assert np.allclose(cfg.source.callable()(x), x * np.sin(3 * np.pi * x))


@pytest.mark.parametrize("expr", ["__import__('os')", "x.real", "open('f')", "[x]", "y + 1"])
def test_unsafe_expressions(expr):
    with pytest.raises(ConfigError):
        compile_expression(expr)


def test_table_source():
    d = _base()
    d["source"] = {"table": {"x": [0, 1], "f": [0, 2]}}
    assert config_from_dict(d).source.callable()(0.5) == pytest.approx(1.0)


def test_overrides():
    cfg = example_config(1).with_overrides(seed=3, delta=0.02, directory="o", plots=True)
    assert (cfg.seed, cfg.delta, cfg.outputs.directory, cfg.outputs.plots) == (3, 0.02, "o", True)


def test_bad_json(tmp_path):
    (tmp_path / "c.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.json")
