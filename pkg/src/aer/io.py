"""CSV persistence.  Floats are written with 17 significant digits so that a
write/read round trip is bit-exact; files are replaced atomically."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .fvm import FieldSeries
from .inversion import Observations

FLOAT_FMT = "{:.17g}"


def format_float(v) -> str:
    v = float(v)
    if np.isnan(v):
        return ""
    return FLOAT_FMT.format(v)


def parse_float(s: str) -> float:
    return float("nan") if s.strip() == "" else float(s)


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_columns(path, header, columns) -> Path:
    """Columns are equal-length sequences; floats use 17 significant digits,
    NaN becomes an empty field, ints and strings are written as is."""
    cols = [np.asarray(c) if not isinstance(c, (list, tuple)) else c for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i in range(n):
        row = []
        for c in cols:
            v = c[i]
            if isinstance(v, (bool, np.bool_)):
                row.append(str(int(v)))
            elif isinstance(v, (int, np.integer)):
                row.append(str(int(v)))
            elif isinstance(v, str):
                row.append(v)
            else:
                row.append(format_float(v))
        w.writerow(row)
    return atomic_write_text(path, buf.getvalue())


def read_columns(path, expected_header=None) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    if expected_header is not None and list(header) != list(expected_header):
        raise ValueError(f"{path}: header {header} does not match {list(expected_header)}")
    out = {name: [] for name in header}
    for r in rows[1:]:
        if len(r) != len(header):
            raise ValueError(f"{path}: ragged row {r}")
        for name, v in zip(header, r):
            out[name].append(v)
    return out


# ---------------------------------------------------------------------------
# field series: x,t,u, one row per (i, j)

FIELD_HEADER = ("x", "t", "u")


def write_field_series(path, series: FieldSeries) -> Path:
    nt, nx = series.values.shape
    xs = np.tile(series.x, nt)
    ts = np.repeat(series.times, nx)
    return write_columns(path, FIELD_HEADER, [xs, ts, series.values.ravel()])


def read_field_series(path) -> FieldSeries:
    cols = read_columns(path, FIELD_HEADER)
    x = np.array([parse_float(v) for v in cols["x"]])
    t = np.array([parse_float(v) for v in cols["t"]])
    u = np.array([parse_float(v) for v in cols["u"]])
    times = np.array(list(dict.fromkeys(t.tolist())))
    nx = len(x) // len(times)
    if nx * len(times) != len(x):
        raise ValueError(f"{path}: rows do not form a full lattice")
    return FieldSeries(x[:nx].copy(), times, u.reshape(len(times), nx))


# ---------------------------------------------------------------------------
# observations: x,u,w,mask

OBS_HEADER = ("x", "u", "w", "mask")


def write_observations(path, obs: Observations) -> Path:
    w = obs.w_noisy if obs.w_noisy is not None else np.full(len(obs.xs), np.nan)
    return write_columns(path, OBS_HEADER, [obs.xs, obs.u_noisy, w, obs.mask.astype(int)])


def read_observations(path, t0: float, delta: float, seed=None) -> Observations:
    cols = read_columns(path, OBS_HEADER)
    xs = np.array([parse_float(v) for v in cols["x"]])
    u = np.array([parse_float(v) for v in cols["u"]])
    w = np.array([parse_float(v) for v in cols["w"]])
    mask = np.array([int(v) for v in cols["mask"]], dtype=bool)
    w_obs = None if np.all(np.isnan(w)) else w
    return Observations(t0, xs, u, w_obs, delta, mask, seed)


# ---------------------------------------------------------------------------
# error report: x,f_delta,f_low,f_up,delta2 plus delta1,delta1_bar,feasible

REPORT_HEADER = ("x", "f_delta", "f_low", "f_up", "delta2")
SCALAR_HEADER = ("delta1", "delta1_bar", "feasible")


def scalar_sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_scalars.csv")


def write_error_report(path, report, x=None) -> tuple[Path, Path]:
    tab = report.table(x)
    p = write_columns(path, REPORT_HEADER, [tab[k] for k in REPORT_HEADER])
    s = write_columns(
        scalar_sidecar(path),
        SCALAR_HEADER,
        [[report.delta1], [report.delta1_bar], [int(bool(report.feasible))]],
    )
    return p, s


def read_error_report(path) -> tuple[dict, dict]:
    cols = read_columns(path, REPORT_HEADER)
    table = {k: np.array([parse_float(v) for v in cols[k]]) for k in REPORT_HEADER}
    sc = read_columns(scalar_sidecar(path), SCALAR_HEADER)
    scalars = {
        "delta1": parse_float(sc["delta1"][0]),
        "delta1_bar": parse_float(sc["delta1_bar"][0]),
        "feasible": bool(int(sc["feasible"][0])),
    }
    return table, scalars
