"""Noise-level sweep on the third problem and mu sweep on the first, with
the rate summaries printed at the end.

    AER_THREADS=4 python3 scripts/rate_sweep.py [--out results/sweeps] [--seeds 20]
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from aer.cli import write_sweep
from aer.config import example_config
from aer.experiments import run_sweep


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/sweeps")
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args(argv)
    out = Path(args.out)

    delta = run_sweep(example_config(3), "delta", seeds=args.seeds)
    write_sweep(out / "sweep_delta.csv", delta)
    for v, m in delta.medians().items():
        print(f"delta = {v:g}: median relative error {m:.4g}")
    print(f"log-log slope {delta.slope:.3f} (square-root rate: 0.5)")

    mu = run_sweep(example_config(1), "mu")
    write_sweep(out / "sweep_mu.csv", mu)
    rows = sorted(mu.rows, key=lambda r: -r.value)
    for r in rows:
        print(f"mu = {r.value:g}: ||f* - f0|| / (mu |ln mu|) = {r.ratio:.4g}")
    ratios = [r.ratio for r in rows]
    print(f"nonincreasing as mu decreases: {all(b <= a for a, b in zip(ratios, ratios[1:]))}")
    return 0 if delta.n_ok and mu.n_ok else 3


if __name__ == "__main__":
    sys.exit(main())
