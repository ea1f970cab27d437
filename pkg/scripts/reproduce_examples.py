"""Forward and inverse runs of the three reference problems, one directory each.

    python3 scripts/reproduce_examples.py [--out results] [--plots]
"""
from __future__ import annotations

import argparse
import sys

from aer.cli import main as aer_main


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--plots", action="store_true")
    ap.add_argument("--examples", type=int, nargs="*", default=[1, 2, 3])
    args = ap.parse_args(argv)
    worst = 0
    for n in args.examples:
        print(f"== example {n}")
        cmd = ["reproduce-example", str(n), "--out", f"{args.out}/example{n}"]
        if args.plots:
            cmd.append("--plots")
        worst = max(worst, aer_main(cmd))
    return worst


if __name__ == "__main__":
    sys.exit(main())
