#!/usr/bin/env python3
"""Run every shipped config through its CLI subcommand.

    python3 scripts/reproduce_figures.py [--out results] [--threads 1] [--only sweep_eps ...]
"""

import argparse
import sys
import time
from pathlib import Path

from twodisk import cli

ROOT = Path(__file__).resolve().parents[1]

JOBS = [
    ("sweep-eps", "sweep_eps"),
    ("sweep-grid", "sweep_grid"),
    ("condition", "condition"),
    ("projections", "projections"),
    ("solve", "solve"),
] + [("levels", p.stem) for p in sorted((ROOT / "configs").glob("levels_*.cfg"))]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = ap.parse_args(argv)
    status = 0
    for command, stem in JOBS:
        if args.only and stem not in args.only:
            continue
        t0 = time.perf_counter()
        code = cli.main([command, "--config", str(ROOT / "configs" / f"{stem}.cfg"),
                         "--out", str(args.out), "--threads", str(args.threads)])
        print(f"  [{stem}] exit {code} in {time.perf_counter() - t0:.1f} s")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
