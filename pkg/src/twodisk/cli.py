"""twodisk command line: one subcommand per study, CSV + JSON (+ SVG) into --out."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments as ex


def _write_record(rec: ex.RunRecord, out: Path, stem: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(rec.to_json() + "\n", encoding="utf-8")


def cmd_solve(cfg, out, threads):
    rec, rows = ex.run_solve(cfg)
    ex.write_csv(out / f"{cfg.name}_boundary.csv", rec.columns, rows)
    _write_record(rec, out, cfg.name)
    return rec


def _table(runner):
    def cmd(cfg, out, threads):
        rec = runner(cfg, threads=threads)
        ex.write_csv(out / f"{cfg.name}.csv", rec.columns, rec.rows)
        if "singular_values" in rec.extra:
            ex.write_csv(out / f"{cfg.name}_spectrum.csv", ("index", "sigma"),
                         list(enumerate(rec.extra["singular_values"])))
        _write_record(rec, out, cfg.name)
        return rec
    return cmd


def cmd_levels(cfg, out, threads):
    rec, _ = ex.run_level_curves(cfg, out)
    _write_record(rec, out, cfg.name)
    return rec


COMMANDS = {
    "solve": (cmd_solve, "solve one configuration and report densities, flux and constants"),
    "sweep-eps": (_table(ex.run_eps_error_sweep), "flux error of both representations over eps"),
    "sweep-grid": (_table(ex.run_grid_error_sweep), "flux error of both representations over M"),
    "condition": (_table(ex.run_condition_sweep), "singular values and condition numbers over eps"),
    "projections": (_table(ex.run_projection_study), "projections onto small singular vectors"),
    "levels": (cmd_levels, "sampled field and contour SVG"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twodisk", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, type=Path, help="key = value config file")
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for sweeps (default 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = ex.load_config(args.config)
    except (OSError, ex.ConfigError) as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    fn, _ = COMMANDS[args.command]
    try:
        rec = fn(cfg, args.out, args.threads)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for msg in rec.failures:
        print(f"failed: {msg}", file=sys.stderr)
    print(f"{args.command}: wrote {args.out}/{cfg.name}.* ({len(rec.failures)} failures)")
    return 0 if rec.ok else 1


if __name__ == "__main__":
    sys.exit(main())
