"""Regenerate the three default sweeps as CSV files.

Usage: python3 scripts/run_figures.py [OUTDIR] [--seed N]
"""
import argparse
import time
from pathlib import Path

from heraldsim.expcli import parse_config, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    for fig in ("fig2", "fig3", "fig4"):
        out = args.outdir / f"{fig}.csv"
        t0 = time.perf_counter()
        text = run_sweep(parse_config(f"figure = {fig}\nseed = {args.seed}", {"out": str(out)}))
        rows = text.count("\n") - 1
        print(f"{fig}: {rows} rows -> {out} ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
