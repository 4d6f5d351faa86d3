#!/usr/bin/env python3
"""Run the shipped experiment presets and print a one-line summary for each.

Usage::

    python3 scripts/reproduce_figures.py [--out out] [--only s5a poisson2d] [--workers 4]

Every preset writes its CSV/SVG/JSON artifacts to ``<out>/<preset>``.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from difflms.harness import load_preset, run

FIGURES = ("s5a", "s5b-nb5", "s5b-nb10", "poisson2d")


def _line(name, summary):
    if summary["kind"] == "poisson-demo":
        m = summary["msd_db"]
        return (f"{name:10s} residual {summary['solver_residual']:.1e}  "
                f"MSD {m['min']:.1f}..{m['max']:.1f} dB  max |h - h_est| {summary['max_abs_error']:.3g}")
    parts = []
    for algo, e in summary["algorithms"].items():
        sim = e["simulated"]["msd_w_db"]
        th = (e["theory"] or {}).get("msd_w_db", float("nan"))
        parts.append(f"{algo} sim {sim:.2f} / theory {th:.2f} dB")
    return f"{name:10s} " + "; ".join(parts)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out")
    ap.add_argument("--only", nargs="*", default=list(FIGURES))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    for name in args.only:
        cfg = load_preset(name).with_overrides(workers=args.workers)
        t0 = time.perf_counter()
        res = run(cfg, out_dir=Path(args.out) / name)
        print(_line(name, res.summary), f"({time.perf_counter() - t0:.0f} s)", flush=True)


if __name__ == "__main__":
    main()
