#!/usr/bin/env python3
"""Report how long the predicted learning curve of a preset needs to settle.

For each seed the theory curve is propagated until the network MSD stays
within ``--tol-db`` of its steady-state value.  Used to choose the seed and
horizon of the ``s5a`` preset, whose slowest mode sits very close to one.

Usage::

    python3 scripts/scan_slow_mode.py s5a --seeds 0 40 --horizon 80000
"""

from __future__ import annotations

import argparse

import numpy as np

from difflms import theory
from difflms.harness import load_preset
from difflms.harness.report import db


def settle_iteration(art, horizon, tol_db, metric="msd_h"):
    target = db(getattr(theory.steady_state(art), metric).mean())
    curve = db(getattr(theory.learning_curves(art, horizon), metric).mean(axis=1))
    off = np.flatnonzero(np.abs(curve - target) > tol_db)
    return 0 if off.size == 0 else int(off[-1]) + 1


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("preset")
    ap.add_argument("--seeds", type=int, nargs=2, default=(0, 20), metavar=("FIRST", "STOP"))
    ap.add_argument("--horizon", type=int, default=60000)
    ap.add_argument("--tol-db", type=float, default=0.1)
    args = ap.parse_args(argv)
    for seed in range(*args.seeds):
        art = load_preset(args.preset).with_overrides(seed=seed).build().theory()
        rho_slow = np.sort(np.abs(np.linalg.eigvals(art.calB)))
        slow = rho_slow[rho_slow < 1 - theory.UNIT_TOL].max()
        it = settle_iteration(art, args.horizon, args.tol_db)
        flag = "" if it < args.horizon else "  (not settled)"
        print(f"seed {seed:3d}  slowest non-unit mode {slow:.8f}  settles at {it}{flag}", flush=True)


if __name__ == "__main__":
    main()
