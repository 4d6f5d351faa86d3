"""Command-line interface.

Exit status: 0 on success, 1 when ``compare`` finds a gap above tolerance,
2 on configuration or input-schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import DomainError, IterationLimitError
from .config import ExperimentConfig, load_preset, preset_names
from .poisson import poisson_demo
from .report import jsonable
from .runner import compare, predict, run


def _load(args) -> ExperimentConfig:
    if args.preset and args.config:
        raise DomainError("give either a configuration file or --preset, not both")
    if args.preset:
        cfg = load_preset(args.preset)
    elif args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        raise DomainError("a configuration file or --preset is required")
    return cfg.with_overrides(seed=args.seed, trials=args.trials, out_dir=args.out_dir)


def _config_args(p):
    p.add_argument("config", nargs="?", help="experiment configuration (JSON)")
    p.add_argument("--preset", choices=preset_names(), help="use a shipped preset")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--trials", type=int, help="number of Monte-Carlo trials")
    p.add_argument("--out-dir", help="directory for CSV, SVG and JSON outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="difflms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _config_args(sub.add_parser("run", help="Monte-Carlo simulation with theory overlays"))
    _config_args(sub.add_parser("predict", help="theory-only report"))
    _config_args(sub.add_parser("poisson-demo", help="2D Poisson input estimation"))
    p = sub.add_parser("compare", help="gap report between a simulation CSV and a theory report")
    p.add_argument("sim_csv")
    p.add_argument("reference", help="theory JSON from run/predict, or another simulation CSV")
    p.add_argument("--algorithm", help="algorithm entry of the theory report")
    p.add_argument("--skip", type=int, default=50, help="initial iterations excluded from curve gaps")
    p.add_argument("--window", type=int, help="steady-state averaging window")
    p.add_argument("--tolerance-db", type=float, default=1.0)
    p.add_argument("--curve-tolerance-db", type=float, default=2.0)
    sub.add_parser("presets", help="list shipped presets")
    return parser


def _print(obj):
    print(json.dumps(jsonable(obj), indent=2))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            print("\n".join(preset_names()))
            return 0
        if args.command == "compare":
            rep = compare(args.sim_csv, args.reference, args.algorithm, args.skip, args.window,
                          args.tolerance_db, args.curve_tolerance_db)
            _print(rep.to_dict())
            return 0 if rep.passed else 1
        cfg = _load(args)
        if args.command == "predict":
            rep = predict(cfg)
            rep.pop("_curves", None)
            for a in rep["algorithms"].values():
                a.pop("curves", None)
            _print(rep)
            return 0
        if args.command == "poisson-demo":
            res = poisson_demo(cfg)
            _print(res.summary)
            return 0
        res = run(cfg)
        _print(res.summary)
        return 0
    except (DomainError, IterationLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
