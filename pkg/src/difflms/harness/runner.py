"""Monte-Carlo runs, theory-only predictions and their comparison."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import theory
from ..errors import UnsupportedCaseError
from ..estimators import simulate, trial_seed
from ..pde_model import SampleStream
from . import svg
from .config import ConfigError, ExperimentConfig
from .report import (SchemaError, as_float, db, read_curves_csv, read_json, write_curves_csv,
                     write_json)

TRIAL_BLOCK = 50
GATED_METRICS = ("msd_w", "msd_h")
METRICS = ("msd_w", "msd_h", "emse")


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------


def trial_blocks(n_trials: int, block: int = TRIAL_BLOCK) -> list[tuple[int, int]]:
    """Fixed partition of the trials; reduction happens in this order."""
    return [(s, min(s + block, n_trials)) for s in range(0, n_trials, block)]


def _simulate_block(cfg_json: str, algorithm: str, start: int, stop: int):
    cfg = ExperimentConfig.from_dict(json.loads(cfg_json))
    scen = cfg.build()
    regs = scen.regressors
    streams = [SampleStream(regs, scen.truth, trial_seed(cfg.seed, t)) for t in range(start, stop)]
    tr = simulate(scen.blocks, scen.truth.w, streams, scen.mu_for(algorithm), cfg.horizon,
                  algorithm=algorithm, policy=scen.policy, reduce=True)
    return tr.msd_w, tr.msd_h, tr.emse


def simulate_ensemble(cfg: ExperimentConfig, algorithm: str, workers: int | None = None):
    """Trial-averaged ``(msd_w, msd_h, emse)``, each ``(horizon, N)``.

    Trials are split into fixed blocks; blocks may run in worker processes
    and are summed in block order, so the result does not depend on the
    number of workers.
    """
    workers = cfg.workers if workers is None else workers
    cfg_json = cfg.to_json()
    blocks = trial_blocks(cfg.trials)
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_block, [cfg_json] * len(blocks),
                                  [algorithm] * len(blocks), *zip(*blocks)))
    else:
        parts = [_simulate_block(cfg_json, algorithm, a, b) for a, b in blocks]
    total = [np.zeros_like(p) for p in parts[0]]
    for p in parts:
        for acc, x in zip(total, p):
            acc += x
    return tuple(t / cfg.trials for t in total)


@dataclass
class MetricsSeries:
    """Trial-averaged curves of one algorithm, linear scale, ``(horizon, N)``.

    The network curve is the arithmetic mean over nodes.
    """

    algorithm: str
    msd_w: np.ndarray
    msd_h: np.ndarray
    emse: np.ndarray
    theory: theory.TheoryCurves | None = None
    steady_window: int = 1

    def network(self, metric: str) -> np.ndarray:
        return getattr(self, metric).mean(axis=1)

    def theory_network(self, metric: str) -> np.ndarray | None:
        return None if self.theory is None else getattr(self.theory, metric).mean(axis=1)

    def steady(self, metric: str) -> float:
        """Network value averaged over the last ``steady_window`` iterations."""
        return float(self.network(metric)[-self.steady_window:].mean())

    def steady_nodes(self, metric: str) -> np.ndarray:
        return getattr(self, metric)[-self.steady_window:].mean(axis=0)


# --------------------------------------------------------------------------
# Theory
# --------------------------------------------------------------------------


def classification_dict(cls: theory.SpectralClassification) -> dict:
    unit = cls.unit_circle_eigenvalues
    return {
        "verdict": cls.verdict,
        "spectral_radius": cls.spectral_radius,
        "reasons": list(cls.reasons),
        "algebraic_unit": cls.algebraic_unit,
        "geometric_unit": cls.geometric_unit,
        "defective": cls.defective,
        "unit_circle_eigenvalues": [[float(z.real), float(z.imag)] for z in unit],
        "eigenvalue_minus_one": bool(np.any(np.abs(cls.eigenvalues + 1.0) <= theory.UNIT_TOL)),
    }


def predict_algorithm(scen, algorithm: str, curves: bool = True) -> dict:
    """Theory report of one algorithm; non-convergence is reported, not raised."""
    art = scen.theory(algorithm)
    cls = theory.classify(art)
    out = {
        "classification": classification_dict(cls),
        "step_size_bounds": theory.step_size_bound(art),
        "mu": np.atleast_1d(scen.mu_for(algorithm)),
        "steady_state": None,
        "curves": None,
    }
    if not cls.convergent:
        return out
    try:
        ss = theory.steady_state(art)
        P = theory.unit_projector(art)
    except (UnsupportedCaseError, np.linalg.LinAlgError) as exc:
        out["classification"]["reasons"].append(f"steady state unavailable: {exc}")
        return out
    bias_vec = P @ art.w_true_network
    bias = theory.node_metrics(art, np.outer(bias_vec, bias_vec))
    out["steady_state"] = {
        "network": {**{f"{m}_db": db(getattr(ss, m).mean()) for m in METRICS},
                    **{m: float(getattr(ss, m).mean()) for m in METRICS}},
        "nodes": {f"{m}_db": db(getattr(ss, m)) for m in METRICS},
        "bias": {"msd_w": float(bias[0].mean()), "msd_h": float(bias[1].mean())},
    }
    if curves:
        tc = theory.learning_curves(art, scen.horizon)
        out["curves"] = {f"{m}_db": db(getattr(tc, m).mean(axis=1)) for m in METRICS}
        out["_curves"] = tc
    return out


def predict(cfg: ExperimentConfig, out_dir=None, write: bool = True, curves: bool = True) -> dict:
    """Theory-only report: classification, bounds, steady state and learning curves."""
    t0 = time.perf_counter()
    scen = cfg.build()
    algos = {a: predict_algorithm(scen, a, curves) for a in cfg.algorithms}
    report = {
        "kind": "theory",
        "schema_version": 1,
        "name": cfg.name,
        "horizon": cfg.horizon,
        "steady_window": cfg.steady_window,
        "n_nodes": cfg.n_nodes,
        "algorithms": {a: {k: v for k, v in d.items() if not k.startswith("_")} for a, d in algos.items()},
        "runtime_s": time.perf_counter() - t0,
    }
    if write:
        out = Path(out_dir or cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "theory.json", report)
        for a, d in algos.items():
            if d.get("curves") is not None:
                x = np.arange(cfg.horizon)
                svg.line_plot(out / f"theory_{a}.svg",
                              [{"x": x, "y": d["curves"][f"{m}_db"], "label": m} for m in METRICS],
                              title=f"{cfg.name}: predicted {a} learning curves")
    report["_curves"] = {a: d.get("_curves") for a, d in algos.items()}
    return report


# --------------------------------------------------------------------------
# Run
# --------------------------------------------------------------------------


@dataclass
class RunResult:
    config: ExperimentConfig
    series: dict
    summary: dict
    files: list = field(default_factory=list)


def _gap_stats(sim_db, th_db, skip):
    gap = np.asarray(sim_db, float) - np.asarray(th_db, float)
    tail = gap[skip:] if gap.size > skip else gap
    tail = tail[np.isfinite(tail)]
    if tail.size == 0:
        return gap, float("nan"), float("nan")
    return gap, float(np.abs(tail).max()), float(np.abs(tail).mean())


def run(cfg: ExperimentConfig, out_dir=None, write: bool = True, skip: int = 50) -> RunResult:
    """Monte-Carlo simulation of every configured algorithm plus theory overlays."""
    if cfg.scenario == "poisson-2d":
        from .poisson import poisson_demo

        return poisson_demo(cfg, out_dir=out_dir, write=write)
    t0 = time.perf_counter()
    scen = cfg.build()
    scen.regressors  # reject singular covariances before any compute
    out = Path(out_dir or cfg.out_dir)
    if write:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc}") from exc
    series, summary_algos, files = {}, {}, []
    for algo in cfg.algorithms:
        t1 = time.perf_counter()
        msd_w, msd_h, emse = simulate_ensemble(cfg, algo)
        pred = predict_algorithm(scen, algo, curves=True)
        ms = MetricsSeries(algo, msd_w, msd_h, emse, pred.get("_curves"), cfg.steady_window)
        series[algo] = ms
        entry = {
            "classification": pred["classification"],
            "step_size_bounds": pred["step_size_bounds"],
            "mu": pred["mu"],
            "simulated": {f"{m}_db": db(ms.steady(m)) for m in METRICS},
            "simulated_nodes": {f"{m}_db": db(ms.steady_nodes(m)) for m in METRICS},
            "theory": None,
            "delta_db": None,
            "curve_gap_db": None,
            "theory_settled": None,
            "runtime_s": None,
        }
        if pred["steady_state"] is not None:
            entry["theory"] = {f"{m}_db": pred["steady_state"]["network"][f"{m}_db"] for m in METRICS}
            entry["delta_db"] = {m: entry["simulated"][f"{m}_db"] - entry["theory"][f"{m}_db"]
                                 for m in METRICS}
            # is the predicted curve at its limit when the averaging window opens?
            start = cfg.horizon - cfg.steady_window
            entry["theory_settled"] = {
                m: bool(abs(db(ms.theory_network(m)[start]) - entry["theory"][f"{m}_db"]) <= 0.1)
                for m in METRICS}
            entry["curve_gap_db"] = {
                m: dict(zip(("max", "mean"),
                            _gap_stats(db(ms.network(m)), db(ms.theory_network(m)), skip)[1:]))
                for m in METRICS}
        entry["runtime_s"] = time.perf_counter() - t1
        summary_algos[algo] = entry
        if write:
            tw = None if ms.theory is None else ms.theory.msd_w
            th = None if ms.theory is None else ms.theory.msd_h
            files.append(write_curves_csv(out / f"sim_{algo}.csv", msd_w, msd_h, emse, tw, th))
            x = np.arange(cfg.horizon)
            lines = []
            for j, m in enumerate(("msd_w", "msd_h")):
                lines.append({"x": x, "y": db(ms.network(m)), "label": f"{m} simulated",
                              "color": svg.PALETTE[j]})
                if ms.theory is not None:
                    lines.append({"x": x, "y": db(ms.theory_network(m)), "label": f"{m} theory",
                                  "dashed": True, "color": svg.PALETTE[j]})
            files.append(svg.line_plot(out / f"learning_{algo}.svg", lines,
                                       title=f"{cfg.name}: network MSD, {algo}", ylabel="MSD (dB)"))
    summary = {
        "kind": "run",
        "schema_version": 1,
        "name": cfg.name,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "horizon": cfg.horizon,
        "steady_window": cfg.steady_window,
        "algorithms": summary_algos,
        "runtime_s": time.perf_counter() - t0,
    }
    if write:
        files.append(cfg.save(out / "config.json"))
        files.append(write_json(out / "summary.json", summary))
        # theory file for `compare`, same layout as `predict` output
        theory_report = {
            "kind": "theory", "schema_version": 1, "name": cfg.name, "horizon": cfg.horizon,
            "steady_window": cfg.steady_window, "n_nodes": cfg.n_nodes,
            "algorithms": {a: _theory_entry(series[a], summary_algos[a]) for a in cfg.algorithms},
        }
        files.append(write_json(out / "theory.json", theory_report))
    return RunResult(cfg, series, summary, files)


def _theory_entry(ms: MetricsSeries, entry: dict) -> dict:
    curves = None
    if ms.theory is not None:
        curves = {f"{m}_db": db(ms.theory_network(m)) for m in METRICS}
    steady = None
    if entry["theory"] is not None:
        steady = {"network": dict(entry["theory"])}
    return {"classification": entry["classification"], "steady_state": steady, "curves": curves}


# --------------------------------------------------------------------------
# Compare
# --------------------------------------------------------------------------


@dataclass
class CompareReport:
    """Gaps ``simulated - reference`` in dB.

    ``curve_max``/``curve_mean`` summarize the per-iteration network gap
    after the first ``skip`` iterations; ``steady`` is the gap of the
    steady-state values.  ``passed`` gates the MSD metrics only.
    """

    metrics: dict
    tolerance_db: float
    curve_tolerance_db: float
    skip: int
    window: int

    @property
    def passed(self) -> bool:
        for m in GATED_METRICS:
            g = self.metrics.get(m)
            if g is None:
                continue
            if not abs(g["steady"]) <= self.tolerance_db:
                return False
            if not g["curve_max"] <= self.curve_tolerance_db:
                return False
        return True

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tolerance_db": self.tolerance_db,
                "curve_tolerance_db": self.curve_tolerance_db, "skip": self.skip,
                "window": self.window,
                "metrics": {m: {k: v for k, v in g.items() if k != "gap"} for m, g in self.metrics.items()}}


def _net_column(data, name):
    j = data["nodes"].index("net") if "net" in data["nodes"] else None
    if j is None:
        raise SchemaError("CSV has no network rows")
    return data[name][:, j]


def compare(sim_csv, reference, algorithm: str | None = None, skip: int = 50,
            window: int | None = None, tolerance_db: float = 1.0,
            curve_tolerance_db: float = 2.0) -> CompareReport:
    """Compare a simulation CSV with a theory JSON (or a second CSV).

    With a CSV reference the simulated columns of both files are compared,
    so identical inputs give zero gaps.
    """
    sim = read_curves_csv(sim_csv)
    horizon = sim["iter"].size
    ref_path = Path(reference)
    if ref_path.suffix.lower() == ".csv":
        ref = read_curves_csv(ref_path)
        if ref["iter"].size != horizon or not np.array_equal(ref["iter"], sim["iter"]):
            raise SchemaError(f"horizons differ: {horizon} vs {ref['iter'].size}")
        if ref["nodes"] != sim["nodes"]:
            raise SchemaError("node sets differ")
        window = window or max(1, horizon // 10)
        ref_curves = {m: _net_column(ref, f"{m}_db") for m in METRICS}
        ref_steady = {m: float(db(np.mean(10 ** (ref_curves[m][-window:] / 10)))) for m in METRICS}
    else:
        data = read_json(ref_path)
        if data.get("kind") != "theory" or "algorithms" not in data:
            raise SchemaError(f"{ref_path}: not a theory report")
        algos = data["algorithms"]
        if algorithm is None:
            stem = Path(sim_csv).stem
            algorithm = stem[4:] if stem.startswith("sim_") and stem[4:] in algos else next(iter(algos))
        if algorithm not in algos:
            raise SchemaError(f"{ref_path}: no entry for algorithm {algorithm!r}")
        entry = algos[algorithm]
        if entry.get("steady_state") is None:
            raise SchemaError(f"{ref_path}: no steady-state prediction for {algorithm} "
                              f"({entry['classification']['verdict']})")
        if int(data.get("horizon", -1)) != horizon:
            raise SchemaError(f"horizons differ: simulation {horizon}, theory {data.get('horizon')}")
        window = window or int(data.get("steady_window") or max(1, horizon // 10))
        curves = entry.get("curves") or {}
        ref_curves = {m: np.array([as_float(v) for v in curves[f"{m}_db"]]) if f"{m}_db" in curves
                      else None for m in METRICS}
        ref_steady = {m: as_float(entry["steady_state"]["network"][f"{m}_db"]) for m in METRICS}
    if window > horizon:
        raise SchemaError("steady-state window exceeds the horizon")

    metrics = {}
    for m in METRICS:
        sim_db = _net_column(sim, f"{m}_db")
        steady_sim = float(db(np.mean(10 ** (sim_db[-window:] / 10))))
        g = {"steady": steady_sim - ref_steady[m], "simulated_steady_db": steady_sim,
             "reference_steady_db": ref_steady[m], "curve_max": float("nan"),
             "curve_mean": float("nan"), "gap": None}
        if ref_curves[m] is not None:
            gap, gmax, gmean = _gap_stats(sim_db, ref_curves[m], skip)
            g.update(curve_max=gmax, curve_mean=gmean, gap=gap)
        metrics[m] = g
    return CompareReport(metrics, tolerance_db, curve_tolerance_db, skip, window)
