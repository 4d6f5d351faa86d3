"""CSV and JSON artifacts.

Learning-curve CSV schema (fixed header and column order)::

    iter,node_id,msd_w_db,msd_h_db,emse_db,msd_w_theory_db,msd_h_theory_db

One block of rows per iteration: nodes ``1..N`` followed by the network
average, whose ``node_id`` is ``net``.  Averages are taken on linear values
before conversion to dB.  Theory columns are empty when no prediction is
available.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import ConfigError

CSV_COLUMNS = ("iter", "node_id", "msd_w_db", "msd_h_db", "emse_db", "msd_w_theory_db",
               "msd_h_theory_db")
NET = "net"


class SchemaError(ConfigError):
    """An input artifact does not follow the expected layout."""


def db(x):
    """``10 log10(x)``; zero maps to ``-inf``."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.10g}"


def write_curves_csv(path, msd_w, msd_h, emse, theory_w=None, theory_h=None) -> Path:
    """Write per-node linear curves ``(horizon, N)`` in the documented schema."""
    path = Path(path)
    horizon, n = msd_w.shape
    cols = [msd_w, msd_h, emse, theory_w, theory_h]
    cols = [None if c is None else np.column_stack([c, c.mean(axis=1)]) for c in cols]
    cols = [None if c is None else db(c) for c in cols]
    ids = [str(k + 1) for k in range(n)] + [NET]
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for i in range(horizon):
                for j, node in enumerate(ids):
                    w.writerow([i, node] + [_fmt(None if c is None else c[i, j]) for c in cols])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_curves_csv(path) -> dict:
    """Read a learning-curve CSV.

    Returns ``{"iter": (H,), "nodes": [ids], column: (H, len(ids))}`` with
    NaN for empty cells.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise SchemaError(f"{path}: header {header} does not match {list(CSV_COLUMNS)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    nodes = []
    for r in rows:
        if r[1] in nodes:
            break
        nodes.append(r[1])
    if len(rows) % len(nodes):
        raise SchemaError(f"{path}: ragged node blocks")
    horizon = len(rows) // len(nodes)
    out = {"nodes": nodes}
    try:
        iters = np.array([int(rows[i * len(nodes)][0]) for i in range(horizon)])
        for c, name in enumerate(CSV_COLUMNS[2:], start=2):
            vals = np.array([float(r[c]) if r[c] != "" else np.nan for r in rows])
            out[name] = vals.reshape(horizon, len(nodes))
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed row ({exc})") from exc
    for i in range(horizon):
        block = [r[1] for r in rows[i * len(nodes):(i + 1) * len(nodes)]]
        if block != nodes:
            raise SchemaError(f"{path}: node order changes at iteration {iters[i]}")
    out["iter"] = iters
    return out


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(jsonable(data), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def as_float(v) -> float:
    """Inverse of the JSON float encoding used by :func:`write_json`."""
    if v is None:
        return float("nan")
    if v == "inf":
        return float("inf")
    if v == "-inf":
        return float("-inf")
    return float(v)
