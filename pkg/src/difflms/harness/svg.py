"""Minimal SVG writers for learning curves and 2D heatmaps."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _nice_ticks(lo, hi, n=6):
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _downsample(x, y, max_points=1500):
    if x.size <= max_points:
        return x, y
    idx = np.unique(np.linspace(0, x.size - 1, max_points).round().astype(int))
    return x[idx], y[idx]


def line_plot(path, series, title="", xlabel="iteration", ylabel="dB") -> Path:
    """Write a line chart.

    ``series`` is a list of dicts with keys ``x``, ``y``, ``label`` and
    optionally ``dashed`` and ``color``.  Non-finite points are dropped.
    """
    path = Path(path)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    clean = []
    for s in series:
        x, y = np.asarray(s["x"], float), np.asarray(s["y"], float)
        ok = np.isfinite(x) & np.isfinite(y)
        clean.append((s, *_downsample(x[ok], y[ok])))
    xs = np.concatenate([c[1] for c in clean if c[1].size] or [np.zeros(1)])
    ys = np.concatenate([c[2] for c in clean if c[2].size] or [np.zeros(1)])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0) if y1 > y0 else 1.0
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           f'fill="none" stroke="black"/>']
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{MARGIN["left"]}" x2="{MARGIN["left"] + pw}" y1="{py(t):.1f}" '
                   f'y2="{py(t):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{t:g}</text>')
    for t in _nice_ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>')
    for j, (s, x, y) in enumerate(clean):
        if not x.size:
            continue
        color = s.get("color", PALETTE[j % len(PALETTE)])
        dash = ' stroke-dasharray="6 4"' if s.get("dashed") else ""
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = MARGIN["top"] + 16 + 16 * j
        lx = MARGIN["left"] + pw - 170
        out.append(f'<line x1="{lx}" x2="{lx + 24}" y1="{ly - 4}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{escape(s.get("label", ""))}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path


def _color(t):
    """Blue-white-red map on ``t`` in [0, 1]."""
    t = float(np.clip(t, 0.0, 1.0))
    if t < 0.5:
        a = t / 0.5
        r, g, b = 59 + a * (247 - 59), 76 + a * (247 - 76), 192 + a * (247 - 192)
    else:
        a = (t - 0.5) / 0.5
        r, g, b = 247 + a * (180 - 247), 247 + a * (4 - 247), 247 + a * (38 - 247)
    return f"rgb({int(r)},{int(g)},{int(b)})"


def heatmap(path, grid, title="", label="") -> Path:
    """Write a heatmap of a 2D array; row index runs downwards."""
    path = Path(path)
    grid = np.asarray(grid, dtype=float)
    rows, cols = grid.shape
    cell = min(360 // max(rows, cols), 40)
    left, top = 40, 40
    finite = grid[np.isfinite(grid)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    width = left + cols * cell + 110
    height = top + rows * cell + 40
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for i in range(rows):
        for j in range(cols):
            v = grid[i, j]
            fill = _color((v - lo) / span) if np.isfinite(v) else "#888"
            out.append(f'<rect x="{left + j * cell}" y="{top + i * cell}" width="{cell}" '
                       f'height="{cell}" fill="{fill}"><title>({i},{j}) {v:.4g}</title></rect>')
    bx = left + cols * cell + 20
    steps = 20
    for s in range(steps):
        t = 1.0 - s / (steps - 1)
        out.append(f'<rect x="{bx}" y="{top + s * rows * cell / steps:.1f}" width="16" '
                   f'height="{rows * cell / steps + 0.5:.1f}" fill="{_color(t)}"/>')
    out.append(f'<text x="{bx + 22}" y="{top + 10}">{hi:.3g}</text>')
    out.append(f'<text x="{bx + 22}" y="{top + rows * cell}">{lo:.3g}</text>')
    out.append(f'<text x="{bx}" y="{top + rows * cell + 24}">{escape(label)}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path
