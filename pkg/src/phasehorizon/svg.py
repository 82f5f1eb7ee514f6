"""Small deterministic SVG line plots (no plotting dependency).

Output bytes depend only on the data: coordinates are printed with a fixed
format and no timestamps or ids are emitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=80, right=170, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")
AXES = {
    "dispersion": ("free-space wavelength (um)", "index"),
    "potential": ("oscillator time T (um)", "Omega^2 (1/um^2)"),
    "spectrum": ("Omega0 (1/um)", "|beta|^2"),
}


class PlotError(ValueError):
    pass


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def series_from_table(table) -> list[Series]:
    """First column is x, every other numeric column one curve."""
    rows = np.asarray(table.rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] < 2:
        raise PlotError("table is empty")
    x = rows[:, 0]
    return [Series(name, x, rows[:, i + 1]) for i, name in enumerate(table.columns[1:])]


def series_from_spectrum(spectrum) -> list[Series]:
    """One curve per (polarization, method), x = Omega0, ordered by Omega0."""
    groups: dict[str, list[tuple[float, float]]] = {}
    for row in spectrum.rows:
        if row.result is None or not math.isfinite(row.omega0):
            continue
        key = f"{row.mode.polarization.value} {row.method}"
        groups.setdefault(key, []).append((row.omega0, row.beta_abs2))
    if not groups:
        raise PlotError("spectrum has no successful rows")
    out = []
    for key in sorted(groups):
        pts = sorted(groups[key])
        out.append(Series(key, np.array([p[0] for p in pts]), np.array([p[1] for p in pts])))
    return out


def series_from_trace(trace, points: int = 801) -> list[Series]:
    t, w2 = trace.sample(points)
    return [Series("Omega^2", np.asarray(t, dtype=float), np.asarray(w2, dtype=float))]


def emit_plot(table, kind: str, path: str | Path | None = None, log_scale: bool = False, title: str | None = None) -> str:
    """Render ``table`` as an SVG line plot; returns the document and writes it when ``path`` is given.

    ``table`` may be a column table (``columns``/``rows``), a planar Spectrum,
    a PotentialTrace or a list of Series.
    """
    if kind not in AXES:
        raise PlotError(f"unknown plot kind {kind!r}")
    if isinstance(table, (list, tuple)) and all(isinstance(s, Series) for s in table):
        series = list(table)
    elif hasattr(table, "columns") and hasattr(table, "rows"):
        series = series_from_table(table)
    elif hasattr(table, "rows"):
        if len(table.rows) == 0:
            raise PlotError("table is empty")
        series = series_from_spectrum(table)
    elif hasattr(table, "sample"):
        series = series_from_trace(table)
    else:
        raise PlotError(f"cannot plot {type(table).__name__}")
    if not series or any(s.x.size == 0 for s in series):
        raise PlotError("table is empty")
    xlabel, ylabel = AXES[kind]
    doc = render(series, xlabel, ylabel, log_scale, title or kind)
    if path is not None:
        Path(path).write_text(doc, newline="")
    return doc


def _num(x: float) -> str:
    return f"{x:.2f}"


def _tick(x: float) -> str:
    return f"{x:.4g}"


def _linear_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def render(series: Sequence[Series], xlabel: str, ylabel: str, log_scale: bool, title: str) -> str:
    xs = np.concatenate([s.x for s in series])
    ys = np.concatenate([s.y for s in series])
    finite = np.isfinite(xs)
    x_lo, x_hi = float(np.min(xs[finite])), float(np.max(xs[finite]))
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5

    if log_scale:
        pos = ys[np.isfinite(ys) & (ys > 0)]
        floor = float(np.min(pos)) if pos.size else 1e-30
        top = float(np.max(pos)) if pos.size else 1.0
        y_lo, y_hi = math.floor(math.log10(floor)), math.ceil(math.log10(top))
        if y_hi == y_lo:
            y_hi += 1

        def ymap(y):
            y = np.where(np.isfinite(y) & (y > 0), y, 10.0**y_lo)
            return np.log10(np.maximum(y, 10.0**y_lo))

        step = max(1, (y_hi - y_lo) // 6)
        yticks = [(float(e), f"1e{e}") for e in range(y_lo, y_hi + 1, step)]
    else:
        fin = ys[np.isfinite(ys)]
        y_lo, y_hi = (float(np.min(fin)), float(np.max(fin))) if fin.size else (0.0, 1.0)
        if y_hi == y_lo:
            pad = max(abs(y_lo) * 0.1, 1.0)
            y_lo, y_hi = y_lo - pad, y_hi + pad

        def ymap(y):
            return np.where(np.isfinite(y), y, y_lo)

        yticks = [(t, _tick(t)) for t in _linear_ticks(y_lo, y_hi)]

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (np.asarray(x) - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return MARGIN["top"] + ph - (np.asarray(y) - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _linear_ticks(x_lo, x_hi):
        x = float(px(t))
        y0 = MARGIN["top"] + ph
        out.append(f'<line x1="{_num(x)}" y1="{y0}" x2="{_num(x)}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{y0 + 20}" text-anchor="middle" font-family="sans-serif" font-size="11">{_tick(t)}</text>')
    for t, label in yticks:
        y = float(py(t))
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{_num(y)}" x2="{MARGIN["left"]}" y2="{_num(y)}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{_num(y + 4)}" text-anchor="end" font-family="sans-serif" font-size="11">{escape(label)}</text>')
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-family="sans-serif" font-size="13">{escape(xlabel)}</text>'
    )
    cy = MARGIN["top"] + ph / 2
    out.append(
        f'<text x="18" y="{cy:.1f}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {cy:.1f})">{escape(ylabel)}</text>'
    )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        xx, yy = px(s.x), py(ymap(np.asarray(s.y, dtype=float)))
        pts = " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(xx, yy))
        out.append(f'<polyline class="curve" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
