"""Static SVG line plots with a logarithmic ordinate.

Columns named ``<channel>.<label>`` are grouped into one panel per
channel; the first non-index column is the abscissa.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .outputs import read_csv

PANEL_W, PANEL_H = 360, 260
PAD_L, PAD_R, PAD_T, PAD_B = 56, 12, 28, 36
COLORS = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#555555")


class PlotError(ValueError):
    """CSV content cannot be plotted."""


def _range(lo: float, hi: float, margin: float = 0.05):
    if hi == lo:
        d = abs(lo) * 0.05 or 1.0
        return lo - d, hi + d
    d = (hi - lo) * margin
    return lo - d, hi + d


def panels_from_columns(names):
    """(abscissa column, {channel: [column, ...]}) in file order."""
    if not names:
        raise PlotError("CSV has no columns")
    cols = [c for c in names if c not in ("k", "index")]
    if len(cols) < 2:
        raise PlotError("CSV needs an abscissa and at least one series")
    x, series = cols[0], cols[1:]
    groups = {}
    for c in series:
        groups.setdefault(c.split(".", 1)[0], []).append(c)
    return x, groups


def render(names, data, title: str = "") -> str:
    """SVG text for the table ``data`` with column ``names``."""
    if data.size == 0 or data.shape[0] == 0:
        raise PlotError("CSV has no data rows; nothing to plot")
    xname, groups = panels_from_columns(names)
    col = {n: i for i, n in enumerate(names)}
    x = data[:, col[xname]]
    width = PANEL_W * len(groups)
    height = PANEL_H + (20 if title else 0)
    top = 20 if title else 0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2:.2f}" y="14" text-anchor="middle">{_esc(title)}</text>')
    for p, (chan, cols) in enumerate(groups.items()):
        ys = data[:, [col[c] for c in cols]]
        pos = ys[ys > 0]
        if pos.size == 0:
            raise PlotError(f"panel {chan!r} has no positive values for a log axis")
        lx0, lx1 = _range(float(x.min()), float(x.max()))
        ly0, ly1 = _range(math.log10(pos.min()), math.log10(pos.max()))
        ox, oy = p * PANEL_W + PAD_L, top + PAD_T
        w, h = PANEL_W - PAD_L - PAD_R, PANEL_H - PAD_T - PAD_B

        def sx(v):
            return ox + (v - lx0) / (lx1 - lx0) * w

        def sy(v):
            return oy + h - (math.log10(v) - ly0) / (ly1 - ly0) * h

        out.append(f'<g id="panel-{_esc(chan)}">')
        out.append(f'<rect x="{ox}" y="{oy}" width="{w}" height="{h}" fill="none" stroke="black"/>')
        out.append(f'<text x="{ox + w / 2:.2f}" y="{oy - 8}" text-anchor="middle">{_esc(chan)}</text>')
        out.append(f'<text x="{ox + w / 2:.2f}" y="{oy + h + 30}" text-anchor="middle">{_esc(xname)}</text>')
        for e in range(math.ceil(ly0), math.floor(ly1) + 1):
            yy = sy(10.0**e)
            out.append(f'<line x1="{ox}" y1="{yy:.2f}" x2="{ox + w}" y2="{yy:.2f}" stroke="#dddddd"/>')
            out.append(f'<text x="{ox - 4}" y="{yy + 4:.2f}" text-anchor="end">1e{e}</text>')
        for j, c in enumerate(cols):
            yv = data[:, col[c]]
            ok = yv > 0
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], yv[ok]))
            color = COLORS[j % len(COLORS)]
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'data-series="{_esc(c)}" points="{pts}"/>')
            out.append(f'<text x="{ox + w - 4}" y="{oy + 14 + 13 * j}" text-anchor="end" '
                       f'fill="{color}">{_esc(c.split(".", 1)[-1])}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def plot_csv(path, out_path=None) -> Path:
    path = Path(path)
    _, names, data = read_csv(path)
    if not names:
        raise PlotError(f"{path}: empty CSV; nothing to plot")
    svg = render(names, data, path.stem)
    out = Path(out_path) if out_path else path.with_suffix(".svg")
    out.write_text(svg)
    return out
