"""Bare-bones SVG line plots: stacked panels, axes, polylines. No dependencies."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, PANEL_H = 640, 220
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 24, 36
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _limits(ys: Sequence[np.ndarray]) -> tuple[float, float]:
    vals = np.concatenate([np.asarray(y, dtype=float) for y in ys]) if ys else np.zeros(1)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return -1.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo < 1e-9 * max(1.0, abs(hi)):
        pad = max(1e-3, abs(hi) * 0.1)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _panel(x: np.ndarray, series: dict, title: str, y0: float) -> list[str]:
    w = WIDTH - MARGIN_L - MARGIN_R
    h = PANEL_H - MARGIN_T - MARGIN_B
    top = y0 + MARGIN_T
    xlo, xhi = float(x[0]), float(x[-1])
    if xhi == xlo:
        xhi = xlo + 1.0
    ylo, yhi = _limits(list(series.values()))

    def px(v):
        return MARGIN_L + (v - xlo) / (xhi - xlo) * w

    def py(v):
        return top + h - (v - ylo) / (yhi - ylo) * h

    out = [
        f'<rect x="{MARGIN_L}" y="{top:.1f}" width="{w}" height="{h}" fill="none" stroke="#444"/>',
        f'<text x="{MARGIN_L}" y="{top - 6:.1f}" font-size="13">{escape(title)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = ylo + frac * (yhi - ylo)
        out.append(f'<text x="{MARGIN_L - 6}" y="{py(yv) + 4:.1f}" font-size="10" '
                   f'text-anchor="end">{yv:.3g}</text>')
        xv = xlo + frac * (xhi - xlo)
        out.append(f'<text x="{px(xv):.1f}" y="{top + h + 14:.1f}" font-size="10" '
                   f'text-anchor="middle">{xv:.3g}</text>')
    out.append(f'<text x="{MARGIN_L + w / 2:.1f}" y="{top + h + 30:.1f}" font-size="11" '
               f'text-anchor="middle">t</text>')
    for k, (label, y) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y) if math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{pts}"/>')
        out.append(f'<text x="{MARGIN_L + w - 4}" y="{top + 14 + 13 * k:.1f}" font-size="11" '
                   f'text-anchor="end" fill="{color}">{escape(label)}</text>')
    return out


def line_panels(x, panels: Sequence[tuple[str, dict]]) -> str:
    """One stacked panel per ``(title, {label: y})``, sharing the x axis."""
    x = np.asarray(x, dtype=float)
    height = PANEL_H * max(1, len(panels))
    body = []
    for k, (title, series) in enumerate(panels):
        body += _panel(x, series, title, k * PANEL_H)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
            f'font-family="sans-serif">\n' + "\n".join(body) + "\n</svg>\n")
