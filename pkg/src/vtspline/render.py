"""Deterministic SVG heatmaps of splines and of their four-family decomposition.

Pixels are quantized to a diverging palette and run-length encoded per row,
so output is plain text that depends only on the spline and the options.
"""

from __future__ import annotations

import numpy as np

from .docio import fmt
from .tensor_spline import Family, TensorSpline, decompose

__all__ = [
    "DEFAULT_WINDOW",
    "DEFAULT_RESOLUTION",
    "raster",
    "decomposition_rasters",
    "render_spline",
    "render_decomposition",
]

DEFAULT_WINDOW = (-0.25, 1.25, -0.25, 1.25)
DEFAULT_RESOLUTION = 256
LEVELS = 16  # colour steps per sign
_NEG = np.array([33, 102, 172])
_POS = np.array([178, 24, 43])
_MID = np.array([247, 247, 247])


def raster(spline: TensorSpline, window=DEFAULT_WINDOW, res: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Values at pixel centres; row 0 is the top of the window."""
    x0, x1, y0, y1 = (float(v) for v in window)
    tx = x0 + (np.arange(res) + 0.5) * (x1 - x0) / res
    ty = y1 - (np.arange(res) + 0.5) * (y1 - y0) / res
    if not spline.atoms:
        return np.zeros((res, res))
    return np.asarray(spline.eval(tx[None, :], ty[:, None]), dtype=float)


def decomposition_rasters(spline: TensorSpline, window=DEFAULT_WINDOW, res: int = DEFAULT_RESOLUTION) -> list[np.ndarray]:
    return [raster(part, window, res) for part in decompose(spline)]


def _colour(q: int) -> str:
    base = _POS if q > 0 else _NEG
    s = abs(q) / LEVELS
    rgb = np.rint(_MID + s * (base - _MID)).astype(int)
    return "#%02x%02x%02x" % tuple(rgb)


def _quantize(values: np.ndarray, vmax: float) -> np.ndarray:
    if vmax <= 0.0:
        return np.zeros(values.shape, dtype=int)
    return np.clip(np.rint(values / vmax * LEVELS), -LEVELS, LEVELS).astype(int)


def _heatmap(values: np.ndarray, vmax: float, ox: float, oy: float) -> list[str]:
    q = _quantize(values, vmax)
    res_y, res_x = q.shape
    out = [f'<rect x="{fmt(ox)}" y="{fmt(oy)}" width="{res_x}" height="{res_y}" fill="{_colour(0)}"/>']
    for r in range(res_y):
        row = q[r]
        c = 0
        while c < res_x:
            e = c
            while e + 1 < res_x and row[e + 1] == row[c]:
                e += 1
            if row[c] != 0:
                out.append(
                    f'<rect x="{fmt(ox + c)}" y="{fmt(oy + r)}" width="{e - c + 1}" height="1" fill="{_colour(int(row[c]))}"/>'
                )
            c = e + 1
    return out


def _to_px(window, res: int, x: float, y: float) -> tuple[float, float]:
    x0, x1, y0, y1 = window
    return (x - x0) / (x1 - x0) * res, (y1 - y) / (y1 - y0) * res


def _overlay(spline: TensorSpline, window, res: int, ox: float, oy: float) -> list[str]:
    K1, K2 = spline.domain
    a, b = _to_px(window, res, K1.lo, K2.hi)
    c, d = _to_px(window, res, K1.hi, K2.lo)
    out = [
        f'<rect class="domain" x="{fmt(ox + a)}" y="{fmt(oy + b)}" width="{fmt(c - a)}" height="{fmt(d - b)}" '
        'fill="none" stroke="#000000" stroke-width="1" stroke-dasharray="3,3"/>'
    ]
    for atom in spline.atoms:
        if atom.family is Family.TENSOR_GREEN:
            px, py = _to_px(window, res, atom.x1, atom.x2)
            out.append(f'<circle class="knot-tg" cx="{fmt(ox + px)}" cy="{fmt(oy + py)}" r="3" fill="none" stroke="#000000"/>')
        elif atom.family is Family.POLY_GREEN:
            _, py = _to_px(window, res, 0.0, atom.x2)
            out.append(f'<line class="knot-pg" x1="{fmt(ox)}" y1="{fmt(oy + py)}" x2="{fmt(ox + 8)}" y2="{fmt(oy + py)}" stroke="#000000" stroke-width="2"/>')
        elif atom.family is Family.GREEN_POLY:
            px, _ = _to_px(window, res, atom.x1, 0.0)
            out.append(f'<line class="knot-gp" x1="{fmt(ox + px)}" y1="{fmt(oy + res)}" x2="{fmt(ox + px)}" y2="{fmt(oy + res - 8)}" stroke="#000000" stroke-width="2"/>')
    return out


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{fmt(width)}" height="{fmt(height)}" '
        f'viewBox="0 0 {fmt(width)} {fmt(height)}" shape-rendering="crispEdges">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _vmax(*rasters: np.ndarray) -> float:
    return float(max((np.max(np.abs(r)) for r in rasters), default=0.0))


def render_spline(spline: TensorSpline, window=DEFAULT_WINDOW, res: int = DEFAULT_RESOLUTION) -> str:
    values = raster(spline, window, res)
    body = _heatmap(values, _vmax(values), 0.0, 0.0) + _overlay(spline, window, res, 0.0, 0.0)
    return _document(res, res, body)


def render_decomposition(spline: TensorSpline, window=DEFAULT_WINDOW, res: int = DEFAULT_RESOLUTION, gap: int = 8) -> str:
    """Four panels (Green x Green, poly x Green, Green x poly, poly x poly) on a shared colour scale."""
    parts = decompose(spline)
    rasters = [raster(p, window, res) for p in parts]
    vmax = _vmax(*rasters)
    body: list[str] = []
    for k, (part, values) in enumerate(zip(parts, rasters)):
        ox = k * (res + gap)
        body.append(f'<g class="panel" id="panel-{k}">')
        body += _heatmap(values, vmax, ox, 0.0) + _overlay(part, window, res, ox, 0.0)
        body.append("</g>")
    return _document(4 * res + 3 * gap, res, body)
