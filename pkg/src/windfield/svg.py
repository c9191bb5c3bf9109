"""Minimal SVG 1.1 plots (polylines, markers, cell maps); no plotting library needed."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

_SIZE = 480
_PAD = 30
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


class Canvas:
    def __init__(self, lo, hi, title: str = ""):
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        span = np.maximum(hi - lo, 1e-12)
        self.lo, self.span = lo, span
        self.scale = (_SIZE - 2 * _PAD) / float(np.max(span))
        self.width = int(round(span[0] * self.scale + 2 * _PAD))
        self.height = int(round(span[1] * self.scale + 2 * _PAD))
        self.items: list[str] = []
        self.title = title

    def xy(self, p) -> tuple[float, float]:
        x = _PAD + (p[0] - self.lo[0]) * self.scale
        y = self.height - _PAD - (p[1] - self.lo[1]) * self.scale
        return round(float(x), 3), round(float(y), 3)

    def polyline(self, pts, color: str = _COLORS[0], width: float = 1.5):
        coords = " ".join(f"{x},{y}" for x, y in (self.xy(p) for p in pts))
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def dot(self, p, color: str = "#000000", r: float = 3.0):
        x, y = self.xy(p)
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{r}" fill="{color}"/>')

    def rect(self, p, w: float, h: float, color: str, opacity: float = 1.0):
        x, y = self.xy((p[0], p[1] + h))
        self.items.append(
            f'<rect x="{x}" y="{y}" width="{round(w * self.scale, 3)}" height="{round(h * self.scale, 3)}" '
            f'fill="{color}" fill-opacity="{opacity}" stroke="none"/>'
        )

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
        )
        x0, y0 = self.xy(self.lo)
        x1, y1 = self.xy(self.lo + self.span)
        frame = f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="#888888"/>\n'
        title = f'<text x="{_PAD}" y="{_PAD - 10}" font-family="sans-serif" font-size="12">{_escape(self.title)}</text>\n'
        return head + frame + title + "\n".join(self.items) + "\n</svg>\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _bounds(arrays: Iterable[np.ndarray], margin: float = 0.05):
    pts = np.vstack([np.atleast_2d(a)[:, :2] for a in arrays])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = margin * max(float(np.max(hi - lo)), 1e-6)
    return lo - pad, hi + pad


def curves_svg(curves: Sequence[np.ndarray], marks: Sequence = (), title: str = "", box=None) -> str:
    """Polylines of 2D point arrays plus marker dots."""
    arrays = [np.atleast_2d(c) for c in curves] + [np.atleast_2d(m) for m in marks]
    lo, hi = box if box is not None else _bounds(arrays)
    cv = Canvas(lo, hi, title)
    for i, c in enumerate(curves):
        cv.polyline(np.atleast_2d(c), _COLORS[i % len(_COLORS)])
    for m in marks:
        cv.dot(m)
    return cv.render()


def field_svg(axes: Sequence[np.ndarray], times: np.ndarray, selected: Optional[np.ndarray] = None, title: str = "",
              marks: Sequence = ()) -> str:
    """Cell map of first-hit times (8 shades) with an optional highlighted set, run-length merged per row."""
    xs, ys = axes
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    cv = Canvas((xs[0] - hx / 2, ys[0] - hy / 2), (xs[-1] + hx / 2, ys[-1] + hy / 2), title)
    finite = np.isfinite(times)
    tmax = float(times[finite].max()) if finite.any() else 1.0
    level = np.full(times.shape, -1)
    level[finite] = np.minimum((times[finite] / max(tmax, 1e-12) * 8).astype(int), 7)
    shades = [f"#{255 - 20 * k:02x}{255 - 12 * k:02x}ff" for k in range(8)]
    for j in range(len(ys)):
        i = 0
        while i < len(xs):
            lv = level[i, j]
            k = i
            while k + 1 < len(xs) and level[k + 1, j] == lv:
                k += 1
            if lv >= 0:
                cv.rect((xs[i] - hx / 2, ys[j] - hy / 2), (k - i + 1) * hx, hy, shades[lv])
            i = k + 1
    if selected is not None:
        for i, j in zip(*np.nonzero(selected)):
            inside = selected[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            if not inside.all():
                cv.rect((xs[i] - hx / 2, ys[j] - hy / 2), hx, hy, "#d62728", 0.9)
    for m in marks:
        cv.dot(m)
    return cv.render()
