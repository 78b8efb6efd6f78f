"""Static SVG charts for curve families and effects tables.

Hand-rolled SVG 1.1 documents: curve families render as line charts with
individual curves in grey and the average highlighted; effects tables
render as signed bar charts grouped by feature and delta. Output is
deterministic for identical inputs.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .interpret import CurveFamily, EffectsTable, _export_sample

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 62, "right": 16, "top": 24, "bottom": 46}
CURVE_COLOR = "#bbbbbb"
AVERAGE_COLOR = "#d62728"
BAR_NEG = "#d62728"
BAR_POS = "#2ca02c"

_HEADER = ('<?xml version="1.0" encoding="UTF-8"?>\n'
           '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
           '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">\n')


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi == lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = np.ceil(lo / step) * step
    ticks = np.arange(start, hi + step * 1e-9, step)
    return ticks[(ticks >= lo - step * 1e-9) & (ticks <= hi + step * 1e-9)]


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".") if v != int(v) else str(int(v))


class _Canvas:
    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi
        self.plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        self.parts: list[str] = []

    def px(self, x):
        span = self.x_hi - self.x_lo or 1.0
        return MARGIN["left"] + (x - self.x_lo) / span * self.plot_w

    def py(self, y):
        span = self.y_hi - self.y_lo or 1.0
        return MARGIN["top"] + (self.y_hi - y) / span * self.plot_h

    def axes(self, x_label, y_label, x_ticks, y_ticks):
        left, top = MARGIN["left"], MARGIN["top"]
        bottom = top + self.plot_h
        right = left + self.plot_w
        self.parts.append(f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" '
                          f'stroke="black"/>')
        self.parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" '
                          f'stroke="black"/>')
        for t in x_ticks:
            x = self.px(t)
            self.parts.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" '
                              f'y2="{bottom + 5}" stroke="black"/>')
            self.parts.append(f'<text x="{x:.2f}" y="{bottom + 18}" font-size="11" '
                              f'text-anchor="middle">{_fmt(t)}</text>')
        for t in y_ticks:
            y = self.py(t)
            self.parts.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" '
                              f'y2="{y:.2f}" stroke="black"/>')
            self.parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" '
                              f'text-anchor="end">{_fmt(t)}</text>')
        self.parts.append(f'<text x="{left + self.plot_w / 2:.2f}" y="{HEIGHT - 8}" '
                          f'font-size="13" text-anchor="middle">{escape(x_label)}</text>')
        self.parts.append(f'<text x="16" y="{top + self.plot_h / 2:.2f}" font-size="13" '
                          f'text-anchor="middle" transform="rotate(-90 16 '
                          f'{top + self.plot_h / 2:.2f})">{escape(y_label)}</text>')

    def polyline(self, xs, ys, color, width=1.0):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline fill="none" stroke="{color}" '
                          f'stroke-width="{width}" points="{pts}"/>')

    def rect(self, x0, x1, y0, y1, color, title=None):
        x, w = min(x0, x1), abs(x1 - x0)
        ytop, h = self.py(max(y0, y1)), abs(self.py(y0) - self.py(y1))
        body = f'<rect x="{self.px(x):.2f}" y="{ytop:.2f}" ' \
               f'width="{self.px(self.x_lo + w) - self.px(self.x_lo):.2f}" ' \
               f'height="{h:.2f}" fill="{color}">'
        if title:
            body += f"<title>{escape(title)}</title>"
        self.parts.append(body + "</rect>")

    def document(self, title) -> str:
        body = "\n".join(self.parts)
        return (f"{_HEADER}"
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
                f"<title>{escape(title)}</title>\n"
                f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
                f"{body}\n</svg>\n")


def render_curves(family: CurveFamily, max_curves: int = 100, seed: int = 0) -> str:
    """Line chart: sampled individual curves in grey, the average on top."""
    if family.n_instances == 0:
        raise ValueError("empty curve family")
    _, curves = _export_sample(family, max_curves, seed)
    xs = family.grid.values
    y_all = np.concatenate([curves.ravel(), family.average])
    y_lo, y_hi = float(y_all.min()), float(y_all.max())
    if family.centered:
        y_lo, y_hi = min(y_lo, 0.0), max(y_hi, 0.0)
    pad = 0.02 * (y_hi - y_lo or 1.0)
    canvas = _Canvas(float(xs.min()), float(xs.max()), y_lo - pad, y_hi + pad)
    y_ticks = _ticks(y_lo, y_hi)
    if family.centered and not np.any(y_ticks == 0.0):
        y_ticks = np.sort(np.append(y_ticks, 0.0))
    canvas.axes(family.grid.feature, "switching probability",
                _ticks(float(xs.min()), float(xs.max())), y_ticks)
    for row in curves:
        canvas.polyline(xs, row, CURVE_COLOR, 1.0)
    canvas.polyline(xs, family.average, AVERAGE_COLOR, 2.5)
    label = family.condition.describe() if family.condition else "all instances"
    kind = "centered curves" if family.centered else "curves"
    return canvas.document(f"{family.grid.feature} {kind} ({label})")


def render_effects(table: EffectsTable) -> str:
    """Signed bar chart of effects: one bar per table row, grouped by
    feature and delta, bar heights in percent."""
    rows = [r for r in table.rows if r.value is not None]
    if not rows:
        raise ValueError("empty effects table")
    values = [r.value * 100.0 for r in rows]
    y_lo, y_hi = min(min(values), 0.0), max(max(values), 0.0)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    canvas = _Canvas(0.0, float(len(rows)), y_lo - pad, y_hi + pad)
    canvas.axes("feature / delta / segment", "market share change (%)",
                np.array([]), _ticks(y_lo, y_hi))
    zero_y = canvas.py(0.0)
    canvas.parts.append(
        f'<line x1="{MARGIN["left"]}" y1="{zero_y:.2f}" '
        f'x2="{MARGIN["left"] + canvas.plot_w}" y2="{zero_y:.2f}" '
        f'stroke="#888888" stroke-dasharray="3,3"/>')
    group = None
    for i, (r, v) in enumerate(zip(rows, values)):
        color = BAR_NEG if v < 0 else BAR_POS
        title = f"{r.feature} {r.delta:+g} {r.segment} {r.kind}: {v:.2f}%"
        canvas.rect(i + 0.15, i + 0.85, 0.0, v, color, title)
        key = (r.feature, r.delta)
        if key != group:
            group = key
            x = canvas.px(i)
            canvas.parts.append(f'<text x="{x:.2f}" y="{HEIGHT - 26}" font-size="9" '
                                f'text-anchor="start">{escape(r.feature)} '
                                f'{r.delta:+g}</text>')
    return canvas.document("market-segment effects")


def render_svg(obj, max_curves: int = 100, seed: int = 0) -> str:
    """Render a CurveFamily or an EffectsTable as an SVG document."""
    if isinstance(obj, CurveFamily):
        return render_curves(obj, max_curves, seed)
    if isinstance(obj, EffectsTable):
        return render_effects(obj)
    raise TypeError(f"cannot render {type(obj).__name__}")
