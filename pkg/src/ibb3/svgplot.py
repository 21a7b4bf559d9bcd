"""Minimal SVG plotter: lines, scatter and bar charts, no dependencies.

Deliberately small: the CLI emits CSV for anything quantitative and
these plots exist for a quick visual check only.
"""

from __future__ import annotations

import math

_W, _H = 860, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out


class SvgFigure:
    def __init__(self, title="", xlabel="", ylabel=""):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.series = []   # (kind, xs, ys, label)

    def line(self, xs, ys, label=""):
        self.series.append(("line", list(xs), list(ys), label))

    def scatter(self, xs, ys, label=""):
        self.series.append(("scatter", list(xs), list(ys), label))

    def bars(self, labels, values, label=""):
        self.series.append(("bars", list(labels), list(values), label))

    def _extent(self):
        xs, ys = [], []
        for kind, x, y, _ in self.series:
            if kind == "bars":
                xs.extend(range(len(x)))
                ys.extend(y)
            else:
                xs.extend(x)
                ys.extend(y)
        if not xs:
            return 0, 1, 0, 1
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x0 == x1:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y0 == y1:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def write(self, path):
        x0, x1, y0, y1 = self._extent()
        pw = _W - _ML - _MR
        ph = _H - _MT - _MB

        def px(x):
            return _ML + (x - x0) / (x1 - x0) * pw

        def py(y):
            return _MT + ph - (y - y0) / (y1 - y0) * ph

        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
                 f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
                 f'<rect width="{_W}" height="{_H}" fill="white"/>']
        for tx in _ticks(x0, x1):
            parts.append(f'<line x1="{px(tx):.1f}" y1="{_MT}" x2="{px(tx):.1f}" '
                         f'y2="{_MT + ph}" stroke="#eee"/>')
            parts.append(f'<text x="{px(tx):.1f}" y="{_MT + ph + 16}" '
                         f'text-anchor="middle">{tx:.6g}</text>')
        for ty in _ticks(y0, y1):
            parts.append(f'<line x1="{_ML}" y1="{py(ty):.1f}" x2="{_ML + pw}" '
                         f'y2="{py(ty):.1f}" stroke="#eee"/>')
            parts.append(f'<text x="{_ML - 6}" y="{py(ty) + 4:.1f}" '
                         f'text-anchor="end">{ty:.6g}</text>')
        parts.append(f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" '
                     f'fill="none" stroke="#444"/>')
        bar_labels = None
        for idx, (kind, xs, ys, label) in enumerate(self.series):
            color = _COLORS[idx % len(_COLORS)]
            if kind == "line":
                pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
                parts.append(f'<polyline points="{pts}" fill="none" '
                             f'stroke="{color}" stroke-width="1.5"/>')
            elif kind == "scatter":
                for x, y in zip(xs, ys):
                    parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" '
                                 f'r="3" fill="{color}"/>')
            else:
                bar_labels = xs
                n = len(ys)
                bw = pw / max(n, 1) * 0.6
                for j, v in enumerate(ys):
                    parts.append(f'<rect x="{px(j) - bw / 2:.1f}" '
                                 f'y="{py(max(v, 0)):.1f}" width="{bw:.1f}" '
                                 f'height="{abs(py(v) - py(0)):.1f}" fill="{color}"/>')
            if label:
                parts.append(f'<text x="{_ML + 10}" y="{_MT + 16 + 14 * idx}" '
                             f'fill="{color}">{label}</text>')
        if bar_labels:
            for j, lab in enumerate(bar_labels):
                parts.append(f'<text x="{px(j):.1f}" y="{_MT + ph + 32}" '
                             f'text-anchor="middle">{lab}</text>')
        parts.append(f'<text x="{_W / 2}" y="18" text-anchor="middle" '
                     f'font-size="14">{self.title}</text>')
        parts.append(f'<text x="{_W / 2}" y="{_H - 8}" text-anchor="middle">'
                     f'{self.xlabel}</text>')
        parts.append(f'<text x="16" y="{_MT + ph / 2}" text-anchor="middle" '
                     f'transform="rotate(-90 16 {_MT + ph / 2})">{self.ylabel}</text>')
        parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts))
