"""Tiny SVG 1.1 line-plot writer (axes, polylines, markers, legend)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


@dataclass
class Series:
    points: Sequence[tuple[float, float]]
    label: str = ""
    color: Optional[str] = None
    dashed: bool = False
    marker: bool = False


@dataclass
class Plot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 420
    logy: bool = False
    equal_aspect: bool = False
    series: list[Series] = field(default_factory=list)
    hlines: list[tuple[float, str]] = field(default_factory=list)
    vlines: list[tuple[float, str]] = field(default_factory=list)

    def add(self, points, label="", **kw) -> "Plot":
        self.series.append(Series(list(points), label, **kw))
        return self

    def render(self) -> str:
        return render(self)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render(self))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(hi):
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def render(plot: Plot) -> str:
    W, H = plot.width, plot.height
    left, right, top, bottom = 70, 20 + (150 if any(s.label for s in plot.series) else 0), 36, 50
    pw, ph = W - left - right, H - top - bottom

    def ty(y):
        if plot.logy:
            return math.log10(max(y, 1e-300))
        return y

    xs, ys = [], []
    for s in plot.series:
        for x, y in s.points:
            if math.isfinite(x) and math.isfinite(y) and (not plot.logy or y > 0):
                xs.append(x)
                ys.append(ty(y))
    for y, _ in plot.hlines:
        ys.append(ty(y))
    for x, _ in plot.vlines:
        xs.append(x)
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    padx, pady = 0.03 * (x1 - x0), 0.05 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
    if plot.equal_aspect:
        sx, sy = pw / (x1 - x0), ph / (y1 - y0)
        if sx > sy:
            extra = (pw / sy - (x1 - x0)) / 2
            x0, x1 = x0 - extra, x1 + extra
        else:
            extra = (ph / sx - (y1 - y0)) / 2
            y0, y1 = y0 - extra, y1 + extra

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{_fmt(X)}" y1="{top + ph}" x2="{_fmt(X)}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X)}" y="{top + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = top + (1.0 - (t - y0) / (y1 - y0)) * ph
        label = f"1e{t:g}" if plot.logy else f"{t:g}"
        out.append(f'<line x1="{left - 4}" y1="{_fmt(Y)}" x2="{left}" y2="{_fmt(Y)}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{_fmt(Y + 4)}" text-anchor="end">{label}</text>')
    if plot.title:
        out.append(f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(plot.title)}</text>')
    if plot.xlabel:
        out.append(f'<text x="{left + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(plot.xlabel)}</text>')
    if plot.ylabel:
        out.append(
            f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {top + ph / 2})">{escape(plot.ylabel)}</text>'
        )
    for y, label in plot.hlines:
        Y = py(y)
        out.append(f'<line x1="{left}" y1="{_fmt(Y)}" x2="{left + pw}" y2="{_fmt(Y)}" stroke="#444" stroke-dasharray="2,3"/>')
        if label:
            out.append(f'<text x="{left + 4}" y="{_fmt(Y - 3)}" fill="#444">{escape(label)}</text>')
    for x, label in plot.vlines:
        X = px(x)
        out.append(f'<line x1="{_fmt(X)}" y1="{top}" x2="{_fmt(X)}" y2="{top + ph}" stroke="#444" stroke-dasharray="2,3"/>')
        if label:
            out.append(f'<text x="{_fmt(X + 3)}" y="{top + 12}" fill="#444">{escape(label)}</text>')

    out.append(f'<clipPath id="plotarea"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath>')
    legend_y = top + 8
    for k, s in enumerate(plot.series):
        color = s.color or PALETTE[k % len(PALETTE)]
        pts = [(px(x), py(y)) for x, y in s.points
               if math.isfinite(x) and math.isfinite(y) and (not plot.logy or y > 0)]
        if s.marker:
            for X, Y in pts:
                out.append(f'<circle cx="{_fmt(X)}" cy="{_fmt(Y)}" r="4" fill="{color}" clip-path="url(#plotarea)"/>')
        elif pts:
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            coords = " ".join(f"{_fmt(X)},{_fmt(Y)}" for X, Y in pts)
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"{dash} clip-path="url(#plotarea)"/>'
            )
        if s.label:
            lx = left + pw + 10
            out.append(f'<line x1="{lx}" y1="{legend_y}" x2="{lx + 18}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 22}" y="{legend_y + 4}">{escape(s.label)}</text>')
            legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"
