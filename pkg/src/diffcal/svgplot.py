"""Static SVG 1.1 line charts of trace channels."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .simulator import MultiChannelTrace

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#7f7f7f", "#ff7f0e")


def trace_svg(trace: MultiChannelTrace, channels=("fluid_L", "fluid_R"), *,
              width: int = 800, height: int = 400, max_points: int = 2000,
              title: str = "") -> str:
    margin_l, margin_r, margin_t, margin_b = 70, 20, 30, 40
    pw = width - margin_l - margin_r
    ph = height - margin_t - margin_b
    t = trace.times
    step = max(1, len(t) // max_points)
    series = [(name, np.asarray(trace[name])[::step]) for name in channels]
    ts = t[::step]
    lo = min(float(s.min()) for _, s in series)
    hi = max(float(s.max()) for _, s in series)
    if hi == lo:
        hi, lo = hi + 0.5, lo - 0.5
    t0, t1 = float(ts[0]), float(ts[-1]) if ts[-1] > ts[0] else float(ts[0]) + 1

    def x(v):
        return margin_l + (v - t0) / (t1 - t0) * pw

    def y(v):
        return margin_t + (hi - v) / (hi - lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{margin_l}" y="{margin_t - 10}" font-size="14">{escape(title)}</text>',
        f'<text x="{margin_l}" y="{height - 10}" font-size="12">{t0:.0f} s</text>',
        f'<text x="{width - margin_r}" y="{height - 10}" font-size="12" text-anchor="end">{t1:.0f} s</text>',
        f'<text x="{margin_l - 5}" y="{margin_t + 12}" font-size="12" text-anchor="end">{hi:.4f}</text>',
        f'<text x="{margin_l - 5}" y="{margin_t + ph}" font-size="12" text-anchor="end">{lo:.4f}</text>',
    ]
    for i, (name, s) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{x(a):.2f},{y(b):.2f}" for a, b in zip(ts, s))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        out.append(f'<text x="{margin_l + 10 + 110 * i}" y="{margin_t + 16}" font-size="12" '
                   f'fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(trace: MultiChannelTrace, path, channels=("fluid_L", "fluid_R"), **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trace_svg(trace, channels, **kwargs))
