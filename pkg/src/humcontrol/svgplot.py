"""Minimal hand-rolled SVG log-log line charts for sweep tables.

Deliberately dependency-free: the CLI's --svg flag only needs straight
polylines on log axes with decade ticks.
"""

from __future__ import annotations

import math
from typing import Sequence

_PALETTE = ("#1f22b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")

_W, _H = 720, 540
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _decades(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1))


def write_loglog_svg(curves: Sequence[tuple[str, Sequence[float], Sequence[float]]], path, title: str = "") -> None:
    """Write a log-log chart; ``curves`` holds (label, xs, ys) triples.

    Nonpositive or non-finite samples are dropped (log axes).
    """
    cleaned = []
    for label, xs, ys in curves:
        pts = [
            (float(x), float(y))
            for x, y in zip(xs, ys)
            if x is not None and y is not None and x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)
        ]
        if pts:
            cleaned.append((label, pts))
    if not cleaned:
        raise ValueError("nothing to plot: no positive finite samples")

    all_x = [p[0] for _, pts in cleaned for p in pts]
    all_y = [p[1] for _, pts in cleaned for p in pts]
    lx0, lx1 = math.log10(min(all_x)), math.log10(max(all_x))
    ly0, ly1 = math.log10(min(all_y)), math.log10(max(all_y))
    lx0, lx1 = lx0 - 0.05 * (lx1 - lx0 + 1e-12) - 0.02, lx1 + 0.05 * (lx1 - lx0 + 1e-12) + 0.02
    ly0, ly1 = ly0 - 0.05 * (ly1 - ly0 + 1e-12) - 0.02, ly1 + 0.05 * (ly1 - ly0 + 1e-12) + 0.02

    def px(x: float) -> float:
        return _ML + (math.log10(x) - lx0) / (lx1 - lx0) * (_W - _ML - _MR)

    def py(y: float) -> float:
        return _H - _MB - (math.log10(y) - ly0) / (ly1 - ly0) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        f'fill="none" stroke="black"/>',
    ]
    for e in _decades(10**lx0, 10**lx1):
        x = 10.0**e
        if lx0 <= e <= lx1:
            parts.append(
                f'<line x1="{px(x):.1f}" y1="{_MT}" x2="{px(x):.1f}" y2="{_H - _MB}" '
                f'stroke="#cccccc" stroke-dasharray="3,3"/>'
            )
            parts.append(f'<text x="{px(x):.1f}" y="{_H - _MB + 18}" text-anchor="middle">1e{e}</text>')
    for e in _decades(10**ly0, 10**ly1):
        y = 10.0**e
        if ly0 <= e <= ly1:
            parts.append(
                f'<line x1="{_ML}" y1="{py(y):.1f}" x2="{_W - _MR}" y2="{py(y):.1f}" '
                f'stroke="#cccccc" stroke-dasharray="3,3"/>'
            )
            parts.append(f'<text x="{_ML - 6}" y="{py(y):.1f}" text-anchor="end" dominant-baseline="middle">1e{e}</text>')

    for k, (label, pts) in enumerate(cleaned):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{_ML + 10}" y="{_MT + 18 + 16 * k}" fill="{color}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
