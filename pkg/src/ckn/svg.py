"""Minimal native SVG emission for bifurcation diagrams.

No plotting library: polylines for the curves (dashed = symmetric,
solid = non-symmetric), a thicker dark path for the minimizing envelope,
plain line-and-text axes.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 720, 520
MARGIN = 64.0


def _ticks(lo: float, hi: float, n: int = 6):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m for m in (1.0, 2.0, 2.5, 5.0, 10.0)), key=lambda m: abs(m * mag - raw)) * mag
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(round(t, 12))
        t += step
    return out or [lo]


def _fmt_tick(x: float) -> str:
    if x == int(x) and abs(x) < 1e6:
        return str(int(x))
    return f"{x:.4g}"


class _Mapper:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.sx = (WIDTH - 2 * MARGIN) / max(self.x1 - self.x0, 1e-300)
        self.sy = (HEIGHT - 2 * MARGIN) / max(self.y1 - self.y0, 1e-300)

    def xy(self, x, y):
        px = MARGIN + (x - self.x0) * self.sx
        py = HEIGHT - MARGIN - (y - self.y0) * self.sy
        return px, py

    def points_attr(self, xs, ys):
        return " ".join(f"{self.xy(x, y)[0]:.2f},{self.xy(x, y)[1]:.2f}"
                        for x, y in zip(xs, ys))


def render_diagram(path, solid_xy, dashed_xy, envelope_xy=None, title="",
                   xlabel="Lambda", ylabel="J"):
    """Write one diagram: one solid and one dashed polyline plus envelope.

    solid_xy / dashed_xy / envelope_xy are (xs, ys) array pairs.
    """
    xs_all = np.concatenate([solid_xy[0], dashed_xy[0]])
    ys_all = np.concatenate([solid_xy[1], dashed_xy[1]])
    good = np.isfinite(xs_all) & np.isfinite(ys_all)
    xlim = (float(xs_all[good].min()), float(xs_all[good].max()))
    ylim = (float(ys_all[good].min()), float(ys_all[good].max()))
    pad = 0.05
    xlim = (xlim[0] - pad * (xlim[1] - xlim[0]), xlim[1] + pad * (xlim[1] - xlim[0]))
    ylim = (ylim[0] - pad * (ylim[1] - ylim[0]), ylim[1] + pad * (ylim[1] - ylim[0]))
    m = _Mapper(xlim, ylim)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    x_axis_y = HEIGHT - MARGIN
    parts.append(f'<line x1="{MARGIN}" y1="{x_axis_y}" x2="{WIDTH - MARGIN}" '
                 f'y2="{x_axis_y}" stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
                 f'y2="{x_axis_y}" stroke="black" stroke-width="1"/>')
    for t in _ticks(*xlim):
        px, _ = m.xy(t, ylim[0])
        parts.append(f'<line x1="{px:.2f}" y1="{x_axis_y}" x2="{px:.2f}" '
                     f'y2="{x_axis_y + 5}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{px:.2f}" y="{x_axis_y + 18}" font-size="11" '
                     f'text-anchor="middle">{_fmt_tick(t)}</text>')
    for t in _ticks(*ylim):
        _, py = m.xy(xlim[0], t)
        parts.append(f'<line x1="{MARGIN - 5}" y1="{py:.2f}" x2="{MARGIN}" '
                     f'y2="{py:.2f}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{MARGIN - 8}" y="{py + 4:.2f}" font-size="11" '
                     f'text-anchor="end">{_fmt_tick(t)}</text>')
    parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 16}" font-size="13" '
                 f'text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="18" y="{HEIGHT / 2}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 18 {HEIGHT / 2})">{ylabel}</text>')
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="28" font-size="14" '
                     f'text-anchor="middle">{title}</text>')

    if envelope_xy is not None and len(envelope_xy[0]):
        d_attr = []
        for k, (x, y) in enumerate(zip(*envelope_xy)):
            if not (np.isfinite(x) and np.isfinite(y)):
                continue
            px, py = m.xy(x, y)
            d_attr.append(f"{'M' if not d_attr else 'L'}{px:.2f},{py:.2f}")
        if d_attr:
            parts.append(f'<path d="{" ".join(d_attr)}" fill="none" '
                         f'stroke="#222222" stroke-width="4" opacity="0.45"/>')

    parts.append(f'<polyline points="{m.points_attr(*dashed_xy)}" fill="none" '
                 f'stroke="#a02020" stroke-width="1.6" stroke-dasharray="6,4"/>')
    parts.append(f'<polyline points="{m.points_attr(*solid_xy)}" fill="none" '
                 f'stroke="#2040a0" stroke-width="1.6"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
