"""Standalone SVG rendering of line plots and region heatmaps (no plotting dependency)."""

from __future__ import annotations

import math

import numpy as np

WIDTH, HEIGHT, MARGIN = 640, 420, 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
REGION_COLORS = ("#f2f2f2", "#9ecae1", "#08519c")


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _frame(title, xlabel, ylabel):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="20" text-anchor="middle">{title}</text>',
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>',
            f'<text x="14" y="{HEIGHT / 2}" transform="rotate(-90 14 {HEIGHT / 2})" '
            f'text-anchor="middle">{ylabel}</text>',
            f'<rect x="{MARGIN}" y="{MARGIN / 2}" width="{WIDTH - 1.5 * MARGIN}" '
            f'height="{HEIGHT - 1.5 * MARGIN}" fill="none" stroke="black"/>']


def line_plot(series, path, *, title="", xlabel="frequency", ylabel="value", logy=True):
    """``series`` is a list of ``(x, y, label)``; nonpositive values are dropped on a log axis."""
    prepared = []
    for x, y, label in series:
        x, y = np.asarray(x, float), np.asarray(y, float)
        keep = np.isfinite(y) & ((y > 0) if logy else True)
        prepared.append((x[keep], np.log10(y[keep]) if logy else y[keep], label))
    xs = np.concatenate([p[0] for p in prepared])
    ys = np.concatenate([p[1] for p in prepared])
    sx = _scale(xs.min(), xs.max(), MARGIN, WIDTH - MARGIN / 2)
    sy = _scale(ys.min(), ys.max(), HEIGHT - MARGIN, MARGIN / 2)
    out = _frame(title, xlabel, ("log10 " if logy else "") + ylabel)
    for i, (x, y, label) in enumerate(prepared):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        out.append(f'<text x="{WIDTH - MARGIN * 2}" y="{MARGIN / 2 + 16 * (i + 1)}" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    _write(path, out)


def heatmap(xs, ys, regions, path, *, title="", xlabel="d", ylabel="beta"):
    """``regions[j][i]`` in {0, 1, 2} at ``(xs[i], ys[j])``."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    cw = (WIDTH - 1.5 * MARGIN) / len(xs)
    ch = (HEIGHT - 1.5 * MARGIN) / len(ys)
    out = _frame(title, xlabel, ylabel)
    for j in range(len(ys)):
        for i in range(len(xs)):
            x = MARGIN + i * cw
            y = HEIGHT - MARGIN - (j + 1) * ch
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{math.ceil(cw)}" height="{math.ceil(ch)}" '
                       f'fill="{REGION_COLORS[int(regions[j][i])]}"/>')
    for label, v, pos in ((f"{xs[0]:g}", xs[0], MARGIN), (f"{xs[-1]:g}", xs[-1], WIDTH - MARGIN / 2)):
        out.append(f'<text x="{pos}" y="{HEIGHT - MARGIN + 14}" text-anchor="middle">{label}</text>')
    out.append(f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" text-anchor="end">{ys[0]:g}</text>')
    out.append(f'<text x="{MARGIN - 4}" y="{MARGIN / 2 + 10}" text-anchor="end">{ys[-1]:g}</text>')
    out.append("</svg>")
    _write(path, out)


def _write(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
