"""Minimal static SVG line charts (no plotting dependency).

Good enough for run artifacts: one chart, several labelled series, linear or
log y axis, fixed palette, deterministic output.
"""
from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH = 760
HEIGHT = 440
MARGIN_L = 64
MARGIN_R = 16
MARGIN_T = 36
MARGIN_B = 44


def _finite_points(xs, ys, logy: bool):
    pts = []
    for x, y in zip(xs, ys):
        x = float(x)
        y = float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        if logy and y <= 0.0:
            continue
        pts.append((x, y))
    return pts


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def render_line_chart(title: str, series, xlabel: str = "t",
                      logy: bool = False) -> str:
    """series: iterable of (label, xs, ys).  Returns the SVG document text."""
    clean = []
    for label, xs, ys in series:
        pts = _finite_points(xs, ys, logy)
        if pts:
            clean.append((label, pts))
    if not clean:
        clean = [("empty", [(0.0, 1.0), (1.0, 1.0)])]
    xmin = min(p[0] for _, pts in clean for p in pts)
    xmax = max(p[0] for _, pts in clean for p in pts)
    yvals = [p[1] for _, pts in clean for p in pts]
    if logy:
        ymin, ymax = math.log10(min(yvals)), math.log10(max(yvals))
    else:
        ymin, ymax = min(yvals), max(yvals)
    if xmax <= xmin:
        xmax = xmin + 1.0
    if ymax <= ymin:
        ymax = ymin + 1.0
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x: float) -> float:
        return MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w

    def sy(y: float) -> float:
        v = math.log10(y) if logy else y
        return MARGIN_T + plot_h - (v - ymin) / (ymax - ymin) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" font-size="15" '
        f'font-family="sans-serif">{title}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333"/>',
    ]
    for tx in _ticks(xmin, xmax):
        px = sx(tx)
        out.append(f'<line x1="{px:.2f}" y1="{MARGIN_T + plot_h}" x2="{px:.2f}" '
                   f'y2="{MARGIN_T + plot_h + 5}" stroke="#333"/>')
        out.append(f'<text x="{px:.2f}" y="{MARGIN_T + plot_h + 20}" text-anchor="middle" '
                   f'font-size="11" font-family="sans-serif">{_fmt(tx)}</text>')
    for ty in _ticks(ymin, ymax):
        py = MARGIN_T + plot_h - (ty - ymin) / (ymax - ymin) * plot_h
        label = f"1e{ty:.1f}" if logy else _fmt(ty)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.2f}" x2="{MARGIN_L}" '
                   f'y2="{py:.2f}" stroke="#333"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{py + 4:.2f}" text-anchor="end" '
                   f'font-size="11" font-family="sans-serif">{label}</text>')
    out.append(f'<text x="{MARGIN_L + plot_w // 2}" y="{HEIGHT - 8}" text-anchor="middle" '
               f'font-size="12" font-family="sans-serif">{xlabel}</text>')
    for i, (label, pts) in enumerate(clean):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        ly = MARGIN_T + 14 + 16 * i
        lx = MARGIN_L + plot_w - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}" font-size="11" '
                   f'font-family="sans-serif">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
