"""Self-contained SVG rendering of sweep results in log-log space.

One polyline per noise level, decade grid lines, and the plotted numbers
embedded as XML comments so the figure is reviewable as text. Output is a
pure function of the table, with no timestamps or library version strings,
so replays are byte-identical.
"""

from __future__ import annotations

import math

from .errors import ConfigError
from .experiments import ResultTable

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 60

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _decades(lo: float, hi: float) -> list:
    start = math.floor(math.log10(lo))
    stop = math.ceil(math.log10(hi))
    return [10.0 ** k for k in range(start, stop + 1)]


class _Axis:
    def __init__(self, lo, hi, pix_lo, pix_hi):
        if lo <= 0 or hi <= 0:
            raise ConfigError("log axis needs positive data")
        if lo == hi:
            lo, hi = lo / 2.0, hi * 2.0
        self.lo, self.hi = math.log10(lo), math.log10(hi)
        self.pix_lo, self.pix_hi = pix_lo, pix_hi

    def __call__(self, v: float) -> float:
        frac = (math.log10(v) - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)


def render_loglog_svg(table: ResultTable, title: str = "mean estimate vs n",
                      xlabel: str = "n", ylabel: str = "mean estimate") -> str:
    """Render one log-log curve per noise level with the data inlined."""
    series = []
    dropped = []
    for sigma in table.sigmas():
        pts = [(n, mean) for n, (mean, _) in table.mean_by_n(sigma).items()
               if mean > 0.0]
        drop = [n for n, (mean, _) in table.mean_by_n(sigma).items() if mean <= 0.0]
        if drop:
            dropped.append((sigma, drop))
        if pts:
            series.append((sigma, pts))
    if not series:
        raise ConfigError("nothing to plot: no positive mean estimates")

    xs = [n for _, pts in series for n, _ in pts]
    ys = [v for _, pts in series for _, v in pts]
    ax_x = _Axis(min(xs), max(xs), MARGIN_L, WIDTH - MARGIN_R)
    ax_y = _Axis(min(ys), max(ys), HEIGHT - MARGIN_B, MARGIN_T)

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
               f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append("<!-- log-log convergence curves; one polyline per sigma -->")
    for sigma, pts in series:
        data = " ".join(f"{n}:{_fmt(v)}" for n, v in pts)
        out.append(f"<!-- data sigma={_fmt(sigma)} {data} -->")
    for sigma, drop in dropped:
        out.append(f"<!-- dropped sigma={_fmt(sigma)} non-positive means at "
                   f"n={','.join(str(n) for n in drop)} -->")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" '
               f'font-family="monospace" font-size="14">{title}</text>')

    plot_b = HEIGHT - MARGIN_B
    plot_r = WIDTH - MARGIN_R
    for xv in _decades(min(xs), max(xs)):
        px = ax_x(xv)
        if MARGIN_L - 1 <= px <= plot_r + 1:
            out.append(f'<line x1="{_fmt(px)}" y1="{MARGIN_T}" x2="{_fmt(px)}" '
                       f'y2="{plot_b}" stroke="#dddddd"/>')
            out.append(f'<text x="{_fmt(px)}" y="{plot_b + 18}" text-anchor="middle" '
                       f'font-family="monospace" font-size="11">{_fmt(xv)}</text>')
    for yv in _decades(min(ys), max(ys)):
        py = ax_y(yv)
        if MARGIN_T - 1 <= py <= plot_b + 1:
            out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(py)}" x2="{plot_r}" '
                       f'y2="{_fmt(py)}" stroke="#dddddd"/>')
            out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(py + 4)}" text-anchor="end" '
                       f'font-family="monospace" font-size="11">{_fmt(yv)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_r - MARGIN_L}" '
               f'height="{plot_b - MARGIN_T}" fill="none" stroke="black"/>')
    out.append(f'<text x="{(MARGIN_L + plot_r) // 2}" y="{HEIGHT - 14}" '
               f'text-anchor="middle" font-family="monospace" font-size="12">{xlabel}</text>')
    out.append(f'<text x="18" y="{(MARGIN_T + plot_b) // 2}" text-anchor="middle" '
               f'font-family="monospace" font-size="12" '
               f'transform="rotate(-90 18 {(MARGIN_T + plot_b) // 2})">{ylabel}</text>')

    for idx, (sigma, pts) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        coords = " ".join(f"{_fmt(ax_x(n))},{_fmt(ax_y(v))}" for n, v in pts)
        if len(pts) > 1:
            out.append(f'<polyline points="{coords}" fill="none" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        for n, v in pts:
            out.append(f'<circle cx="{_fmt(ax_x(n))}" cy="{_fmt(ax_y(v))}" '
                       f'r="3" fill="{color}"/>')
        ly = MARGIN_T + 16 + 18 * idx
        out.append(f'<line x1="{plot_r + 10}" y1="{ly - 4}" x2="{plot_r + 34}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{plot_r + 40}" y="{ly}" font-family="monospace" '
                   f'font-size="12">sigma={_fmt(sigma)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
