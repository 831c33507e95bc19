"""Learning curves as a small, dependency-free SVG."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 60, 200, 20, 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(stats) -> str:
    """Mean curve with a ±1 std band per setting, plus a legend."""
    series = list(stats.values())
    plot_w, plot_h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    xs = [s.episodes for s in series if len(s.episodes)]
    x_lo = min((float(x.min()) for x in xs), default=0.0)
    x_hi = max((float(x.max()) for x in xs), default=1.0)
    ys = [np.concatenate([s.mean - s.std, s.mean + s.std]) for s in series if len(s.mean)]
    y_lo = min((float(y.min()) for y in ys), default=0.0)
    y_hi = max((float(y.max()) for y in ys), default=1.0)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1, y_hi + 1

    def px(x):
        return LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>']
    for t in _ticks(x_lo, x_hi):
        out.append(f'<text x="{_fmt(px(t))}" y="{TOP + plot_h + 15}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        out.append(f'<text x="{LEFT - 5}" y="{_fmt(py(t) + 4)}" text-anchor="end">{t:.1f}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2:g}" y="{HEIGHT - 12}" text-anchor="middle">episode</text>')
    out.append(f'<text x="15" y="{TOP + plot_h / 2:g}" text-anchor="middle" '
               f'transform="rotate(-90 15 {TOP + plot_h / 2:g})">return</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        name = escape(s.setting)
        if len(s.episodes) == 1:
            out.append(f'<circle class="marker" cx="{_fmt(px(s.episodes[0]))}" cy="{_fmt(py(s.mean[0]))}" '
                       f'r="3" fill="{color}"><title>{name}</title></circle>')
        elif len(s.episodes) > 1:
            upper = [f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.episodes, s.mean + s.std)]
            lower = [f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.episodes[::-1], (s.mean - s.std)[::-1])]
            out.append(f'<polygon class="band" points="{" ".join(upper + lower)}" fill="{color}" '
                       f'fill-opacity="0.2" stroke="none"/>')
            line = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.episodes, s.mean))
            out.append(f'<polyline class="curve" points="{line}" fill="none" stroke="{color}" stroke-width="1.5">'
                       f'<title>{name}</title></polyline>')
        ly = TOP + 10 + 18 * i
        out.append(f'<rect x="{WIDTH - RIGHT + 15}" y="{ly - 8}" width="12" height="10" fill="{color}"/>')
        out.append(f'<text class="legend" x="{WIDTH - RIGHT + 32}" y="{ly + 1}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(stats, path) -> None:
    with open(path, "w") as handle:
        handle.write(render_svg(stats))
