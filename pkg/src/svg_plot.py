"""
Log-log SVG figure of a condition-number sweep: mean relative error with a
one-standard-deviation band and both forward-error bound curves.
"""

import math
from pathlib import Path
from typing import List, Sequence, Tuple, Union
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd

from utils import get_logger

logger = get_logger('svg_plot', 'svg_plot')

WIDTH, HEIGHT = 720, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 30, 40, 60

SERIES = [
    # column, label, colour, dash pattern
    ('mean_rel_err', 'mean relative error', '#1f77b4', None),
    ('bound_final', 'bound (cond_F form)', '#ff7f0e', None),
    ('bound_final_cond2', 'bound (cond_2^2 form)', '#ff7f0e', '6,4'),
]


def _decade_range(values: np.ndarray) -> Tuple[float, float]:
    lo, hi = math.floor(np.log10(values.min())), math.ceil(np.log10(values.max()))
    if lo == hi:
        lo, hi = lo - 1, hi + 1
    return float(lo), float(hi)


class _Axes:
    def __init__(self, x_range: Tuple[float, float], y_range: Tuple[float, float]):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        self.plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(self, x: float) -> float:
        return MARGIN_LEFT + (math.log10(x) - self.x0) / (self.x1 - self.x0) * self.plot_w

    def py(self, y: float) -> float:
        return MARGIN_TOP + (self.y1 - math.log10(y)) / (self.y1 - self.y0) * self.plot_h

    def points(self, xs: Sequence[float], ys: Sequence[float]) -> str:
        return " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))


def _positive(xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ok = np.isfinite(ys) & (ys > 0) & np.isfinite(xs) & (xs > 0)
    return xs[ok], ys[ok]


def render_sweep_svg(df: pd.DataFrame, title: str) -> str:
    """Build the SVG document for a sweep table (one row per condition point)"""
    xs = df['cond_target'].to_numpy(dtype=float)
    columns = [c for c, *_ in SERIES]
    all_y = df[columns].to_numpy(dtype=float).ravel()
    all_y = all_y[np.isfinite(all_y) & (all_y > 0)]
    if all_y.size == 0:
        all_y = np.array([1e-4, 1.0])

    x_lo, x_hi = math.log10(xs.min()), math.log10(xs.max())
    if x_hi - x_lo < 1e-9:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    axes = _Axes((x_lo, x_hi), _decade_range(all_y))
    y_floor = 10.0 ** axes.y0

    parts: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]

    # Grid and decade ticks
    for k in range(int(axes.y0), int(axes.y1) + 1):
        y = axes.py(10.0 ** k)
        parts.append(f'<line x1="{MARGIN_LEFT}" y1="{y:.2f}" x2="{WIDTH - MARGIN_RIGHT}" y2="{y:.2f}" stroke="#dddddd"/>')
        parts.append(f'<text x="{MARGIN_LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">1e{k}</text>')
    for k in range(math.ceil(x_lo), math.floor(x_hi) + 1):
        x = axes.px(10.0 ** k)
        parts.append(f'<line x1="{x:.2f}" y1="{MARGIN_TOP}" x2="{x:.2f}" y2="{HEIGHT - MARGIN_BOTTOM}" stroke="#dddddd"/>')
        parts.append(f'<text x="{x:.2f}" y="{HEIGHT - MARGIN_BOTTOM + 18}" text-anchor="middle">1e{k}</text>')

    parts.append(f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{axes.plot_w}" height="{axes.plot_h}" '
                 f'fill="none" stroke="black"/>')
    parts.append(f'<text x="{MARGIN_LEFT + axes.plot_w / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">'
                 f'condition number cond_2(H)</text>')
    parts.append(f'<text x="18" y="{MARGIN_TOP + axes.plot_h / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {MARGIN_TOP + axes.plot_h / 2:.1f})">relative error</text>')

    # +-1 std band around the mean error
    mean = df['mean_rel_err'].to_numpy(dtype=float)
    std = df['std_rel_err'].to_numpy(dtype=float)
    ok = np.isfinite(mean) & (mean > 0) & np.isfinite(std)
    if np.count_nonzero(ok) >= 2:
        bx = xs[ok]
        upper = mean[ok] + std[ok]
        lower = np.maximum(mean[ok] - std[ok], y_floor)
        outline = axes.points(bx, upper) + " " + axes.points(bx[::-1], lower[::-1])
        parts.append(f'<polygon points="{outline}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>')

    for column, label, colour, dash in SERIES:
        sx, sy = _positive(xs, df[column].to_numpy(dtype=float))
        if sx.size == 0:
            continue
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ''
        parts.append(f'<polyline points="{axes.points(sx, sy)}" fill="none" stroke="{colour}" '
                     f'stroke-width="2"{dash_attr}/>')
        if column == 'mean_rel_err':
            parts.extend(f'<circle cx="{axes.px(x):.2f}" cy="{axes.py(y):.2f}" r="3" fill="{colour}"/>'
                         for x, y in zip(sx, sy))

    # Legend
    lx, ly = MARGIN_LEFT + 12, MARGIN_TOP + 14
    for i, (_, label, colour, dash) in enumerate(SERIES):
        y = ly + 18 * i
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ''
        parts.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 28}" y2="{y}" stroke="{colour}" stroke-width="2"{dash_attr}/>')
        parts.append(f'<text x="{lx + 36}" y="{y + 4}">{label}</text>')
    y = ly + 18 * len(SERIES)
    parts.append(f'<rect x="{lx}" y="{y - 5}" width="28" height="10" fill="#1f77b4" fill-opacity="0.2"/>')
    parts.append(f'<text x="{lx + 36}" y="{y + 4}">mean +- 1 std</text>')

    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def write_sweep_svg(df: pd.DataFrame, path: Union[str, Path], title: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_sweep_svg(df, title))
    logger.info(f"Saved sweep figure to {path}")
    return path
