"""Deterministic SVG line charts.

Byte-identical output for identical input: fixed canvas, fixed palette,
fixed number formatting, no timestamps and no randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .errors import ContractError

WIDTH, HEIGHT = 640, 440
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 62, 16, 34, 46

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

PLOT_KINDS = ("density-overlay", "roc", "deviate-line", "learning-curve", "variance")


@dataclass(frozen=True)
class Series:
    """One named polyline."""

    name: str
    x: tuple
    y: tuple
    step: bool = False  # render as a staircase (histograms)

    def __post_init__(self):
        xs = tuple(float(v) for v in self.x)
        ys = tuple(float(v) for v in self.y)
        if len(xs) != len(ys) or not xs:
            raise ContractError(f"series {self.name!r} needs matching non-empty x and y")
        if any(not math.isfinite(v) for v in xs + ys):
            raise ContractError(f"series {self.name!r} contains non-finite values")
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "y", ys)


@dataclass(frozen=True)
class PlotSpec:
    """Everything needed to render one chart."""

    kind: str
    title: str
    x_label: str
    y_label: str
    series: tuple

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ContractError(f"unknown plot kind {self.kind!r}")
        if not self.series:
            raise ContractError("a plot needs at least one series")


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions via the 1-2-5 ladder."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return format(v, ".6g")


def render_svg(spec: PlotSpec) -> str:
    """Render a plot description as a complete SVG 1.1 document."""
    xs = [v for s in spec.series for v in s.x]
    ys = [v for s in spec.series for v in s.y]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_x = 0.04 * (x_hi - x_lo)
    pad_y = 0.06 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x: float) -> float:
        return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" font-family="sans-serif" font-size="14" '
        f'text-anchor="middle">{escape(spec.title)}</text>',
    ]

    # frame
    parts.append(
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    )

    for t in _nice_ticks(x_lo, x_hi):
        if not x_lo <= t <= x_hi:
            continue
        x = px(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{MARGIN_TOP + plot_h}" x2="{x:.2f}" '
            f'y2="{MARGIN_TOP + plot_h + 5}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{MARGIN_TOP + plot_h + 18}" font-family="sans-serif" '
            f'font-size="11" text-anchor="middle">{escape(_fmt(t))}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        if not y_lo <= t <= y_hi:
            continue
        y = py(t)
        parts.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{y:.2f}" x2="{MARGIN_LEFT}" y2="{y:.2f}" '
            'stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{y + 4:.2f}" font-family="sans-serif" '
            f'font-size="11" text-anchor="end">{escape(_fmt(t))}</text>'
        )

    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="{HEIGHT - 10}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">{escape(spec.x_label)}</text>'
    )
    parts.append(
        f'<text x="16" y="{MARGIN_TOP + plot_h / 2:.1f}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_TOP + plot_h / 2:.1f})">{escape(spec.y_label)}</text>'
    )

    for i, s in enumerate(spec.series):
        color = PALETTE[i % len(PALETTE)]
        pts = []
        if s.step:
            for j, (x, y) in enumerate(zip(s.x, s.y)):
                if j:
                    pts.append((x, s.y[j - 1]))
                pts.append((x, y))
        else:
            pts = list(zip(s.x, s.y))
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )

    # legend, top-right inside the frame
    legend_x = MARGIN_LEFT + plot_w - 160
    legend_y = MARGIN_TOP + 10
    for i, s in enumerate(spec.series):
        color = PALETTE[i % len(PALETTE)]
        y = legend_y + 16 * i
        parts.append(
            f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 22}" y2="{y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{legend_x + 28}" y="{y + 4}" font-family="sans-serif" '
            f'font-size="11">{escape(s.name)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
