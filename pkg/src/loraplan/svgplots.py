"""Static SVG renderings of the analysis plot data.

Hand-rolled SVG keeps the output byte-deterministic for identical inputs,
which the command-line contract requires.  Three panels: benchmark x
condition delta heatmaps, per-condition radar profiles, and the parameter
versus mean-accuracy Pareto scatter.
"""

from __future__ import annotations

import math

from .analytics import HeatmapGrid, ParetoPoint
from .report import RadarSeries

__all__ = ["heatmap_svg", "radar_svg", "pareto_svg"]

_SERIES_COLORS = ("#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _diverging_color(value: float, limit: float) -> str:
    """Blue (negative) to white (zero) to red (positive)."""
    if limit <= 0:
        limit = 1.0
    t = max(-1.0, min(1.0, value / limit))
    if t >= 0:
        r, g, b = 255, round(255 * (1 - t * 0.75)), round(255 * (1 - t * 0.85))
    else:
        r, g, b = round(255 * (1 + t * 0.85)), round(255 * (1 + t * 0.55)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(grid: HeatmapGrid) -> str:
    cell_w, cell_h = 96, 40
    left, top = 110, 70
    width = left + cell_w * len(grid.conditions) + 20
    height = top + cell_h * len(grid.benchmarks) + 20
    limit = max((abs(v) for row in grid.values for v in row), default=1.0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{left}" y="20" font-size="14">'
        f"{_esc(grid.model)} / trained on {_esc(grid.train_domain)} "
        f"(delta vs baseline, pp)</text>",
    ]
    for j, cond in enumerate(grid.conditions):
        x = left + j * cell_w + cell_w / 2
        parts.append(
            f'<text x="{x:.1f}" y="{top - 8}" text-anchor="end" '
            f'transform="rotate(-30 {x:.1f} {top - 8})">{_esc(cond)}</text>'
        )
    for i, bench in enumerate(grid.benchmarks):
        y = top + i * cell_h + cell_h / 2 + 4
        parts.append(f'<text x="{left - 8}" y="{y:.1f}" text-anchor="end">{_esc(bench)}</text>')
        for j in range(len(grid.conditions)):
            value = grid.values[i][j]
            x = left + j * cell_w
            cy = top + i * cell_h
            parts.append(
                f'<rect x="{x}" y="{cy}" width="{cell_w}" height="{cell_h}" '
                f'fill="{_diverging_color(value, limit)}" stroke="#888"/>'
            )
            parts.append(
                f'<text x="{x + cell_w / 2:.1f}" y="{cy + cell_h / 2 + 4:.1f}" '
                f'text-anchor="middle">{value:+.1f}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def radar_svg(radar: RadarSeries) -> str:
    size = 420
    cx = cy = size / 2 + 20
    radius = size / 2 - 70
    n = len(radar.axes)
    angles = [2 * math.pi * k / n - math.pi / 2 for k in range(n)]

    def point(k: int, fraction: float) -> tuple[float, float]:
        return (
            cx + radius * fraction * math.cos(angles[k]),
            cy + radius * fraction * math.sin(angles[k]),
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 220}" height="{size + 40}" '
        f'viewBox="0 0 {size + 220} {size + 40}" font-family="sans-serif" font-size="11">',
        f'<text x="20" y="20" font-size="14">'
        f"{_esc(radar.model)} / trained on {_esc(radar.train_domain)} (accuracy)</text>",
    ]
    for ring in (0.25, 0.5, 0.75, 1.0):
        ring_pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in (point(k, ring) for k in range(n)))
        parts.append(f'<polygon points="{ring_pts}" fill="none" stroke="#ccc"/>')
        parts.append(
            f'<text x="{cx + 4:.1f}" y="{cy - radius * ring - 2:.1f}" fill="#888">{ring:.2f}</text>'
        )
    for k, axis in enumerate(radar.axes):
        x, y = point(k, 1.0)
        parts.append(f'<line x1="{cx:.1f}" y1="{cy:.1f}" x2="{x:.1f}" y2="{y:.1f}" stroke="#ccc"/>')
        lx, ly = point(k, 1.13)
        parts.append(f'<text x="{lx:.1f}" y="{ly:.1f}" text-anchor="middle">{_esc(axis)}</text>')
    for s, (condition, values) in enumerate(radar.series):
        color = _SERIES_COLORS[s % len(_SERIES_COLORS)]
        pts = " ".join(
            f"{x:.1f},{y:.1f}" for x, y in (point(k, values[k]) for k in range(n))
        )
        parts.append(
            f'<polygon points="{pts}" fill="{color}" fill-opacity="0.12" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        ly = 46 + 18 * s
        parts.append(f'<rect x="{size + 10}" y="{ly - 9}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{size + 28}" y="{ly + 1}">{_esc(condition)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def pareto_svg(model: str, points: tuple[ParetoPoint, ...] | list[ParetoPoint]) -> str:
    width, height = 560, 420
    left, right, top, bottom = 70, 30, 50, 60
    xs = [p.trainable_params_M for p in points]
    ys = [p.mean_accuracy for p in points]
    x_max = max(xs) * 1.1
    y_min, y_max = min(ys), max(ys)
    pad = max((y_max - y_min) * 0.15, 0.01)
    y_min, y_max = y_min - pad, y_max + pad

    def sx(v: float) -> float:
        return left + (width - left - right) * v / x_max

    def sy(v: float) -> float:
        return top + (height - top - bottom) * (1 - (v - y_min) / (y_max - y_min))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{left}" y="20" font-size="14">'
        f"{_esc(model)}: trainable parameters vs mean accuracy</text>",
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="#333"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="#333"/>',
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 16}" text-anchor="middle">'
        f"trainable parameters (M)</text>",
    ]
    for k in range(5):
        xv = x_max * k / 4
        yv = y_min + (y_max - y_min) * k / 4
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{height - bottom + 16}" text-anchor="middle">{xv:.1f}</text>'
        )
        parts.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3f}</text>')

    frontier = sorted(
        (p for p in points if not p.dominated), key=lambda p: p.trainable_params_M
    )
    if len(frontier) > 1:
        path = " ".join(
            f"{sx(p.trainable_params_M):.1f},{sy(p.mean_accuracy):.1f}" for p in frontier
        )
        parts.append(f'<polyline points="{path}" fill="none" stroke="#d95f02" stroke-dasharray="4 3"/>')
    for p in sorted(points, key=lambda p: (p.trainable_params_M, p.condition, p.label)):
        color = "#888" if p.dominated else "#d95f02"
        parts.append(
            f'<circle cx="{sx(p.trainable_params_M):.1f}" cy="{sy(p.mean_accuracy):.1f}" '
            f'r="5" fill="{color}" fill-opacity="0.8">'
            f"<title>{_esc(p.condition)} / {_esc(p.label)}: {p.trainable_params_M:.2f}M, "
            f"{p.mean_accuracy:.3f}</title></circle>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
