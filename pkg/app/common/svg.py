import dataclasses
from xml.sax.saxutils import escape

import numpy as np

from app.common.errors import DomainError

_TICKS = 5


@dataclasses.dataclass(frozen=True)
class SvgStyle:
    width: int = 480
    height: int = 360
    margin: int = 56
    marker_radius: float = 2.0
    color: str = "#1f5fa8"
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    diagonal: bool = False


def _span(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
        return lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _num(value: float) -> str:
    return f"{value:.2f}"


def emit_svg_scatter(points, styling: SvgStyle | None = None) -> str:
    """Self-contained SVG scatter plot; identical input gives identical bytes."""
    style = styling or SvgStyle()
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    if data.shape[0] == 0:
        msg = "Scatter plot needs at least one point"
        raise DomainError(msg)
    if not np.all(np.isfinite(data)):
        msg = "Scatter plot points must be finite"
        raise DomainError(msg)

    x_lo, x_hi = _span(data[:, 0])
    y_lo, y_hi = _span(data[:, 1])
    left, top = style.margin, style.margin
    plot_w = style.width - 2 * style.margin
    plot_h = style.height - 2 * style.margin

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    bottom = top + plot_h
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" '
        f'height="{style.height}" viewBox="0 0 {style.width} {style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="white"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{left + plot_w}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for i in range(_TICKS):
        fx = x_lo + (x_hi - x_lo) * i / (_TICKS - 1)
        fy = y_lo + (y_hi - y_lo) * i / (_TICKS - 1)
        lines.append(
            f'<text x="{_num(px(fx))}" y="{_num(bottom + 16)}" font-size="10" '
            f'text-anchor="middle">{fx:.3g}</text>'
        )
        lines.append(
            f'<text x="{_num(left - 6)}" y="{_num(py(fy) + 3)}" font-size="10" '
            f'text-anchor="end">{fy:.3g}</text>'
        )

    if style.diagonal:
        lo, hi = max(x_lo, y_lo), min(x_hi, y_hi)
        if lo < hi:
            lines.append(
                f'<line x1="{_num(px(lo))}" y1="{_num(py(lo))}" x2="{_num(px(hi))}" '
                f'y2="{_num(py(hi))}" stroke="grey" stroke-dasharray="4 3"/>'
            )
    if style.title:
        lines.append(
            f'<text x="{style.width / 2:.2f}" y="{top / 2:.2f}" font-size="13" '
            f'text-anchor="middle">{escape(style.title)}</text>'
        )
    if style.x_label:
        lines.append(
            f'<text x="{left + plot_w / 2:.2f}" y="{style.height - 12}" font-size="11" '
            f'text-anchor="middle">{escape(style.x_label)}</text>'
        )
    if style.y_label:
        y_mid = top + plot_h / 2
        lines.append(
            f'<text x="14" y="{y_mid:.2f}" font-size="11" text-anchor="middle" '
            f'transform="rotate(-90 14 {y_mid:.2f})">{escape(style.y_label)}</text>'
        )

    lines.append(f'<g fill="{style.color}" fill-opacity="0.6">')
    radius = _num(style.marker_radius)
    lines.extend(
        f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="{radius}"/>' for x, y in data
    )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
