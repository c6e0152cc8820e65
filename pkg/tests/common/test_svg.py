import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from app.common.errors import DomainError
from app.common.svg import SvgStyle, emit_svg_scatter

SVG_NS = "{http://www.w3.org/2000/svg}"


def _circles(document: str):
    root = ET.fromstring(document)
    return root.findall(f".//{SVG_NS}circle")


def test_emit_svg_scatter_draws_one_marker_per_point():
    points = np.column_stack([np.linspace(-1, 1, 25), np.linspace(0, 3, 25) ** 2])

    document = emit_svg_scatter(points)

    circles = _circles(document)
    assert len(circles) == 25
    for circle in circles:
        assert 0 <= float(circle.get("cx")) <= 480
        assert 0 <= float(circle.get("cy")) <= 360


def test_emit_svg_scatter_is_byte_identical_for_identical_input():
    points = [(0.0, 1.0), (2.0, -1.0), (3.5, 0.25)]
    style = SvgStyle(title="Q-Q plot of S1", diagonal=True)

    assert emit_svg_scatter(points, style) == emit_svg_scatter(list(points), style)


def test_emit_svg_scatter_escapes_labels():
    style = SvgStyle(title="a < b & c", x_label="S1")
    document = emit_svg_scatter([(0, 0), (1, 1)], style)

    assert "a &lt; b &amp; c" in document
    ET.fromstring(document)


def test_emit_svg_scatter_handles_constant_coordinates():
    document = emit_svg_scatter([(1.0, 5.0), (1.0, 5.0)])

    coordinates = re.findall(r'cx="([^"]+)" cy="([^"]+)"', document)
    assert all(np.isfinite(float(x)) and np.isfinite(float(y)) for x, y in coordinates)


def test_emit_svg_scatter_diagonal_reference_line():
    with_line = emit_svg_scatter([(-1, -1), (1, 1)], SvgStyle(diagonal=True))
    without = emit_svg_scatter([(-1, -1), (1, 1)])

    assert "stroke-dasharray" in with_line
    assert "stroke-dasharray" not in without


@pytest.mark.parametrize("points", [[], [(0.0, float("nan"))], [(float("inf"), 1.0)]])
def test_emit_svg_scatter_rejects_empty_or_non_finite(points):
    with pytest.raises(DomainError):
        emit_svg_scatter(points)
