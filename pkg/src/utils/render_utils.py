from pathlib import Path
import numpy as np
from src.geometry.shapes import Polygon
from src.metadata.metadata_table import OutcomeLabel
from src.projection.pilot import InstanceSpace
from src.utils.errors import UnknownFeature
from src.utils.utils import write_text_atomic

OUTCOME = 'outcome'

WIDTH = 480
HEIGHT = 480
MARGIN = 48
POINT_RADIUS = 3

LOW_COLOUR = (215, 25, 28)  # red
HIGH_COLOUR = (44, 123, 182)  # blue
BOUNDARY_STROKE = '#333333'
FOOTPRINT_STROKE = '#1a9641'

svg_header = f"""<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<style>
.axis {{ stroke: #000000; stroke-width: 1; }}
.label {{ font-family: sans-serif; font-size: 12px; fill: #000000; }}
.boundary {{ fill: none; stroke: {BOUNDARY_STROKE}; stroke-width: 1.5; stroke-dasharray: 4 2; }}
.footprint {{ fill: none; stroke: {FOOTPRINT_STROKE}; stroke-width: 1.5; }}
</style>
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>
"""

svg_axes = f"""<line class="axis" x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}"/>
<line class="axis" x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}"/>
<text class="label" x="{WIDTH // 2}" y="{HEIGHT - MARGIN // 3}" text-anchor="middle">z1</text>
<text class="label" x="{MARGIN // 3}" y="{HEIGHT // 2}" text-anchor="middle" transform="rotate(-90 {MARGIN // 3} {HEIGHT // 2})">z2</text>
"""


def _fmt(x: float) -> str:
    return f'{x:.2f}'


def _hex(rgb) -> str:
    return '#' + ''.join(f'{int(c):02x}' for c in rgb)


def interpolate_colour(t: float) -> str:
    """0 -> red, 1 -> blue"""
    t = min(max(float(t), 0.0), 1.0)
    rgb = [round(lo + t * (hi - lo)) for lo, hi in zip(LOW_COLOUR, HIGH_COLOUR)]
    return _hex(rgb)


def point_colours(space: InstanceSpace, colour_by: str) -> list[str]:
    if colour_by == OUTCOME:
        return [_hex(HIGH_COLOUR) if o == OutcomeLabel.UNSAFE else _hex(LOW_COLOUR) for o in space.outcomes]
    if colour_by not in space.model.feature_names:
        raise UnknownFeature(f'cannot colour by {colour_by!r}, not a projected feature')

    values = space.feature(colour_by)
    lo, hi = float(np.min(values)), float(np.max(values))
    if not hi > lo:
        return [interpolate_colour(0.5)] * len(values)
    return [interpolate_colour((v - lo) / (hi - lo)) for v in values]


class _Frame:
    """data coordinates -> pixel coordinates, y pointing up"""
    def __init__(self, points: np.ndarray):
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        self.lo = lo - 0.05 * span
        self.span = 1.1 * span
        self.inner = (WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN)

    def __call__(self, x: float, y: float) -> tuple[str, str]:
        px = MARGIN + (x - self.lo[0]) / self.span[0] * self.inner[0]
        py = HEIGHT - MARGIN - (y - self.lo[1]) / self.span[1] * self.inner[1]
        return _fmt(px), _fmt(py)


def _ring_path(ring: np.ndarray, frame: _Frame) -> str:
    moves = [f'{"M" if j == 0 else "L"} {" ".join(frame(x, y))}' for j, (x, y) in enumerate(ring)]
    return ' '.join(moves) + ' Z'


def _polygon_path(polygon: Polygon, frame: _Frame, css_class: str) -> str:
    d = ' '.join(_ring_path(ring, frame) for ring in [polygon.vertices, *polygon.holes] if len(ring) >= 3)
    return f'<path class="{css_class}" d="{d}"/>\n'


def build_svg(space: InstanceSpace, colour_by: str, boundary: Polygon | None = None,
              footprints: list[Polygon] | None = None) -> str:
    colours = point_colours(space, colour_by)
    footprints = footprints or []

    extent = [space.coords]
    if boundary is not None:
        extent.append(boundary.vertices)
    extent.extend(p.vertices for p in footprints if len(p.vertices))
    frame = _Frame(np.vstack(extent))

    parts = [svg_header, svg_axes]
    if boundary is not None:
        parts.append(_polygon_path(boundary, frame, 'boundary'))
    for polygon in footprints:
        parts.append(_polygon_path(polygon, frame, 'footprint'))
    for (x, y), colour in zip(space.coords, colours):
        cx, cy = frame(x, y)
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="{POINT_RADIUS}" fill="{colour}"/>\n')
    parts.append('</svg>\n')
    return ''.join(parts)


def render_svg(space: InstanceSpace, colour_by: str, path: str | Path, boundary: Polygon | None = None,
               footprints: list[Polygon] | None = None) -> None:
    """scatter of the instance space coloured by a feature (low red, high blue) or by outcome (safe red, unsafe blue)"""
    write_text_atomic(path, build_svg(space, colour_by, boundary, footprints))
