"""SVG frames for simulation reports.

Drawing happens in world coordinates (metres) under a y-flipping group
transform, so every coordinate written to the SVG is the same number that
appears in ``report.json``.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .scenarios import AnnulusSegment, Rect, Scenario

OBSTACLE = "#3a9d3a"
TARGET = "#d62728"
ROBOT = "#1f77b4"
OBSTACLE_HIT = "#ff7f0e"
BAND_MISS = "#9467bd"


def _num(x) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def _annulus_path(o: AnnulusSegment) -> str:
    a0, a1 = math.radians(o.start_deg), math.radians(o.end_deg)
    large = 1 if (o.end_deg - o.start_deg) % 360 > 180 else 0

    def pt(r, a):
        return f"{_num(round(o.cx + r * math.cos(a), 6))} {_num(round(o.cy + r * math.sin(a), 6))}"

    return (
        f"M {pt(o.r_outer, a0)} A {_num(o.r_outer)} {_num(o.r_outer)} 0 {large} 1 {pt(o.r_outer, a1)} "
        f"L {pt(o.r_inner, a1)} A {_num(o.r_inner)} {_num(o.r_inner)} 0 {large} 0 {pt(o.r_inner, a0)} Z"
    )


def frame_svg(scenario: Scenario, row: dict, d_min: float, d_max: float, d_obs_min: float,
              scale: float = 20.0) -> str:
    """One waypoint of a report as an SVG document."""
    W, H = scenario.region.width, scenario.region.height
    ox, oy = scenario.region.origin
    res = scenario.region.resolution
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(W * scale)}" height="{_num(H * scale)}" '
        f'viewBox="0 0 {_num(W * scale)} {_num(H * scale)}">',
        f"<title>{escape(scenario.name)} waypoint {row['index']}</title>",
        f'<rect x="0" y="0" width="{_num(W * scale)}" height="{_num(H * scale)}" fill="white"/>',
        f'<g transform="translate({_num(-ox * scale)} {_num((H + oy) * scale)}) scale({_num(scale)} {_num(-scale)})">',
        '<g id="obstacles" fill="{}" fill-opacity="0.6" stroke="none">'.format(OBSTACLE),
    ]
    for o in scenario.obstacles:
        if isinstance(o, Rect):
            out.append(f'<rect x="{_num(o.x0)}" y="{_num(o.y0)}" width="{_num(round(o.x1 - o.x0, 9))}" '
                       f'height="{_num(round(o.y1 - o.y0, 9))}"/>')
        elif isinstance(o, AnnulusSegment):
            out.append(f'<path d="{_annulus_path(o)}"/>')
    out.append("</g>")

    odist = scenario.obstacle_distances
    r = res * 0.45
    out.append('<g id="robots" stroke="none">')
    targets = row["targets"]
    for x, y in row.get("robots", []):
        near = min(math.hypot(x - tx, y - ty) for tx, ty in targets)
        hit = odist[scenario.region.cell_of((x, y))] < d_obs_min
        colour = OBSTACLE_HIT if hit else (BAND_MISS if near < d_min or near > d_max else ROBOT)
        out.append(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="{_num(r)}" fill="{colour}"/>')
    out.append("</g>")
    out.append(f'<g id="targets" fill="{TARGET}" stroke="none">')
    for tx, ty in targets:
        out.append(f'<circle cx="{_num(tx)}" cy="{_num(ty)}" r="0.2"/>')
    out.append("</g>")
    out.append("</g>")
    v = row.get("violations", {})
    flags = ", ".join(k for k, on in v.items() if on) or "none"
    out.append(f'<text x="6" y="16" font-family="monospace" font-size="12">waypoint {row["index"]} '
               f'{escape(row.get("section", ""))}  violations: {escape(flags)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
