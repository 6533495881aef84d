"""Dual-extruder G-code and per-layer SVG previews."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import HatchSlicerError, ParityError
from .toolpath import TRAVEL, PrintPath, ToolpathLayer, cross_section_area

EXTRUDER_COLORS = {0: "#000000", 1: "#cccccc"}

DEFAULT_HEADER = """\
; generated by hatchslicer
; flavor: marlin
; filament_diameter: {filament_diameter:.2f}
M82 ; absolute extrusion
G21 ; millimetres
G90 ; absolute positioning
G28 ; home
"""

DEFAULT_FOOTER = """\
M107
M104 T0 S0
M104 T1 S0
M140 S0
G28 X0
M84
; end
"""


@dataclass
class GcodePlan:
    """Everything the G-code writer needs besides the toolpaths."""

    header: str = DEFAULT_HEADER
    footer: str = DEFAULT_FOOTER
    filament_diameter: float = 2.85
    tool_change: str = "T{tool}"
    travel_speed: float = 150.0
    z_speed: float = 10.0

    def __post_init__(self):
        if not self.filament_diameter > 0:
            raise ValueError("filament diameter must be positive")
        if not self.travel_speed > 0 or not self.z_speed > 0:
            raise ValueError("travel speeds must be positive")

    @property
    def filament_area(self) -> float:
        return math.pi * (0.5 * self.filament_diameter) ** 2


def check_parity(layers: list[ToolpathLayer]) -> None:
    """Even layers must be printed entirely by T0, odd layers by T1."""
    for layer in layers:
        want = layer.index % 2
        if layer.extruder != want:
            raise ParityError(f"layer {layer.index} uses extruder {layer.extruder}, expected {want}")
        for path in layer.paths:
            if path.extruder != want:
                raise ParityError(
                    f"layer {layer.index} has a {path.role} path on extruder {path.extruder}, expected {want}"
                )


def path_volume(path: PrintPath, h: float) -> float:
    if path.role == TRAVEL or path.segment_count == 0:
        return 0.0
    return float(np.dot(path.segment_lengths(), cross_section_area(path.widths, h)))


def extruded_volume(layers: list[ToolpathLayer]) -> float:
    """Sum of segment length times cross-section over all extruding segments."""
    return sum(path_volume(p, layer.h) for layer in layers for p in layer.paths)


def _check_finite(path: PrintPath, layer: ToolpathLayer) -> None:
    if not np.all(np.isfinite(path.points)):
        raise HatchSlicerError(f"non-finite coordinate in a {path.role} path on layer {layer.index}")
    if path.role != TRAVEL and not (np.all(np.isfinite(path.widths)) and np.all(np.isfinite(path.speeds))):
        raise HatchSlicerError(f"non-finite width or speed in a {path.role} path on layer {layer.index}")


def emit_gcode(layers: list[ToolpathLayer], plan: GcodePlan | None = None) -> str:
    """Marlin-style G-code with absolute E tracked separately per extruder."""
    plan = plan or GcodePlan()
    check_parity(layers)
    for layer in layers:
        for path in layer.paths:
            _check_finite(path, layer)
    fil = plan.filament_area
    travel_f = f"F{60.0 * plan.travel_speed:.0f}"
    out = [plan.header.format(filament_diameter=plan.filament_diameter).rstrip("\n")]
    # unrounded cumulative E per extruder; printed values never drift
    e_total = {0: 0.0, 1: 0.0}
    tool = None
    for layer in layers:
        if layer.extruder != tool:
            tool = layer.extruder
            out.append(plan.tool_change.format(tool=tool))
            out.append(f"G92 E{e_total[tool]:.5f}")
        out.append(f";LAYER:{layer.index} EXTRUDER:{tool} Z:{layer.z:.3f}")
        out.append(f"G0 Z{layer.z:.3f} F{60.0 * plan.z_speed:.0f}")
        last_f = None
        for path in layer.paths:
            pts = path.points
            if len(pts) == 0:
                continue
            out.append(f";TYPE:{path.role}")
            out.append(f"G0 X{pts[0, 0]:.3f} Y{pts[0, 1]:.3f} {travel_f}")
            last_f = None
            if path.role == TRAVEL:
                for x, y in pts[1:]:
                    out.append(f"G0 X{x:.3f} Y{y:.3f} {travel_f}")
                continue
            lengths = path.segment_lengths()
            areas = cross_section_area(path.widths, layer.h)
            n = len(pts)
            for i in range(path.segment_count):
                x, y = pts[(i + 1) % n]
                e_total[tool] += lengths[i] * areas[i] / fil
                f = f"{60.0 * path.speeds[i]:.1f}"
                move = f"G1 X{x:.3f} Y{y:.3f} E{e_total[tool]:.5f}"
                if f != last_f:
                    move += f" F{f}"
                    last_f = f
                out.append(move)
    out.append(plan.footer.rstrip("\n"))
    return "\n".join(out) + "\n"


_WORD = re.compile(r"([A-Z])(-?\d+(?:\.\d*)?)")


def parse_gcode(text: str):
    """Walk a G-code text and return (layer_tools, extruded_length_per_tool).

    ``layer_tools`` lists (layer index, active tool) for every layer comment.
    Extrusion is summed from positive E increments of G1 moves, honouring
    ``G92 E`` resets and tool changes.
    """
    tool = 0
    e_reg = 0.0
    extruded: dict[int, float] = {}
    layer_tools: list[tuple[int, int]] = []
    for raw in text.splitlines():
        if raw.startswith(";LAYER:"):
            layer_tools.append((int(raw.split()[0].split(":")[1]), tool))
            continue
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if re.fullmatch(r"T\d+", line):
            tool = int(line[1:])
            continue
        words = dict(_WORD.findall(line))
        cmd = line.split()[0]
        if cmd == "G92" and "E" in words:
            e_reg = float(words["E"])
        elif cmd == "G1" and "E" in words:
            e = float(words["E"])
            if e > e_reg:
                extruded[tool] = extruded.get(tool, 0.0) + (e - e_reg)
            e_reg = e
    return layer_tools, extruded


def gcode_volume(text: str, filament_diameter: float = 2.85) -> float:
    _, extruded = parse_gcode(text)
    return sum(extruded.values()) * math.pi * (0.5 * filament_diameter) ** 2


def gcode_parity_ok(text: str) -> bool:
    layer_tools, _ = parse_gcode(text)
    return all(tool == index % 2 for index, tool in layer_tools)


# ---------------------------------------------------------------------------
# SVG


def _bounds(layer: ToolpathLayer):
    pts = [p.points for p in layer.paths if len(p.points)]
    if not pts:
        return np.zeros(2), np.zeros(2)
    allp = np.concatenate(pts)
    return allp.min(axis=0), allp.max(axis=0)


def emit_layer_svg(layer: ToolpathLayer, scale: float = 10.0, margin: float = 1.0, show_travel: bool = True) -> str:
    """SVG 1.1 picture of one layer; y grows upwards as on the printer."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    check_parity([layer])
    lo, hi = _bounds(layer)
    lo = lo - margin
    hi = hi + margin
    width = (hi[0] - lo[0]) * scale
    height = (hi[1] - lo[1]) * scale

    def xy(p):
        return (p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3f}" height="{height:.3f}" '
        f'viewBox="0 0 {width:.3f} {height:.3f}">',
        f"<title>layer {layer.index} z={layer.z:.3f} extruder {layer.extruder}</title>",
        f'<rect x="0" y="0" width="{width:.3f}" height="{height:.3f}" fill="#7fa7c9"/>',
    ]
    color = EXTRUDER_COLORS.get(layer.extruder, "#ff0000")
    travel = 'fill="none" stroke="#ff6600" stroke-width="0.5" stroke-dasharray="2,2"'
    prev_end = None
    for path in layer.paths:
        pts = path.points
        if len(pts) == 0:
            continue
        if show_travel and prev_end is not None:
            (x0, y0), (x1, y1) = xy(prev_end), xy(pts[0])
            out.append(f'<line x1="{x0:.3f}" y1="{y0:.3f}" x2="{x1:.3f}" y2="{y1:.3f}" {travel}/>')
        prev_end = pts[0] if path.closed else pts[-1]
        if path.role == TRAVEL:
            if show_travel:
                d = " ".join(f"{x:.3f},{y:.3f}" for x, y in map(xy, pts))
                out.append(f'<polyline points="{d}" {travel}/>')
            continue
        if path.segment_count == 0:
            continue
        if np.all(path.widths == path.widths[0]):
            cmds = [f"{'M' if i == 0 else 'L'}{x:.3f},{y:.3f}" for i, (x, y) in enumerate(map(xy, pts))]
            if path.closed:
                cmds.append("Z")
            out.append(
                f'<path d="{" ".join(cmds)}" fill="none" stroke="{color}" '
                f'stroke-width="{path.widths[0] * scale:.3f}" stroke-linejoin="round" stroke-linecap="round"/>'
            )
            continue
        n = len(pts)
        for i in range(path.segment_count):
            (x0, y0), (x1, y1) = xy(pts[i]), xy(pts[(i + 1) % n])
            out.append(
                f'<line x1="{x0:.3f}" y1="{y0:.3f}" x2="{x1:.3f}" y2="{y1:.3f}" stroke="{color}" '
                f'stroke-width="{path.widths[i] * scale:.3f}" stroke-linecap="butt"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_name(index: int) -> str:
    return f"layer_{index:04d}.svg"


def write_layer_svg(layer: ToolpathLayer, directory, scale: float = 10.0) -> Path:
    path = Path(directory) / svg_name(layer.index)
    path.write_text(emit_layer_svg(layer, scale), encoding="utf-8")
    return path
