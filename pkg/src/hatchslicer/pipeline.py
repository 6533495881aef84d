"""End-to-end slicing job: mesh and texture in, G-code, SVGs and a report out."""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, geometry
from ._accel import backend
from .config import JobConfig
from .emit import GcodePlan, emit_gcode, extruded_volume, gcode_parity_ok, gcode_volume, write_layer_svg
from .errors import ConfigError
from .model_io import GrayTexture, TexturedMesh, load_mesh, load_texture
from .slicing import LayerOutline, slice_mesh
from .toolpath import (
    INFILL,
    SKIN,
    FlowModel,
    PlanarUVMap,
    PrintPath,
    ToolpathLayer,
    compute_skin_regions,
    fill_skin,
    horizontal_hatch,
    inner_area,
    line_paths,
    wall_paths,
    wall_polygons,
)
from .variable_offset import BLACK, WHITE, apply_variable_offset, static_offset_only

log = logging.getLogger(__name__)

REPORT_NAME = "report.json"


@dataclass
class _OffsetLayer:
    polygons: list[np.ndarray]
    reference: list[np.ndarray]
    saturated: int = 0
    fallbacks: int = 0
    max_tone_offset: float = 0.0
    warnings: list[str] = field(default_factory=list)


@dataclass
class JobResult:
    layers: list[ToolpathLayer]
    gcode: str
    report: dict


def layer_color(index: int) -> str:
    return BLACK if index % 2 == 0 else WHITE


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def stage(self, name):
        timer = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.timings[name] = timer.timings.get(name, 0.0) + time.perf_counter() - self.t0

        return _Stage()


def _offset_layer(outline: LayerOutline, tex: GrayTexture, cfg: JobConfig) -> _OffsetLayer:
    static = cfg.offset.static_offset
    reference = static_offset_only(outline, static)
    if not cfg.offset.enabled:
        return _OffsetLayer(reference, reference)
    res = apply_variable_offset(
        outline,
        tex,
        cfg.halftone_params(),
        layer_color(outline.index),
        cfg.offset_field(),
        cfg.offset.tone_scale,
    )
    peak = float(np.abs(res.displacements).max()) if res.displacements.size else 0.0
    return _OffsetLayer(
        [p.points for p in res.polygons], reference, res.saturated, res.fallbacks, peak, res.warnings
    )


def _toolpath_layer(
    k: int,
    z: float,
    polygons,
    skin,
    infill,
    exposed,
    tex: GrayTexture,
    uv_maps: dict[str, PlanarUVMap],
    slice_z: float,
    cfg: JobConfig,
    flow: FlowModel,
) -> tuple[ToolpathLayer, dict]:
    tc = cfg.toolpath
    ext = k % 2
    lw = tc.line_width
    walls = wall_polygons(polygons, lw, tc.wall_count) if polygons else []
    paths: list[PrintPath] = wall_paths(walls, lw, ext, tc.outer_wall_speed, tc.inner_wall_speed)
    alt = math.pi / 4 if k % 2 == 0 else 3 * math.pi / 4
    hatch_count = 0
    dense = skin
    for facing, region in exposed.items():
        if not region:
            continue
        hatch_region = geometry.intersection(skin, region)
        if not hatch_region:
            continue
        dense = geometry.difference(dense, hatch_region)
        lines = fill_skin(hatch_region, tc.skin_line_distance, math.radians(tc.hatch_angle_deg))
        hatched = horizontal_hatch(
            lines,
            tex,
            uv_maps[facing],
            flow,
            tc.skin_line_distance,
            tc.hatch_sample_interval,
            layer_color(k),
            z=slice_z,
            gamma=cfg.halftone.gamma,
            floor_ratio=tc.width_floor_ratio,
            extruder=ext,
        )
        hatch_count += sum(p.segment_count for p in hatched)
        paths += hatched
    if dense:
        paths += line_paths(fill_skin(dense, lw, alt), lw, tc.skin_speed, SKIN, ext)
    if infill:
        paths += line_paths(fill_skin(infill, lw / tc.infill_density, alt), lw, tc.infill_speed, INFILL, ext)
    info = {
        "walls": len(walls),
        "wall_paths": sum(len(w) for w in walls),
        "skin_area_mm2": round(geometry.total_area_mm2(skin), 6),
        "infill_area_mm2": round(geometry.total_area_mm2(infill), 6),
        "hatch_segments": hatch_count,
    }
    return ToolpathLayer(k, z, ext, paths, cfg.halftone.layer_thickness), info


def run_job(
    cfg: JobConfig,
    threads: int | None = None,
    mesh: TexturedMesh | None = None,
    texture: GrayTexture | None = None,
    write: bool = True,
) -> JobResult:
    """Run every stage; ``mesh``/``texture`` override the configured files."""
    cfg.validate()
    hc = cfg.halftone
    if hc.viewing_mode == "fixed" and hc.viewing_angle_deg < 0 and cfg.offset.enabled:
        raise ConfigError("offsets can only be solved for viewing angles of 0 degrees or more")
    threads = threads or os.cpu_count() or 1
    timer = _Timer()
    t_start = time.perf_counter()
    warnings: list[str] = []

    with timer.stage("load"):
        if mesh is None:
            if not cfg.mesh_path.is_file():
                raise ConfigError(f"mesh not found: {cfg.mesh_path}")
            mesh = load_mesh(cfg.mesh_path, uv_mode=cfg.uv_mode)
        if texture is None:
            if not cfg.texture_path.is_file():
                raise ConfigError(f"texture not found: {cfg.texture_path}")
            texture = load_texture(cfg.texture_path, wrap=cfg.texture_wrap)

    h = hc.layer_thickness
    with timer.stage("slice"):
        outlines = slice_mesh(mesh, h, cfg.stitch_tolerance)
    n = len(outlines)
    z0 = float(mesh.bounds[0][2])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        with timer.stage("offset"):
            offsets = list(pool.map(lambda o: _offset_layer(o, texture, cfg), outlines))
        for off in offsets:
            warnings += off.warnings

        with timer.stage("toolpath"):
            tc = cfg.toolpath
            ref_inner = list(pool.map(lambda o: inner_area(o.reference, tc.line_width, tc.wall_count), offsets))
            act_inner = list(pool.map(lambda o: inner_area(o.polygons, tc.line_width, tc.wall_count), offsets))
            regions = compute_skin_regions(ref_inner, tc.top_layers, tc.bottom_layers, actual=act_inner)
            uv_maps = {}
            if tc.hatch_top:
                uv_maps["up"] = PlanarUVMap(mesh, "up")
            if tc.hatch_bottom:
                uv_maps["down"] = PlanarUVMap(mesh, "down")

            def exposed(k):
                out = {}
                if "up" in uv_maps:
                    above = ref_inner[k + 1] if k + 1 < n else []
                    out["up"] = geometry.difference(ref_inner[k], above) if above else ref_inner[k]
                if "down" in uv_maps:
                    below = ref_inner[k - 1] if k > 0 else []
                    out["down"] = geometry.difference(ref_inner[k], below) if below else ref_inner[k]
                return out

            flow = FlowModel.from_reference(tc.reference_speed, tc.reference_width, h)

            def build(k):
                return _toolpath_layer(
                    k,
                    round((k + 1) * h, 9),
                    offsets[k].polygons,
                    regions[k][0],
                    regions[k][1],
                    exposed(k),
                    texture,
                    uv_maps,
                    outlines[k].z,
                    cfg,
                    flow,
                )

            built = list(pool.map(build, range(n)))
        layers = [b[0] for b in built]

        plan = GcodePlan(filament_diameter=cfg.emit.filament_diameter, travel_speed=cfg.emit.travel_speed)
        with timer.stage("emit_gcode"):
            gcode = emit_gcode(layers, plan)
        out_dir = cfg.output_path
        svg_files: list[str] = []
        if write:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / cfg.emit.gcode_name).write_text(gcode, encoding="utf-8")
            if cfg.emit.svg:
                with timer.stage("emit_svg"):
                    svg_files = [
                        p.name for p in pool.map(lambda L: write_layer_svg(L, out_dir, cfg.emit.svg_scale), layers)
                    ]

    model_volume = extruded_volume(layers)
    parsed_volume = gcode_volume(gcode, plan.filament_diameter)
    per_layer = []
    for k, ((layer, info), off) in enumerate(zip(built, offsets)):
        per_layer.append(
            {
                "index": k,
                "z": layer.z,
                "extruder": layer.extruder,
                "color": layer_color(k),
                "loops": len(outlines[k].loops),
                **info,
                "paths": len(layer.paths),
                "saturated_points": off.saturated,
                "fallback_points": off.fallbacks,
                "max_tone_offset_mm": round(off.max_tone_offset, 6),
            }
        )
    timer.timings["total"] = time.perf_counter() - t_start
    report = {
        "hatchslicer": __version__,
        "backend": backend(),
        "threads": threads,
        "mesh": {
            "faces": int(len(mesh.faces)),
            "bounds_min": [round(float(v), 6) for v in mesh.bounds[0]],
            "bounds_max": [round(float(v), 6) for v in mesh.bounds[1]],
            "z_offset": z0,
        },
        "texture": {"width": texture.width, "height": texture.height},
        "layer_count": n,
        "flow_mm3_per_s": flow.c,
        "layers": per_layer,
        "totals": {
            "paths": sum(len(L.paths) for L in layers),
            "segments": sum(p.segment_count for L in layers for p in L.paths),
            "hatch_segments": sum(r["hatch_segments"] for r in per_layer),
            "saturated_points": sum(o.saturated for o in offsets),
            "fallback_points": sum(o.fallbacks for o in offsets),
            "extruded_volume_mm3": model_volume,
            "gcode_volume_mm3": parsed_volume,
        },
        "checks": {
            "parity": gcode_parity_ok(gcode),
            "volume_relative_error": abs(parsed_volume - model_volume) / model_volume if model_volume else 0.0,
        },
        "timings_s": {k: round(v, 6) for k, v in timer.timings.items()},
        "warnings": warnings,
        "outputs": {"gcode": cfg.emit.gcode_name if write else None, "svg": svg_files},
    }
    if write:
        (out_dir / REPORT_NAME).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return JobResult(layers, gcode, report)
