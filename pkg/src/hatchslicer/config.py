"""JSON job configuration with full defaults."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .halftone import HalftoneParams
from .variable_offset import OffsetField


@dataclass
class HalftoneConfig:
    layer_thickness: float = 0.1
    w_full: float = 0.2
    gamma: float = 2.2
    viewing_mode: str = "perpendicular"  # or "fixed"
    viewing_angle_deg: float = 0.0  # used when viewing_mode is "fixed"


@dataclass
class OffsetConfig:
    enabled: bool = True
    sample_interval: float = 0.1
    static_offset: float = 0.1
    bevel_ratio: float = 1.1
    tone_scale: float = 1.0


@dataclass
class ToolpathConfig:
    line_width: float = 0.35
    wall_count: int = 2
    top_layers: int = 8
    bottom_layers: int = 8
    skin_line_distance: float = 0.7
    hatch_sample_interval: float = 0.4
    hatch_angle_deg: float = 0.0
    hatch_top: bool = True
    hatch_bottom: bool = False
    width_floor_ratio: float = 0.02
    infill_density: float = 0.2
    outer_wall_speed: float = 15.0
    inner_wall_speed: float = 25.0
    skin_speed: float = 25.0
    infill_speed: float = 40.0
    reference_speed: float = 25.0
    reference_width: float = 0.35


@dataclass
class EmitConfig:
    gcode_name: str = "print.gcode"
    filament_diameter: float = 2.85
    travel_speed: float = 150.0
    svg: bool = True
    svg_scale: float = 10.0


@dataclass
class JobConfig:
    mesh: str = "model.obj"
    texture: str = "texture.png"
    output_dir: str = "out"
    uv_mode: str = "strict"
    texture_wrap: str = "clamp"
    stitch_tolerance: float = 1e-4
    halftone: HalftoneConfig = field(default_factory=HalftoneConfig)
    offset: OffsetConfig = field(default_factory=OffsetConfig)
    toolpath: ToolpathConfig = field(default_factory=ToolpathConfig)
    emit: EmitConfig = field(default_factory=EmitConfig)
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def resolve(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def mesh_path(self) -> Path:
        return self.resolve(self.mesh)

    @property
    def texture_path(self) -> Path:
        return self.resolve(self.texture)

    @property
    def output_path(self) -> Path:
        return self.resolve(self.output_dir)

    def halftone_params(self) -> HalftoneParams:
        hc = self.halftone
        angle = None if hc.viewing_mode == "perpendicular" else math.radians(hc.viewing_angle_deg)
        return HalftoneParams(
            h=hc.layer_thickness,
            w_full=hc.w_full,
            gamma=hc.gamma,
            line_width=self.toolpath.line_width,
            viewing_angle=angle,
        )

    def offset_field(self) -> OffsetField:
        oc = self.offset
        return OffsetField(oc.sample_interval, oc.bevel_ratio, oc.static_offset)

    def validate(self) -> None:
        hc, oc, tc, ec = self.halftone, self.offset, self.toolpath, self.emit
        positive = {
            "halftone.layer_thickness": hc.layer_thickness,
            "halftone.w_full": hc.w_full,
            "halftone.gamma": hc.gamma,
            "offset.sample_interval": oc.sample_interval,
            "toolpath.line_width": tc.line_width,
            "toolpath.skin_line_distance": tc.skin_line_distance,
            "toolpath.hatch_sample_interval": tc.hatch_sample_interval,
            "toolpath.infill_density": tc.infill_density,
            "toolpath.outer_wall_speed": tc.outer_wall_speed,
            "toolpath.inner_wall_speed": tc.inner_wall_speed,
            "toolpath.skin_speed": tc.skin_speed,
            "toolpath.infill_speed": tc.infill_speed,
            "toolpath.reference_speed": tc.reference_speed,
            "toolpath.reference_width": tc.reference_width,
            "emit.filament_diameter": ec.filament_diameter,
            "emit.travel_speed": ec.travel_speed,
            "emit.svg_scale": ec.svg_scale,
            "stitch_tolerance": self.stitch_tolerance,
        }
        for name, value in positive.items():
            if not (isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0):
                raise ConfigError(f"{name} must be a positive number, got {value!r}")
        if oc.static_offset < 0:
            raise ConfigError("offset.static_offset must not be negative")
        if not oc.bevel_ratio > 1:
            raise ConfigError("offset.bevel_ratio must exceed 1")
        if not 0 <= oc.tone_scale:
            raise ConfigError("offset.tone_scale must not be negative")
        if tc.infill_density > 1:
            raise ConfigError("toolpath.infill_density must lie in (0, 1]")
        if not 0 <= tc.width_floor_ratio <= 1:
            raise ConfigError("toolpath.width_floor_ratio must lie in [0, 1]")
        for name in ("wall_count", "top_layers", "bottom_layers"):
            value = getattr(tc, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"toolpath.{name} must be a non-negative integer")
        if tc.wall_count < 1:
            raise ConfigError("toolpath.wall_count must be at least 1")
        if hc.viewing_mode not in ("perpendicular", "fixed"):
            raise ConfigError("halftone.viewing_mode must be 'perpendicular' or 'fixed'")
        if hc.viewing_mode == "fixed" and not abs(hc.viewing_angle_deg) < 90:
            raise ConfigError("halftone.viewing_angle_deg must lie in (-90, 90)")
        if self.uv_mode not in ("strict", "clamp", "repeat"):
            raise ConfigError("uv_mode must be 'strict', 'clamp' or 'repeat'")
        if self.texture_wrap not in ("clamp", "repeat"):
            raise ConfigError("texture_wrap must be 'clamp' or 'repeat'")
        try:
            self.halftone_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


_SECTIONS = {"halftone": HalftoneConfig, "offset": OffsetConfig, "toolpath": ToolpathConfig, "emit": EmitConfig}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    known = {f.name for f in fields(cls)} - {"base_dir"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS and cls is JobConfig:
            value = _build(_SECTIONS[key], value, key)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict, base_dir=".") -> JobConfig:
    cfg = _build(JobConfig, data, "")
    cfg.base_dir = Path(base_dir)
    cfg.validate()
    return cfg


def load_config(path) -> JobConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data, path.parent)


def default_config_json() -> str:
    return JobConfig().to_json()
