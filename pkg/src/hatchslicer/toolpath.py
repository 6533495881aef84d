"""Walls, skin, infill and width-modulated skin hatching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, kernels
from .halftone import luminance_array
from .model_io import GrayTexture, TexturedMesh, sample_texture

OUTER_WALL = "outer-wall"
INNER_WALL = "inner-wall"
SKIN = "skin"
INFILL = "infill"
TRAVEL = "travel"
ROLES = (OUTER_WALL, INNER_WALL, SKIN, INFILL, TRAVEL)


@dataclass(eq=False)
class PrintPath:
    """Polyline with per-segment width (mm) and speed (mm/s).

    A closed path has as many segments as points; an open one has one fewer.
    """

    points: np.ndarray
    widths: np.ndarray
    speeds: np.ndarray
    role: str
    extruder: int
    closed: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        n_seg = self.segment_count
        self.widths = np.broadcast_to(np.asarray(self.widths, dtype=np.float64), (n_seg,)).copy()
        self.speeds = np.broadcast_to(np.asarray(self.speeds, dtype=np.float64), (n_seg,)).copy()
        if self.role not in ROLES:
            raise ValueError(f"unknown path role {self.role!r}")
        if self.role != TRAVEL and n_seg and (np.any(self.widths <= 0) or np.any(self.speeds <= 0)):
            raise ValueError("extruding segments need positive width and speed")

    @property
    def segment_count(self) -> int:
        n = len(self.points)
        if n < 2:
            return 0
        return n if self.closed else n - 1

    def segments(self):
        pts = self.points
        n = len(pts)
        for i in range(self.segment_count):
            yield pts[i], pts[(i + 1) % n], self.widths[i], self.speeds[i]

    def segment_lengths(self) -> np.ndarray:
        pts = self.points
        if self.closed:
            ends = np.roll(pts, -1, axis=0)
        else:
            pts, ends = pts[:-1], pts[1:]
        return np.hypot(*(ends - pts).T)


@dataclass(eq=False)
class ToolpathLayer:
    index: int
    z: float
    extruder: int
    paths: list[PrintPath] = field(default_factory=list)
    h: float = 0.1


@dataclass(frozen=True)
class FlowModel:
    """Constant volumetric flow ``c`` (mm^3/s) for layer thickness ``h``."""

    c: float
    h: float

    def __post_init__(self):
        if not self.c > 0 or not self.h > 0:
            raise ValueError("flow and layer thickness must be positive")

    @classmethod
    def from_reference(cls, speed: float, width: float, h: float) -> FlowModel:
        return cls(speed * width * h, h)

    def speed(self, width):
        return self.c / cross_section_area(width, self.h)


def cross_section_area(w, h):
    """Area of a printed line: rectangle with round ends, or a circle when w < h."""
    w = np.asarray(w, dtype=np.float64)
    if np.any(w <= 0) or not h > 0:
        raise ValueError("line width and layer thickness must be positive")
    area = np.where(w < h, math.pi * (0.5 * w) ** 2, math.pi * (0.5 * h) ** 2 + h * (w - h))
    return float(area) if area.ndim == 0 else area


# ---------------------------------------------------------------------------
# walls


def wall_polygons(polygons, line_width: float, wall_count: int) -> list[list[np.ndarray]]:
    """Centre lines of each wall, outermost first; vanished walls are dropped."""
    if wall_count < 1:
        raise ValueError("need at least one wall")
    walls = []
    current = geometry.inset(polygons, 0.5 * line_width)
    for _ in range(wall_count):
        if not current:
            break
        walls.append(current)
        current = geometry.inset(current, line_width)
    return walls


def inner_area(polygons, line_width: float, wall_count: int) -> list[np.ndarray]:
    """Region left inside the innermost wall."""
    return geometry.inset(polygons, wall_count * line_width)


def generate_walls(
    polygons,
    line_width: float,
    wall_count: int,
    extruder: int = 0,
    outer_speed: float = 15.0,
    inner_speed: float = 25.0,
) -> list[PrintPath]:
    return wall_paths(wall_polygons(polygons, line_width, wall_count), line_width, extruder, outer_speed, inner_speed)


def wall_paths(walls, line_width: float, extruder: int, outer_speed: float, inner_speed: float) -> list[PrintPath]:
    paths = []
    for k, loops in enumerate(walls):
        role = OUTER_WALL if k == 0 else INNER_WALL
        speed = outer_speed if k == 0 else inner_speed
        for poly in loops:
            paths.append(PrintPath(geometry.to_mm(poly), line_width, speed, role, extruder, closed=True))
    return paths


# ---------------------------------------------------------------------------
# skin / infill


def compute_skin_regions(
    inner_areas: list[list[np.ndarray]],
    top_layers: int,
    bottom_layers: int,
    actual: list[list[np.ndarray]] | None = None,
) -> list[tuple[list[np.ndarray], list[np.ndarray]]]:
    """(skin, infill) per layer.

    Skin is whatever part of a layer's inner area is not covered by all of the
    ``top_layers`` layers above it (or all ``bottom_layers`` below). When
    ``actual`` areas are given, classification uses ``inner_areas`` and the
    result is cut to the actual areas.
    """
    n = len(inner_areas)
    out = []
    for k in range(n):
        region = inner_areas[k]
        exposed: list[np.ndarray] = []
        if top_layers > 0:
            above = [inner_areas[k + j] if k + j < n else [] for j in range(1, top_layers + 1)]
            exposed += geometry.difference(region, geometry.intersect_all(above))
        if bottom_layers > 0:
            below = [inner_areas[k - j] if k - j >= 0 else [] for j in range(1, bottom_layers + 1)]
            exposed += geometry.difference(region, geometry.intersect_all(below))
        skin = geometry.union_positive(exposed)
        base = region if actual is None else actual[k]
        if actual is not None:
            skin = geometry.intersection(base, skin) if skin else []
        infill = geometry.difference(base, skin) if skin else geometry.union_positive(base)
        out.append((skin, infill))
    return out


def _rotate(points: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return points @ np.array([[c, s], [-s, c]])


def fill_skin(region, line_distance: float, angle: float = 0.0) -> np.ndarray:
    """Parallel fill lines clipped to ``region`` (integer polygons), as (K, 2, 2) mm.

    Lines run along ``angle``. In the rotated frame the first line lies half a
    line distance above the region's lowest point; lines are ordered by
    scanline and alternate direction.
    """
    if not line_distance > 0:
        raise ValueError("line distance must be positive")
    polys = [geometry.to_mm(p) for p in region if len(p) >= 3]
    if not polys:
        return np.empty((0, 2, 2))
    rotated = [_rotate(p, -angle) for p in polys]
    edges = np.concatenate([np.hstack([p, np.roll(p, -1, axis=0)]) for p in rotated])
    ymin = min(p[:, 1].min() for p in rotated)
    ymax = max(p[:, 1].max() for p in rotated)
    ys = ymin + line_distance * (0.5 + np.arange(int(math.ceil((ymax - ymin) / line_distance)) + 1))
    ys = ys[ys < ymax]
    if ys.size == 0:
        return np.empty((0, 2, 2))
    rows, x0, x1 = kernels.scanline_intervals(edges, ys)
    if rows.size == 0:
        return np.empty((0, 2, 2))
    odd = rows % 2 == 1
    # boustrophedon: odd rows run right to left
    order = np.lexsort((np.where(odd, -x0, x0), rows))
    rows, x0, x1, odd = rows[order], x0[order], x1[order], odd[order]
    segs = np.empty((rows.size, 2, 2))
    segs[:, 0, 0] = np.where(odd, x1, x0)
    segs[:, 1, 0] = np.where(odd, x0, x1)
    segs[:, :, 1] = ys[rows][:, None]
    return _rotate(segs.reshape(-1, 2), angle).reshape(-1, 2, 2)


def line_paths(segments: np.ndarray, width: float, speed: float, role: str, extruder: int) -> list[PrintPath]:
    return [PrintPath(seg, width, speed, role, extruder) for seg in segments]


# ---------------------------------------------------------------------------
# horizontal hatching


class PlanarUVMap:
    """Texture coordinates of points on a mesh's horizontal faces.

    ``facing="up"`` maps points to the lowest upward face at or above a given
    height (top skin), ``"down"`` to the highest downward face at or below it.
    """

    def __init__(self, mesh: TexturedMesh, facing: str = "up", tol: float = 1e-9):
        if facing not in ("up", "down"):
            raise ValueError("facing must be 'up' or 'down'")
        normals = mesh.face_normals()
        want = normals[:, 2] > 1 - tol if facing == "up" else normals[:, 2] < -(1 - tol)
        idx = np.nonzero(want)[0]
        self.facing = facing
        self.tri = mesh.triangles[idx][:, :, :2]
        self.z = mesh.triangles[idx][:, :, 2].mean(axis=1)
        self.uv = mesh.triangle_uvs[idx]
        self.lo = self.tri.min(axis=1)
        self.hi = self.tri.max(axis=1)

    def __len__(self) -> int:
        return len(self.tri)

    def query(self, points: np.ndarray, z: float, eps: float = 1e-9) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        out = np.full((len(points), 2), np.nan)
        best = np.full(len(points), np.inf)
        for f in range(len(self.tri)):
            fz = self.z[f]
            if self.facing == "up":
                if fz < z - eps:
                    continue
                rank = fz
            else:
                if fz > z + eps:
                    continue
                rank = -fz
            inside_box = np.all((points >= self.lo[f] - eps) & (points <= self.hi[f] + eps), axis=1)
            cand = np.nonzero(inside_box & (rank < best))[0]
            if cand.size == 0:
                continue
            a, b, c = self.tri[f]
            v0, v1 = b - a, c - a
            den = v0[0] * v1[1] - v0[1] * v1[0]
            if den == 0:
                continue
            rel = points[cand] - a
            l1 = (rel[:, 0] * v1[1] - rel[:, 1] * v1[0]) / den
            l2 = (v0[0] * rel[:, 1] - v0[1] * rel[:, 0]) / den
            l0 = 1 - l1 - l2
            hit = (l0 >= -eps) & (l1 >= -eps) & (l2 >= -eps)
            cand = cand[hit]
            uv = self.uv[f]
            out[cand] = l0[hit, None] * uv[0] + l1[hit, None] * uv[1] + l2[hit, None] * uv[2]
            best[cand] = rank
        return out


def hatch_widths(
    luminance: np.ndarray, line_distance: float, layer_color: str, floor_ratio: float = 0.02
) -> np.ndarray:
    """Printed width per segment: dark tones widen black lines, light tones widen white lines."""
    L = np.clip(np.asarray(luminance, dtype=np.float64), 0.0, 1.0)
    cover = (1.0 - L) if layer_color == "black" else L
    return np.clip(cover * line_distance, floor_ratio * line_distance, line_distance)


def horizontal_hatch(
    skin_lines: np.ndarray,
    tex: GrayTexture,
    uv_map,
    flow: FlowModel,
    line_distance: float,
    sample_interval: float,
    layer_color: str,
    z: float = 0.0,
    gamma: float = 2.2,
    floor_ratio: float = 0.02,
    extruder: int = 0,
    subsamples: int = 4,
) -> list[PrintPath]:
    """Split skin lines at ``sample_interval`` and modulate each piece's width.

    ``uv_map`` is either a ``PlanarUVMap`` or a callable mapping (N, 2) points
    to (N, 2) texture coordinates (NaN where unmapped). Speed keeps the
    volumetric flow constant; unmapped pieces print at full width.
    Zero-width pieces are left out, which turns them into travel moves.
    """
    if not sample_interval > 0:
        raise ValueError("sample interval must be positive")
    lookup = uv_map.query if isinstance(uv_map, PlanarUVMap) else uv_map
    paths = []
    for seg in np.asarray(skin_lines, dtype=np.float64).reshape(-1, 2, 2):
        a, b = seg
        length = float(np.hypot(*(b - a)))
        if length == 0:
            continue
        m = max(1, math.ceil(length / sample_interval - 1e-9))
        knots = a + (np.arange(m + 1) / m)[:, None] * (b - a)
        # luminance averaged over evenly spread points inside each piece
        t = (np.arange(m)[:, None] + (np.arange(subsamples) + 0.5)[None, :] / subsamples) / m
        probe = a + t.reshape(-1, 1) * (b - a)
        uv = lookup(probe, z) if isinstance(uv_map, PlanarUVMap) else lookup(probe)
        uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
        mapped = np.all(np.isfinite(uv), axis=1)
        lum = np.full(len(probe), np.nan)
        if mapped.any():
            lum[mapped] = luminance_array(sample_texture(tex, uv[mapped]), gamma)
        lum = lum.reshape(m, subsamples)
        count = np.isfinite(lum).sum(axis=1)
        mean = np.nansum(lum, axis=1) / np.maximum(count, 1)
        widths = np.where(count > 0, hatch_widths(mean, line_distance, layer_color, floor_ratio), line_distance)
        # split at non-printing pieces
        start = 0
        for i in range(m + 1):
            if i == m or widths[i] <= 0:
                if i > start:
                    w = widths[start:i]
                    paths.append(PrintPath(knots[start : i + 1], w, flow.speed(w), SKIN, extruder))
                start = i + 1
    return paths
