"""Texture-driven variable offsetting of layer outlines.

Every outline edge is sampled at a regular interval and each sample is pushed
along the edge's outward normal by the offset its texture tone asks for.
Vertices join two faces and get a displacement that satisfies both adjacent
edges' offsets at once; sharp results are beveled, and corners whose
displacement runs back along the edges skip the samples they pass over.
Whatever self-overlap remains is cleaned up with a positive-winding union.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, kernels
from .halftone import HalftoneParams, luminance_array
from .model_io import GrayTexture, sample_texture
from .slicing import LayerOutline, Loop, normal_components_array

log = logging.getLogger(__name__)

SAMPLE, VERTEX, BEVEL, CLIP = 0, 1, 2, 3
PROVENANCE_NAMES = ("resampled-segment", "displaced-vertex", "bevel-inserted", "clip-intersection")

BLACK, WHITE = "black", "white"

# Below this |cross| / (|BA| |BC|) a corner counts as straight.
_COLLINEAR_SIN = 1e-9
# cos(n) below this is a horizontal face: no stair steps to shift.
_HORIZONTAL_COS = 1e-9


@dataclass(frozen=True)
class OffsetField:
    sample_interval: float = 0.1
    bevel_ratio: float = 1.1
    static_offset: float = 0.1

    def __post_init__(self):
        if not self.sample_interval > 0:
            raise ValueError("sample interval must be positive")
        if not self.bevel_ratio > 1.0:
            raise ValueError("bevel ratio must exceed 1")


@dataclass(eq=False)
class DisplacedPolygon:
    points: np.ndarray  # (N, 2) int64 micrometres
    provenance: np.ndarray  # (N,) int8, see PROVENANCE_NAMES

    @property
    def area_mm2(self) -> float:
        return geometry.area_int(self.points) / geometry.SCALE**2

    def points_mm(self) -> np.ndarray:
        return geometry.to_mm(self.points)


@dataclass(eq=False)
class OffsetResult:
    polygons: list[DisplacedPolygon]
    # Tone-driven displacement per evaluated point, excluding the static part
    # and already signed for this layer's colour.
    displacements: np.ndarray = field(default_factory=lambda: np.empty(0))
    stair_steps: np.ndarray = field(default_factory=lambda: np.empty(0))
    saturated: int = 0
    fallbacks: int = 0
    warnings: list[str] = field(default_factory=list)


def resample(loop, interval: float) -> np.ndarray:
    """Insert evenly spaced points so no two neighbours are over ``interval`` apart."""
    pts = np.asarray(loop, dtype=np.float64)
    out = []
    for i in range(len(pts)):
        a, b = pts[i], pts[(i + 1) % len(pts)]
        m = _subdivisions(float(np.hypot(*(b - a))), interval)
        out.append(a[None, :])
        if m > 1:
            t = np.arange(1, m)[:, None] / m
            out.append(a + t * (b - a))
    return np.concatenate(out)


def _subdivisions(length: float, interval: float) -> int:
    return max(1, math.ceil(length / interval - 1e-9))


def displace_vertex(B, A, C, d_ba: float, d_bc: float) -> np.ndarray:
    """Vertex displacement whose projections on both edges' outward normals are ``d_ba``, ``d_bc``."""
    B = np.asarray(B, dtype=np.float64)
    ba = np.asarray(A, dtype=np.float64) - B
    bc = np.asarray(C, dtype=np.float64) - B
    la = math.hypot(*ba)
    lc = math.hypot(*bc)
    det = ba[0] * bc[1] - ba[1] * bc[0]
    if la == 0.0 or lc == 0.0:
        return np.zeros(2)
    if abs(det) <= _COLLINEAR_SIN * la * lc:
        # straight through: outward normal of BC, average of both offsets
        normal = np.array([bc[1], -bc[0]]) / lc
        return 0.5 * (d_ba + d_bc) * normal
    return (d_ba * la * bc + d_bc * lc * ba) / det


def _omitted(projection: float, spacing: float, available: int) -> int:
    if projection <= 0.0 or available <= 0:
        return 0
    return min(available, int(math.floor(projection / spacing + 1e-9)))


def shortcut_corner(loop, index: int, delta_b, interval: float) -> tuple[int, int]:
    """Samples to drop on (incoming, outgoing) edges at vertex ``index``.

    The displacement is projected on both edges; samples closer to the vertex
    than that projection are skipped by the offset corner.
    """
    pts = np.asarray(loop, dtype=np.float64)
    n = len(pts)
    B = pts[index]
    A = pts[(index - 1) % n]
    C = pts[(index + 1) % n]
    delta_b = np.asarray(delta_b, dtype=np.float64)
    counts = []
    for other in (A, C):
        e = other - B
        length = math.hypot(*e)
        if length == 0.0:
            counts.append(0)
            continue
        m = _subdivisions(length, interval)
        counts.append(_omitted(float(np.dot(delta_b, e)) / length, length / m, m - 1))
    return counts[0], counts[1]


def bevel_corner(delta_b, d_ba: float, d_bc: float, b: float, normal_ba=None, normal_bc=None):
    """``None`` to keep the vertex, else the two displacements replacing it.

    Bevels when the vertex moves more than ``b`` times both edge offsets
    (strict inequality, ties keep the corner).
    """
    if not b > 1.0:
        raise ValueError("bevel ratio must exceed 1")
    mag = math.hypot(*np.asarray(delta_b, dtype=np.float64))
    if not (mag > b * abs(d_ba) and mag > b * abs(d_bc)):
        return None
    if normal_ba is None or normal_bc is None:
        raise ValueError("edge normals are needed to place bevel points")
    return (b * d_ba * np.asarray(normal_ba, dtype=np.float64), b * d_bc * np.asarray(normal_bc, dtype=np.float64))


def clip_positive_winding(loops) -> list[np.ndarray]:
    """Simple loops bounding the positive-winding region (integer coordinates in and out)."""
    return geometry.union_positive(loops)


# ---------------------------------------------------------------------------


@dataclass
class _LoopPlan:
    samples_t: list[np.ndarray]  # per edge: parameters in (0, 1) of interior samples
    points: np.ndarray
    dirs: np.ndarray
    lengths: np.ndarray
    normals2d: np.ndarray


def _plan(loop: Loop, interval: float) -> _LoopPlan:
    pts = loop.points
    nxt = np.roll(pts, -1, axis=0)
    edge = nxt - pts
    lengths = np.hypot(edge[:, 0], edge[:, 1])
    safe = np.where(lengths > 0, lengths, 1.0)
    dirs = edge / safe[:, None]
    normals2d = np.stack([dirs[:, 1], -dirs[:, 0]], axis=1)
    samples_t = []
    for length in lengths:
        m = _subdivisions(float(length), interval)
        samples_t.append(np.arange(1, m) / m)
    return _LoopPlan(samples_t, pts, dirs, lengths, normals2d)


def tone_offsets(
    uv: np.ndarray,
    normals: np.ndarray,
    tex: GrayTexture,
    params: HalftoneParams,
):
    """Black-layer offsets, stair steps and flags for a batch of surface points."""
    rgb = sample_texture(tex, uv) if len(uv) else np.empty((0, 3))
    r = luminance_array(rgb, params.gamma) if len(uv) else np.empty(0)
    sin_n, cos_n = normal_components_array(normals) if len(uv) else (np.empty(0), np.empty(0))
    horizontal = cos_n < _HORIZONTAL_COS
    cos_safe = np.where(horizontal, 1.0, cos_n)
    sin_safe = np.where(horizontal, 0.0, sin_n)
    if params.perpendicular:
        delta, saturated = kernels.perpendicular_offsets(r, sin_safe, cos_safe, params.h, params.cx, params.line_width)
    else:
        delta, saturated = kernels.viewing_offsets(
            r, sin_safe, cos_safe, params.viewing_angle, params.h, params.cx, params.line_width
        )
    delta = np.where(horizontal, 0.0, delta)
    d = params.h * sin_safe / cos_safe
    return delta, np.where(horizontal, 0.0, d), saturated & ~horizontal, horizontal


def apply_variable_offset(
    outline: LayerOutline,
    tex: GrayTexture,
    params: HalftoneParams,
    layer_color: str,
    offset_cfg: OffsetField | None = None,
    tone_scale: float = 1.0,
) -> OffsetResult:
    """Variably offset all loops of one layer and return the cleaned polygons.

    Black layers move outward by the solved offset, white layers inward; both
    also get the static offset. ``tone_scale`` multiplies the tone-driven part
    (0 disables hatching while keeping the static offset).
    """
    if layer_color not in (BLACK, WHITE):
        raise ValueError(f"layer colour must be {BLACK!r} or {WHITE!r}")
    if params.viewing_angle is not None and params.viewing_angle < 0:
        raise ValueError("offsets are only solved for non-negative viewing angles")
    cfg = offset_cfg or OffsetField()
    sign = 1.0 if layer_color == BLACK else -1.0
    result = OffsetResult([])
    rings: list[np.ndarray] = []
    ring_prov: dict[tuple[int, int], int] = {}
    all_disp, all_d = [], []

    for loop in outline.loops:
        if len(loop) < 3:
            continue
        plan = _plan(loop, cfg.sample_interval)
        n = len(loop)
        # query order: all interior samples, then vertex-in, then vertex-out
        uv_parts, nrm_parts = [], []
        for i in range(n):
            t = plan.samples_t[i][:, None]
            uv_parts.append(loop.uv_start[i] + t * (loop.uv_end[i] - loop.uv_start[i]))
            nrm_parts.append(np.repeat(loop.normals[i][None, :], len(t), axis=0))
        n_samples = sum(len(t) for t in plan.samples_t)
        prev = np.roll(np.arange(n), 1)
        uv_parts.append(loop.uv_end[prev])
        nrm_parts.append(loop.normals[prev])
        uv_parts.append(loop.uv_start)
        nrm_parts.append(loop.normals)
        uv = np.concatenate(uv_parts)
        nrm = np.concatenate(nrm_parts)
        delta, d, saturated, horizontal = tone_offsets(uv, nrm, tex, params)
        tone = sign * tone_scale * delta
        applied = cfg.static_offset + tone
        result.saturated += int(saturated.sum())
        if horizontal.any():
            result.fallbacks += int(horizontal.sum())
        all_disp.append(tone)
        all_d.append(d)

        sample_disp = applied[:n_samples]
        d_in = applied[n_samples : n_samples + n]
        d_out = applied[n_samples + n :]

        splits = np.cumsum([len(t) for t in plan.samples_t])[:-1]
        per_edge = np.split(sample_disp, splits)

        # vertex displacements and corner handling
        vertex_pts: list[list[tuple[np.ndarray, int]]] = []
        omit_start = np.zeros(n, dtype=np.int64)  # samples dropped near the edge's start
        omit_end = np.zeros(n, dtype=np.int64)
        pts = plan.points
        for i in range(n):
            B = pts[i]
            A = pts[(i - 1) % n]
            C = pts[(i + 1) % n]
            dv = displace_vertex(B, A, C, d_in[i], d_out[i])
            ba = A - B
            bc = C - B
            la = math.hypot(*ba)
            lc = math.hypot(*bc)
            proj_a = float(np.dot(dv, ba)) / la if la > 0 else 0.0
            proj_c = float(np.dot(dv, bc)) / lc if lc > 0 else 0.0
            ia = (i - 1) % n
            avail_a = len(plan.samples_t[ia])
            avail_c = len(plan.samples_t[i])
            if avail_a:
                omit_end[ia] = _omitted(proj_a, plan.lengths[ia] / (avail_a + 1), avail_a)
            if avail_c:
                omit_start[i] = _omitted(proj_c, plan.lengths[i] / (avail_c + 1), avail_c)
            bevel = None
            if proj_a <= 0.0 and proj_c <= 0.0:
                bevel = bevel_corner(dv, d_in[i], d_out[i], cfg.bevel_ratio, plan.normals2d[ia], plan.normals2d[i])
            if bevel is None:
                vertex_pts.append([(B + dv, VERTEX)])
            else:
                vertex_pts.append([(B + bevel[0], BEVEL), (B + bevel[1], BEVEL)])

        ring: list[np.ndarray] = []
        prov: list[int] = []
        for i in range(n):
            for p, kind in vertex_pts[i]:
                ring.append(p)
                prov.append(kind)
            t = plan.samples_t[i]
            k = len(t)
            lo = omit_start[i]
            hi = k - omit_end[i]
            if hi > lo:
                base = pts[i] + t[lo:hi, None] * (pts[(i + 1) % n] - pts[i])
                moved = base + per_edge[i][lo:hi, None] * plan.normals2d[i]
                ring.extend(moved)
                prov.extend([SAMPLE] * (hi - lo))
        ring_int = geometry.to_int(np.asarray(ring))
        for p, kind in zip(ring_int.tolist(), prov):
            ring_prov.setdefault((p[0], p[1]), kind)
        rings.append(ring_int)

    if result.fallbacks:
        msg = f"layer {outline.index}: {result.fallbacks} horizontal surface points left unhatched"
        result.warnings.append(msg)
        log.debug(msg)
    if result.saturated:
        msg = f"layer {outline.index}: {result.saturated} points need more than one line width of overhang"
        result.warnings.append(msg)
        log.warning(msg)

    for poly in clip_positive_winding(rings):
        prov = np.array([ring_prov.get((int(x), int(y)), CLIP) for x, y in poly], dtype=np.int8)
        result.polygons.append(DisplacedPolygon(poly, prov))
    result.displacements = np.concatenate(all_disp) if all_disp else np.empty(0)
    result.stair_steps = np.concatenate(all_d) if all_d else np.empty(0)
    return result


def static_offset_only(outline: LayerOutline, offset: float) -> list[np.ndarray]:
    """Uniformly offset outline loops (no texture), cleaned with positive winding."""
    rings = [geometry.to_int(loop.points) for loop in outline.loops if len(loop) >= 3]
    if offset == 0:
        return clip_positive_winding(rings)
    return geometry.inset(clip_positive_winding(rings), -offset)
