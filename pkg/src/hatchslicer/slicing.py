"""Cutting a textured mesh into per-layer outline loops."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import StitchError
from .model_io import TexturedMesh

DEFAULT_STITCH_TOLERANCE = 1e-4  # mm


@dataclass(frozen=True)
class SlicedSegment:
    p0: tuple[float, float]
    p1: tuple[float, float]
    uv0: tuple[float, float]
    uv1: tuple[float, float]
    face_normal: tuple[float, float, float]


@dataclass(eq=False)
class Loop:
    """Closed polygon; edge ``i`` runs from ``points[i]`` to ``points[i + 1]``.

    Each edge comes from one mesh face and carries that face's texture
    coordinates at both of its ends plus the face normal. At a vertex the
    incoming edge's ``uv_end`` and the outgoing edge's ``uv_start`` can differ
    (texture seams).
    """

    points: np.ndarray  # (N, 2)
    uv_start: np.ndarray  # (N, 2)
    uv_end: np.ndarray  # (N, 2)
    normals: np.ndarray  # (N, 3)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def area(self) -> float:
        return signed_area(self.points)

    @property
    def perimeter(self) -> float:
        return float(np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1).sum())

    def reversed(self) -> Loop:
        # edge j of the result is edge N-1-j of the original, traversed backwards
        pts = np.roll(self.points[::-1], 1, axis=0)
        return Loop(pts, self.uv_end[::-1].copy(), self.uv_start[::-1].copy(), self.normals[::-1].copy())


@dataclass(eq=False)
class LayerOutline:
    index: int
    z: float
    loops: list[Loop] = field(default_factory=list)

    @property
    def area(self) -> float:
        return sum(loop.area for loop in self.loops)


def signed_area(points) -> float:
    p = np.asarray(points, dtype=np.float64)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def normal_components(face_normal) -> tuple[float, float]:
    """(sin n, cos n) of the normal's elevation above the horizontal plane."""
    nx, ny, nz = (float(c) for c in face_normal)
    sin_n = abs(nz)
    cos_n = math.hypot(nx, ny)
    norm = math.hypot(sin_n, cos_n)
    if norm == 0.0:
        raise ValueError("zero normal")
    return sin_n / norm, cos_n / norm


def normal_components_array(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(normals, dtype=np.float64)
    sin_n = np.abs(n[:, 2])
    cos_n = np.hypot(n[:, 0], n[:, 1])
    norm = np.hypot(sin_n, cos_n)
    norm = np.where(norm > 0, norm, 1.0)
    return sin_n / norm, cos_n / norm


class _PointIndex:
    """Exact lookup with a tolerance fallback through a uniform grid."""

    def __init__(self, points: np.ndarray, tolerance: float):
        self.points = points
        self.tol = tolerance
        self.exact: dict[tuple[float, float], list[int]] = {}
        self.grid: dict[tuple[int, int], list[int]] = {}
        cell = max(tolerance, 1e-12)
        self.cell = cell
        for i, (x, y) in enumerate(points.tolist()):
            self.exact.setdefault((x, y), []).append(i)
            self.grid.setdefault((math.floor(x / cell), math.floor(y / cell)), []).append(i)

    def find_exact(self, x: float, y: float, used: np.ndarray) -> int:
        for i in self.exact.get((x, y), ()):
            if not used[i]:
                return i
        return -1

    def find(self, x: float, y: float, used: np.ndarray) -> int:
        i = self.find_exact(x, y, used)
        if i >= 0:
            return i
        if self.tol <= 0:
            return -1
        gx, gy = math.floor(x / self.cell), math.floor(y / self.cell)
        best, best_d = -1, self.tol
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for i in self.grid.get((gx + dx, gy + dy), ()):
                    if used[i]:
                        continue
                    dist = math.hypot(self.points[i, 0] - x, self.points[i, 1] - y)
                    if dist <= best_d:
                        best, best_d = i, dist
        return best


def _stitch_arrays(p0, p1, uv0, uv1, normals, tolerance, layer=None) -> list[Loop]:
    n = len(p0)
    if n == 0:
        return []
    length = np.hypot(*(p1 - p0).T)
    # A segment of zero length links its neighbours through a shared point.
    keep = length > 0.0
    p0, p1, uv0, uv1, normals = p0[keep], p1[keep], uv0[keep], uv1[keep], normals[keep]
    n = len(p0)
    index = _PointIndex(p0, tolerance)
    used = np.zeros(n, dtype=bool)
    loops: list[Loop] = []
    for start in range(n):
        if used[start]:
            continue
        chain = [start]
        used[start] = True
        cur = start
        while True:
            x, y = p1[cur]
            sx, sy = p0[start]
            if x == sx and y == sy:
                break
            nxt = index.find_exact(x, y, used)
            if nxt < 0:
                if len(chain) > 1 and math.hypot(x - sx, y - sy) <= tolerance:
                    break
                nxt = index.find(x, y, used)
            if nxt < 0:
                raise StitchError(
                    f"open chain of {len(chain)} segments ends at ({x:.6f}, {y:.6f})", layer
                )
            used[nxt] = True
            chain.append(nxt)
            cur = nxt
        if len(chain) < 3:
            # two segments folded back onto each other enclose nothing
            continue
        idx = np.asarray(chain)
        loops.append(Loop(p0[idx].copy(), uv0[idx].copy(), uv1[idx].copy(), normals[idx].copy()))
    return loops


def stitch(segments: list[SlicedSegment], tolerance: float = DEFAULT_STITCH_TOLERANCE) -> list[Loop]:
    """Join segments head-to-tail into closed loops, each segment used once."""
    if not segments:
        return []
    p0 = np.array([s.p0 for s in segments], dtype=np.float64)
    p1 = np.array([s.p1 for s in segments], dtype=np.float64)
    uv0 = np.array([s.uv0 for s in segments], dtype=np.float64)
    uv1 = np.array([s.uv1 for s in segments], dtype=np.float64)
    nrm = np.array([s.face_normal for s in segments], dtype=np.float64)
    return _stitch_arrays(p0, p1, uv0, uv1, nrm, tolerance)


def slice_segments(mesh: TexturedMesh, z: float) -> list[SlicedSegment]:
    p0, p1, uv0, uv1, nrm, _ = kernels.slice_triangles(mesh.triangles, mesh.triangle_uvs, z)
    return [
        SlicedSegment(tuple(a), tuple(b), tuple(c), tuple(d), tuple(e))
        for a, b, c, d, e in zip(p0.tolist(), p1.tolist(), uv0.tolist(), uv1.tolist(), nrm.tolist())
    ]


def slice_at(
    mesh: TexturedMesh,
    z: float,
    index: int = 0,
    tolerance: float = DEFAULT_STITCH_TOLERANCE,
    _tri=None,
    _uv=None,
) -> LayerOutline:
    tri = mesh.triangles if _tri is None else _tri
    uv = mesh.triangle_uvs if _uv is None else _uv
    p0, p1, uv0, uv1, nrm, _ = kernels.slice_triangles(tri, uv, z)
    loops = _stitch_arrays(p0, p1, uv0, uv1, nrm, tolerance, layer=index)
    return LayerOutline(index, float(z), loops)


def layer_count(mesh: TexturedMesh, layer_thickness: float) -> int:
    lo, hi = mesh.bounds
    return int(math.floor((hi[2] - lo[2]) / layer_thickness + 1e-9))


def slice_mesh(
    mesh: TexturedMesh,
    layer_thickness: float,
    tolerance: float = DEFAULT_STITCH_TOLERANCE,
) -> list[LayerOutline]:
    """One outline per layer, cut at the layer mid-heights above the mesh bottom."""
    if not layer_thickness > 0:
        raise ValueError("layer thickness must be positive")
    z0 = float(mesh.bounds[0][2])
    tri = mesh.triangles
    uv = mesh.triangle_uvs
    zmin = tri[:, :, 2].min(axis=1)
    zmax = tri[:, :, 2].max(axis=1)
    order = np.argsort(zmin, kind="stable")
    zmin_sorted = zmin[order]
    layers = []
    for k in range(layer_count(mesh, layer_thickness)):
        z = z0 + (k + 0.5) * layer_thickness
        # only faces that start below the plane can reach it
        cand = order[: np.searchsorted(zmin_sorted, z, side="left")]
        cand = cand[zmax[cand] >= z]
        cand.sort()
        layers.append(slice_at(mesh, z, k, tolerance, tri[cand], uv[cand]))
    return layers
