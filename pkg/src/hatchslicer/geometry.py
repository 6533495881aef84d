"""Integer-micrometre polygon booleans and insets (backed by Clipper)."""

from __future__ import annotations

import numpy as np
import pyclipper

SCALE = 1000  # clipper units per mm (1 unit = 1 micrometre)


def to_int(points) -> np.ndarray:
    return np.rint(np.asarray(points, dtype=np.float64) * SCALE).astype(np.int64)


def to_mm(points) -> np.ndarray:
    return np.asarray(points, dtype=np.float64) / SCALE


def _paths(polys) -> list[list[list[int]]]:
    out = []
    for p in polys:
        p = np.asarray(p, dtype=np.int64)
        if len(p) >= 3:
            out.append(p.tolist())
    return out


def _result(paths) -> list[np.ndarray]:
    return [np.asarray(p, dtype=np.int64) for p in paths if len(p) >= 3]


def area_int(poly) -> float:
    """Signed area in square clipper units (positive = counter-clockwise)."""
    p = np.asarray(poly, dtype=np.float64)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def total_area_mm2(polys) -> float:
    return sum(area_int(p) for p in polys) / SCALE**2


def union_positive(polys) -> list[np.ndarray]:
    """Boundary of the region where the winding number is at least one.

    Collinear input points are kept so resampled outlines survive unchanged;
    output loops are strictly simple.
    """
    paths = _paths(polys)
    if not paths:
        return []
    pc = pyclipper.Pyclipper()
    pc.PreserveCollinear = True
    pc.StrictlySimple = True
    pc.AddPaths(paths, pyclipper.PT_SUBJECT, True)
    return _result(pc.Execute(pyclipper.CT_UNION, pyclipper.PFT_POSITIVE, pyclipper.PFT_POSITIVE))


def _boolean(kind, subject, clip) -> list[np.ndarray]:
    s = _paths(subject)
    c = _paths(clip)
    if not s:
        return []
    pc = pyclipper.Pyclipper()
    pc.AddPaths(s, pyclipper.PT_SUBJECT, True)
    if c:
        pc.AddPaths(c, pyclipper.PT_CLIP, True)
    elif kind in (pyclipper.CT_INTERSECTION,):
        return []
    return _result(pc.Execute(kind, pyclipper.PFT_POSITIVE, pyclipper.PFT_POSITIVE))


def difference(subject, clip) -> list[np.ndarray]:
    return _boolean(pyclipper.CT_DIFFERENCE, subject, clip)


def intersection(subject, clip) -> list[np.ndarray]:
    return _boolean(pyclipper.CT_INTERSECTION, subject, clip)


def intersect_all(groups) -> list[np.ndarray]:
    groups = list(groups)
    if not groups:
        return []
    acc = union_positive(groups[0])
    for g in groups[1:]:
        if not acc:
            break
        acc = intersection(acc, g)
    return acc


def inset(polys, distance_mm: float, miter_limit: float = 2.0) -> list[np.ndarray]:
    """Shrink (positive distance) or grow (negative) a polygon set."""
    paths = _paths(polys)
    if not paths:
        return []
    pco = pyclipper.PyclipperOffset(miter_limit=miter_limit)
    pco.AddPaths(paths, pyclipper.JT_MITER, pyclipper.ET_CLOSEDPOLYGON)
    return _result(pco.Execute(-distance_mm * SCALE))


def drop_small(polys, min_area_mm2: float) -> list[np.ndarray]:
    """Drop outer loops smaller than ``min_area_mm2`` together with their holes."""
    keep = union_positive(polys)
    if min_area_mm2 <= 0:
        return keep
    big = [p for p in keep if area_int(p) >= min_area_mm2 * SCALE**2]
    holes = [p for p in keep if area_int(p) < 0]
    return union_positive(big + holes) if big else []


def point_in_polygons(point, polys) -> bool:
    """True when ``point`` (clipper units) lies inside or on the polygon set."""
    pt = (int(point[0]), int(point[1]))
    winding = 0
    for p in polys:
        res = pyclipper.PointInPolygon(pt, np.asarray(p).tolist())
        if res == -1:
            return True
        if res == 1:
            winding += 1 if area_int(p) > 0 else -1
    return winding > 0


def segments_intersect_count(poly) -> int:
    """Number of non-adjacent edge pairs of a closed polygon that properly cross or touch."""
    p = np.asarray(poly, dtype=np.int64)
    n = len(p)
    if n < 4:
        return 0
    a = p
    b = np.roll(p, -1, axis=0)
    count = 0

    def orient(p1, p2, q):
        return np.sign((p2[..., 0] - p1[..., 0]) * (q[..., 1] - p1[..., 1]) - (p2[..., 1] - p1[..., 1]) * (q[..., 0] - p1[..., 0]))

    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        a1 = np.broadcast_to(a[i], (j.size, 2))
        b1 = np.broadcast_to(b[i], (j.size, 2))
        o1 = orient(a1, b1, a[j])
        o2 = orient(a1, b1, b[j])
        o3 = orient(a[j], b[j], a1)
        o4 = orient(a[j], b[j], b1)
        proper = (o1 * o2 < 0) & (o3 * o4 < 0)
        count += int(proper.sum())
    return count
