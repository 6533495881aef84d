"""Hot numeric loops, each in a numba and a pure-numpy flavour.

The public names at the bottom dispatch on ``_accel.USE_NUMBA``. Both
flavours are kept importable (``*_numba`` / ``*_numpy``) so tests can check
them against each other and the benchmark can time them side by side.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# texture sampling


def bilinear_sample_numpy(pixels: np.ndarray, u: np.ndarray, v: np.ndarray, repeat: bool) -> np.ndarray:
    height, width = pixels.shape[:2]
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if repeat:
        u = u - np.floor(u)
        v = v - np.floor(v)
    else:
        u = np.clip(u, 0.0, 1.0)
        v = np.clip(v, 0.0, 1.0)
    # v = 1 is the top image row.
    x = u * width - 0.5
    y = (1.0 - v) * height - 0.5
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    x1 = x0 + 1
    y1 = y0 + 1
    if repeat:
        x0 %= width
        x1 %= width
        y0 %= height
        y1 %= height
    else:
        x0 = np.clip(x0, 0, width - 1)
        x1 = np.clip(x1, 0, width - 1)
        y0 = np.clip(y0, 0, height - 1)
        y1 = np.clip(y1, 0, height - 1)
    top = pixels[y0, x0] * (1.0 - fx) + pixels[y0, x1] * fx
    bottom = pixels[y1, x0] * (1.0 - fx) + pixels[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


@njit
def bilinear_sample_numba(pixels, u, v, repeat):
    height, width = pixels.shape[0], pixels.shape[1]
    n = u.shape[0]
    out = np.empty((n, pixels.shape[2]))
    for i in range(n):
        uu = u[i]
        vv = v[i]
        if repeat:
            uu = uu - math.floor(uu)
            vv = vv - math.floor(vv)
        else:
            uu = min(1.0, max(0.0, uu))
            vv = min(1.0, max(0.0, vv))
        x = uu * width - 0.5
        y = (1.0 - vv) * height - 0.5
        fx0 = math.floor(x)
        fy0 = math.floor(y)
        fx = x - fx0
        fy = y - fy0
        x0 = int(fx0)
        y0 = int(fy0)
        x1 = x0 + 1
        y1 = y0 + 1
        if repeat:
            x0 %= width
            x1 %= width
            y0 %= height
            y1 %= height
        else:
            x0 = min(width - 1, max(0, x0))
            x1 = min(width - 1, max(0, x1))
            y0 = min(height - 1, max(0, y0))
            y1 = min(height - 1, max(0, y1))
        for c in range(pixels.shape[2]):
            top = pixels[y0, x0, c] * (1.0 - fx) + pixels[y0, x1, c] * fx
            bottom = pixels[y1, x0, c] * (1.0 - fx) + pixels[y1, x1, c] * fx
            out[i, c] = top * (1.0 - fy) + bottom * fy
    return out


# ---------------------------------------------------------------------------
# triangle / plane intersection
#
# A vertex with z >= plane counts as "above". Every crossing edge therefore
# has exactly one endpoint below, and the crossing point is interpolated from
# that endpoint, so the two faces sharing an edge produce bit-identical points.
# Segments are oriented so that the material lies on their left.


def slice_triangles_numpy(tri: np.ndarray, uv: np.ndarray, z: float):
    zs = tri[:, :, 2]
    above = zs >= z
    n_above = above.sum(axis=1)
    hit = np.nonzero((n_above > 0) & (n_above < 3))[0]
    if hit.size == 0:
        empty2 = np.empty((0, 2))
        return empty2, empty2, empty2, empty2, np.empty((0, 3)), np.empty(0, dtype=np.int64)
    t3 = tri[hit]
    u3 = uv[hit]
    a = above[hit]
    pts = np.empty((hit.size, 2, 2))
    uvs = np.empty((hit.size, 2, 2))
    slot = np.zeros(hit.size, dtype=np.int64)
    rows = np.arange(hit.size)
    for i, j in ((0, 1), (1, 2), (2, 0)):
        cross = a[:, i] != a[:, j]
        lo = np.where(a[:, i], j, i)
        hi = np.where(a[:, i], i, j)
        plo = t3[rows, lo]
        phi = t3[rows, hi]
        t = (z - plo[:, 2]) / np.where(cross, phi[:, 2] - plo[:, 2], 1.0)
        p = plo[:, :2] + t[:, None] * (phi[:, :2] - plo[:, :2])
        q = u3[rows, lo] + t[:, None] * (u3[rows, hi] - u3[rows, lo])
        idx = rows[cross]
        pts[idx, slot[idx]] = p[cross]
        uvs[idx, slot[idx]] = q[cross]
        slot[idx] += 1
    normal = np.cross(t3[:, 1] - t3[:, 0], t3[:, 2] - t3[:, 0])
    norm = np.linalg.norm(normal, axis=1)
    keep = norm > 0.0
    normal = normal / np.where(keep, norm, 1.0)[:, None]
    direction = pts[:, 1] - pts[:, 0]
    flip = direction[:, 0] * -normal[:, 1] + direction[:, 1] * normal[:, 0] < 0.0
    pts[flip] = pts[flip][:, ::-1]
    uvs[flip] = uvs[flip][:, ::-1]
    return (
        pts[keep, 0],
        pts[keep, 1],
        uvs[keep, 0],
        uvs[keep, 1],
        normal[keep],
        hit[keep].astype(np.int64),
    )


@njit
def slice_triangles_numba(tri, uv, z):
    m = tri.shape[0]
    p0 = np.empty((m, 2))
    p1 = np.empty((m, 2))
    uv0 = np.empty((m, 2))
    uv1 = np.empty((m, 2))
    normals = np.empty((m, 3))
    faces = np.empty(m, dtype=np.int64)
    count = 0
    px = np.empty(2)
    py = np.empty(2)
    pu = np.empty(2)
    pv = np.empty(2)
    for f in range(m):
        n_above = 0
        for k in range(3):
            if tri[f, k, 2] >= z:
                n_above += 1
        if n_above == 0 or n_above == 3:
            continue
        ax = tri[f, 1, 0] - tri[f, 0, 0]
        ay = tri[f, 1, 1] - tri[f, 0, 1]
        az = tri[f, 1, 2] - tri[f, 0, 2]
        bx = tri[f, 2, 0] - tri[f, 0, 0]
        by = tri[f, 2, 1] - tri[f, 0, 1]
        bz = tri[f, 2, 2] - tri[f, 0, 2]
        nx = ay * bz - az * by
        ny = az * bx - ax * bz
        nz = ax * by - ay * bx
        norm = math.sqrt(nx * nx + ny * ny + nz * nz)
        if norm == 0.0:
            continue
        s = 0
        for e in range(3):
            i = e
            j = (e + 1) % 3
            ai = tri[f, i, 2] >= z
            aj = tri[f, j, 2] >= z
            if ai == aj:
                continue
            lo = j if ai else i
            hi = i if ai else j
            t = (z - tri[f, lo, 2]) / (tri[f, hi, 2] - tri[f, lo, 2])
            px[s] = tri[f, lo, 0] + t * (tri[f, hi, 0] - tri[f, lo, 0])
            py[s] = tri[f, lo, 1] + t * (tri[f, hi, 1] - tri[f, lo, 1])
            pu[s] = uv[f, lo, 0] + t * (uv[f, hi, 0] - uv[f, lo, 0])
            pv[s] = uv[f, lo, 1] + t * (uv[f, hi, 1] - uv[f, lo, 1])
            s += 1
        nx /= norm
        ny /= norm
        nz /= norm
        a = 0
        b = 1
        if (px[1] - px[0]) * -ny + (py[1] - py[0]) * nx < 0.0:
            a = 1
            b = 0
        p0[count, 0] = px[a]
        p0[count, 1] = py[a]
        p1[count, 0] = px[b]
        p1[count, 1] = py[b]
        uv0[count, 0] = pu[a]
        uv0[count, 1] = pv[a]
        uv1[count, 0] = pu[b]
        uv1[count, 1] = pv[b]
        normals[count, 0] = nx
        normals[count, 1] = ny
        normals[count, 2] = nz
        faces[count] = f
        count += 1
    return p0[:count], p1[:count], uv0[:count], uv1[:count], normals[:count], faces[:count]


# ---------------------------------------------------------------------------
# tone -> offset solvers (vectorised over sample points)


def perpendicular_offsets_numpy(r, sin_n, cos_n, h, cx, line_width):
    r = np.asarray(r, dtype=np.float64)
    sin_n = np.asarray(sin_n, dtype=np.float64)
    cos_n = np.asarray(cos_n, dtype=np.float64)
    q = 0.5 - r
    direction = np.where(q >= 0.0, 1.0, -1.0)
    q = np.abs(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = h * sin_n / cos_n
        flat = q * h / (sin_n * cos_n)
        use_flat = (sin_n > 0.0) & (2.0 * flat <= d)
        c2 = (1.0 - cx) ** 2
        a = c2 * (1.0 + cos_n) / (4.0 * h)
        b = (2.0 - cx) * sin_n
        c = 2.0 * h * (0.5 - q) / cos_n - h * cos_n
        det = np.maximum(0.0, b * b - 4.0 * a * c)
        root = b + np.sqrt(det)
        o = np.where(root > 0.0, -2.0 * c / root, 0.0)
    saturated = ~use_flat & (o > line_width)
    o = np.minimum(o, line_width)
    delta = np.where(use_flat, flat, 0.5 * (o + d))
    delta = np.where(q == 0.0, 0.0, delta)
    saturated &= q != 0.0
    return direction * delta, saturated


@njit
def perpendicular_offsets_numba(r, sin_n, cos_n, h, cx, line_width):
    n = r.shape[0]
    out = np.empty(n)
    saturated = np.zeros(n, dtype=np.bool_)
    c2 = (1.0 - cx) ** 2
    for i in range(n):
        q = 0.5 - r[i]
        direction = 1.0 if q >= 0.0 else -1.0
        q = abs(q)
        if q == 0.0:
            out[i] = 0.0
            continue
        s = sin_n[i]
        k = cos_n[i]
        d = h * s / k
        if s > 0.0:
            flat = q * h / (s * k)
            if 2.0 * flat <= d:
                out[i] = direction * flat
                continue
        a = c2 * (1.0 + k) / (4.0 * h)
        b = (2.0 - cx) * s
        c = 2.0 * h * (0.5 - q) / k - h * k
        det = max(0.0, b * b - 4.0 * a * c)
        root = b + math.sqrt(det)
        o = -2.0 * c / root if root > 0.0 else 0.0
        if o > line_width:
            o = line_width
            saturated[i] = True
        out[i] = direction * 0.5 * (o + d)
    return out, saturated


def _occlusion_numpy(o, sin_a, cos_a, h, cx, line_width, d):
    o = np.clip(o, 0.0, line_width)
    dx = cx * o
    dr = (o - dx) ** 2 / (4.0 * h)
    f = (o - dx) * sin_a + dr * cos_a + dr
    f = np.minimum(f, d * sin_a + h * cos_a)
    return np.where(o > 0.0, np.maximum(f, 0.0), 0.0)


def _forward_numpy(delta, d, sin_a, cos_a, h, cx, line_width):
    p = 2.0 * d * sin_a + 2.0 * h * cos_a
    o_white = np.maximum(0.0, 2.0 * delta - d)
    o_black = np.maximum(0.0, -2.0 * delta - d)
    s = _occlusion_numpy(o_white, sin_a, cos_a, h, cx, line_width, d) - _occlusion_numpy(
        o_black, sin_a, cos_a, h, cx, line_width, d
    )
    return np.clip(((d + 2.0 * delta) * sin_a + h * cos_a + s) / p, 0.0, 1.0)


def viewing_offsets_numpy(r, sin_n, cos_n, alpha, h, cx, line_width, steps=80):
    r = np.asarray(r, dtype=np.float64)
    sin_n = np.asarray(sin_n, dtype=np.float64)
    cos_n = np.asarray(cos_n, dtype=np.float64)
    sin_a, cos_a = math.sin(alpha), math.cos(alpha)
    d = h * sin_n / cos_n
    bound = 0.5 * d + 0.5 * line_width
    upper = r > 0.5
    # Bisect on the white offset within [0, bound] (upper) or [-bound, 0].
    lo = np.where(upper, 0.0, -bound)
    hi = np.where(upper, bound, 0.0)
    f_hi = _forward_numpy(bound, d, sin_a, cos_a, h, cx, line_width)
    f_lo = _forward_numpy(-bound, d, sin_a, cos_a, h, cx, line_width)
    saturated = np.where(upper, f_hi < r, f_lo > r)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        f = _forward_numpy(mid, d, sin_a, cos_a, h, cx, line_width)
        go_left = np.where(upper, f >= r, f > r)
        hi = np.where(go_left, mid, hi)
        lo = np.where(go_left, lo, mid)
    white = np.where(upper, hi, lo)
    white = np.where(saturated, np.where(upper, bound, -bound), white)
    white = np.where(r == 0.5, 0.0, white)
    return -white, saturated & (r != 0.5)


@njit
def _occlusion_scalar(o, sin_a, cos_a, h, cx, line_width, d):
    if o <= 0.0:
        return 0.0
    o = min(o, line_width)
    dx = cx * o
    dr = (o - dx) ** 2 / (4.0 * h)
    f = (o - dx) * sin_a + dr * cos_a + dr
    f = min(f, d * sin_a + h * cos_a)
    return max(f, 0.0)


@njit
def _forward_scalar(delta, d, sin_a, cos_a, h, cx, line_width):
    p = 2.0 * d * sin_a + 2.0 * h * cos_a
    o_white = max(0.0, 2.0 * delta - d)
    o_black = max(0.0, -2.0 * delta - d)
    s = _occlusion_scalar(o_white, sin_a, cos_a, h, cx, line_width, d) - _occlusion_scalar(
        o_black, sin_a, cos_a, h, cx, line_width, d
    )
    v = ((d + 2.0 * delta) * sin_a + h * cos_a + s) / p
    return min(1.0, max(0.0, v))


@njit
def viewing_offsets_numba(r, sin_n, cos_n, alpha, h, cx, line_width, steps=80):
    n = r.shape[0]
    out = np.empty(n)
    saturated = np.zeros(n, dtype=np.bool_)
    sin_a = math.sin(alpha)
    cos_a = math.cos(alpha)
    for i in range(n):
        target = r[i]
        if target == 0.5:
            out[i] = 0.0
            continue
        d = h * sin_n[i] / cos_n[i]
        bound = 0.5 * d + 0.5 * line_width
        if target > 0.5:
            if _forward_scalar(bound, d, sin_a, cos_a, h, cx, line_width) < target:
                out[i] = -bound
                saturated[i] = True
                continue
            lo = 0.0
            hi = bound
            for _ in range(steps):
                mid = 0.5 * (lo + hi)
                if _forward_scalar(mid, d, sin_a, cos_a, h, cx, line_width) >= target:
                    hi = mid
                else:
                    lo = mid
            out[i] = -hi
        else:
            if _forward_scalar(-bound, d, sin_a, cos_a, h, cx, line_width) > target:
                out[i] = bound
                saturated[i] = True
                continue
            lo = -bound
            hi = 0.0
            for _ in range(steps):
                mid = 0.5 * (lo + hi)
                if _forward_scalar(mid, d, sin_a, cos_a, h, cx, line_width) <= target:
                    lo = mid
                else:
                    hi = mid
            out[i] = -lo
    return out, saturated


# ---------------------------------------------------------------------------
# scanline fill: intervals of positive winding along horizontal lines


def scanline_intervals_numpy(edges: np.ndarray, ys: np.ndarray):
    """Return (row, x_start, x_end) triples for every positive-winding run."""
    rows, starts, ends = [], [], []
    if edges.shape[0] == 0:
        empty = np.empty(0)
        return np.empty(0, dtype=np.int64), empty, empty
    x0, y0, x1, y1 = edges.T
    up = y1 > y0
    ylo = np.minimum(y0, y1)
    yhi = np.maximum(y0, y1)
    for k, y in enumerate(ys):
        hit = (ylo <= y) & (y < yhi)
        if not hit.any():
            continue
        t = (y - y0[hit]) / (y1[hit] - y0[hit])
        xs = x0[hit] + t * (x1[hit] - x0[hit])
        wind = np.where(up[hit], -1, 1)
        order = np.lexsort((-wind, xs))
        xs = xs[order]
        running = np.cumsum(wind[order])
        before = np.concatenate(([0], running[:-1]))
        opening = xs[(before <= 0) & (running > 0)]
        closing = xs[(before > 0) & (running <= 0)]
        for a, b in zip(opening, closing):
            if b > a:
                rows.append(k)
                starts.append(a)
                ends.append(b)
    return np.asarray(rows, dtype=np.int64), np.asarray(starts), np.asarray(ends)


@njit
def scanline_intervals_numba(edges, ys):
    m = edges.shape[0]
    cap = 16
    rows = np.empty(cap, dtype=np.int64)
    starts = np.empty(cap)
    ends = np.empty(cap)
    count = 0
    xs = np.empty(m)
    wind = np.empty(m, dtype=np.int64)
    for k in range(ys.shape[0]):
        y = ys[k]
        c = 0
        for e in range(m):
            x0 = edges[e, 0]
            y0 = edges[e, 1]
            x1 = edges[e, 2]
            y1 = edges[e, 3]
            lo = min(y0, y1)
            hi = max(y0, y1)
            if lo <= y and y < hi:
                t = (y - y0) / (y1 - y0)
                xs[c] = x0 + t * (x1 - x0)
                wind[c] = -1 if y1 > y0 else 1
                c += 1
        if c == 0:
            continue
        # insertion sort by (x, -wind); c is small per scanline
        for i in range(1, c):
            xv = xs[i]
            wv = wind[i]
            j = i - 1
            while j >= 0 and (xs[j] > xv or (xs[j] == xv and wind[j] < wv)):
                xs[j + 1] = xs[j]
                wind[j + 1] = wind[j]
                j -= 1
            xs[j + 1] = xv
            wind[j + 1] = wv
        running = 0
        start = 0.0
        for i in range(c):
            before = running
            running += wind[i]
            if before <= 0 and running > 0:
                start = xs[i]
            elif before > 0 and running <= 0:
                if xs[i] > start:
                    if count == cap:
                        cap *= 2
                        rows2 = np.empty(cap, dtype=np.int64)
                        starts2 = np.empty(cap)
                        ends2 = np.empty(cap)
                        rows2[:count] = rows[:count]
                        starts2[:count] = starts[:count]
                        ends2[:count] = ends[:count]
                        rows = rows2
                        starts = starts2
                        ends = ends2
                    rows[count] = k
                    starts[count] = start
                    ends[count] = xs[i]
                    count += 1
    return rows[:count], starts[:count], ends[:count]


# ---------------------------------------------------------------------------
# dispatch


def _contig(a, dtype=np.float64):
    return np.ascontiguousarray(a, dtype=dtype)


def bilinear_sample(pixels, u, v, repeat: bool):
    u = _contig(np.atleast_1d(u))
    v = _contig(np.atleast_1d(v))
    if _accel.USE_NUMBA:
        return bilinear_sample_numba(_contig(pixels), u, v, bool(repeat))
    return bilinear_sample_numpy(pixels, u, v, repeat)


def slice_triangles(tri, uv, z: float):
    if _accel.USE_NUMBA:
        return slice_triangles_numba(_contig(tri), _contig(uv), float(z))
    return slice_triangles_numpy(tri, uv, z)


def perpendicular_offsets(r, sin_n, cos_n, h, cx, line_width):
    if _accel.USE_NUMBA:
        return perpendicular_offsets_numba(
            _contig(r), _contig(sin_n), _contig(cos_n), float(h), float(cx), float(line_width)
        )
    return perpendicular_offsets_numpy(r, sin_n, cos_n, h, cx, line_width)


def viewing_offsets(r, sin_n, cos_n, alpha, h, cx, line_width, steps: int = 80):
    if _accel.USE_NUMBA:
        return viewing_offsets_numba(
            _contig(r), _contig(sin_n), _contig(cos_n), float(alpha), float(h), float(cx), float(line_width), steps
        )
    return viewing_offsets_numpy(r, sin_n, cos_n, alpha, h, cx, line_width, steps)


def scanline_intervals(edges, ys):
    edges = _contig(edges).reshape(-1, 4)
    ys = _contig(ys)
    if _accel.USE_NUMBA:
        return scanline_intervals_numba(edges, ys)
    return scanline_intervals_numpy(edges, ys)
