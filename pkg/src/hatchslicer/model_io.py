"""Loading textured OBJ meshes and grayscale/colour texture images."""

from __future__ import annotations

import io
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    CorruptImageError,
    MissingUVError,
    NonManifoldError,
    ObjParseError,
    TextureFormatError,
)

log = logging.getLogger(__name__)

_IGNORED_OBJ_RECORDS = {"vn", "vp", "o", "g", "s", "usemtl", "mtllib", "l", "p"}


@dataclass(frozen=True, eq=False)
class TexturedMesh:
    """Triangle mesh with per-corner texture coordinates.

    ``faces[i]`` holds 3 vertex indices, ``face_uvs[i]`` the matching 3
    texture-coordinate indices. Arrays are read-only once constructed.
    """

    vertices: np.ndarray  # (V, 3) float64, mm
    faces: np.ndarray  # (F, 3) int64
    texcoords: np.ndarray  # (T, 2) float64
    face_uvs: np.ndarray  # (F, 3) int64

    def __post_init__(self):
        for a in (self.vertices, self.faces, self.texcoords, self.face_uvs):
            a.setflags(write=False)

    @property
    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]

    @property
    def triangle_uvs(self) -> np.ndarray:
        return self.texcoords[self.face_uvs]

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def face_normals(self) -> np.ndarray:
        tri = self.triangles
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.where(norm > 0, norm, 1.0)


@dataclass(frozen=True, eq=False)
class GrayTexture:
    """RGB image with channels in [0, 1]; row 0 is the top of the image."""

    pixels: np.ndarray  # (H, W, 3) float64
    wrap: str = "clamp"

    def __post_init__(self):
        if self.wrap not in ("clamp", "repeat"):
            raise ValueError(f"unknown wrap mode {self.wrap!r}")
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"texture pixels must have shape (H, W, 3), got {p.shape}")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("texture channels must lie in [0, 1]")
        p.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def uniform(cls, value: float, size: int = 1) -> GrayTexture:
        return cls(np.full((size, size, 3), float(value)))


def validate_watertight(faces: np.ndarray) -> None:
    edges = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    counts = Counter(map(tuple, edges.tolist()))
    bad = sorted((a, b, n) for (a, b), n in counts.items() if n != 2)
    if bad:
        raise NonManifoldError(bad)


def _parse_index(token: str, count: int, lineno: int, what: str) -> int:
    try:
        i = int(token)
    except ValueError:
        raise ObjParseError(f"bad {what} index {token!r}", lineno) from None
    if i < 0:
        i = count + i
    else:
        i -= 1
    if not 0 <= i < count:
        raise ObjParseError(f"{what} index {token} out of range (have {count})", lineno)
    return i


def parse_obj(text: str, uv_mode: str = "strict", check_watertight: bool = True) -> TexturedMesh:
    """Parse the OBJ subset ``v``, ``vt`` and ``f v/vt[/vn]``.

    Polygons with more than three corners are fan-triangulated. ``uv_mode``
    decides what happens to texture coordinates outside [0, 1]: ``strict``
    rejects them, ``clamp`` clips, ``repeat`` wraps.
    """
    if uv_mode not in ("strict", "clamp", "repeat"):
        raise ValueError(f"unknown uv_mode {uv_mode!r}")
    vertices: list[tuple[float, float, float]] = []
    texcoords: list[tuple[float, float]] = []
    faces: list[tuple[int, int, int]] = []
    face_uvs: list[tuple[int, int, int]] = []
    warned: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *args = line.split()
        if tag == "v":
            if len(args) < 3:
                raise ObjParseError("vertex needs 3 coordinates", lineno)
            try:
                vertices.append((float(args[0]), float(args[1]), float(args[2])))
            except ValueError:
                raise ObjParseError(f"bad vertex {args[:3]}", lineno) from None
        elif tag == "vt":
            if len(args) < 2:
                raise ObjParseError("texture coordinate needs u and v", lineno)
            try:
                texcoords.append((float(args[0]), float(args[1])))
            except ValueError:
                raise ObjParseError(f"bad texture coordinate {args[:2]}", lineno) from None
        elif tag == "f":
            if len(args) < 3:
                raise ObjParseError("face needs at least 3 corners", lineno)
            vi, ti = [], []
            for corner in args:
                parts = corner.split("/")
                if len(parts) < 2 or parts[1] == "":
                    raise MissingUVError(f"face corner {corner!r} has no texture index", lineno)
                vi.append(_parse_index(parts[0], len(vertices), lineno, "vertex"))
                ti.append(_parse_index(parts[1], len(texcoords), lineno, "texture"))
            for k in range(1, len(vi) - 1):
                faces.append((vi[0], vi[k], vi[k + 1]))
                face_uvs.append((ti[0], ti[k], ti[k + 1]))
        else:
            if tag not in warned:
                warned.add(tag)
                level = logging.DEBUG if tag in _IGNORED_OBJ_RECORDS else logging.WARNING
                log.log(level, "ignoring OBJ record %r (first seen on line %d)", tag, lineno)
    if not faces:
        raise ObjParseError("no faces")
    uv = np.asarray(texcoords, dtype=np.float64).reshape(-1, 2)
    out_of_range = (uv < 0.0) | (uv > 1.0)
    if out_of_range.any():
        if uv_mode == "strict":
            bad = int(np.nonzero(out_of_range.any(axis=1))[0][0])
            raise ObjParseError(f"texture coordinate {bad + 1} {tuple(uv[bad])} outside [0, 1]")
        uv = np.clip(uv, 0.0, 1.0) if uv_mode == "clamp" else uv - np.floor(uv)
    f = np.asarray(faces, dtype=np.int64)
    if check_watertight:
        validate_watertight(f)
    return TexturedMesh(
        np.asarray(vertices, dtype=np.float64),
        f,
        uv,
        np.asarray(face_uvs, dtype=np.int64),
    )


def load_mesh(path, uv_mode: str = "strict", check_watertight: bool = True) -> TexturedMesh:
    text = Path(path).read_text(encoding="utf-8", errors="replace")
    return parse_obj(text, uv_mode=uv_mode, check_watertight=check_watertight)


def format_obj(mesh: TexturedMesh, precision: int = 9) -> str:
    out = io.StringIO()
    for x, y, z in mesh.vertices:
        out.write(f"v {x:.{precision}f} {y:.{precision}f} {z:.{precision}f}\n")
    for u, v in mesh.texcoords:
        out.write(f"vt {u:.{precision}f} {v:.{precision}f}\n")
    for (a, b, c), (ta, tb, tc) in zip(mesh.faces, mesh.face_uvs):
        out.write(f"f {a + 1}/{ta + 1} {b + 1}/{tb + 1} {c + 1}/{tc + 1}\n")
    return out.getvalue()


def write_obj(mesh: TexturedMesh, path, precision: int = 9) -> None:
    Path(path).write_text(format_obj(mesh, precision), encoding="utf-8")


# ---------------------------------------------------------------------------
# images


def _read_netpbm(data: bytes) -> np.ndarray:
    magic = data[:2]
    channels = {b"P5": 1, b"P6": 3}[magic]
    # header: magic, width, height, maxval separated by whitespace/comments
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise CorruptImageError("truncated netpbm header")
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise CorruptImageError("malformed netpbm header")
        fields.append(int(data[start:pos]))
    width, height, maxval = fields
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise CorruptImageError("malformed netpbm header")
    pos += 1
    if maxval != 255:
        raise TextureFormatError(f"only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise CorruptImageError(f"bad image size {width}x{height}")
    need = width * height * channels
    body = data[pos : pos + need]
    if len(body) < need:
        raise CorruptImageError(f"pixel data truncated: {len(body)} of {need} bytes")
    arr = np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels)
    return arr


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG or binary PGM/PPM bytes into an (H, W, 3) float array."""
    if data[:2] in (b"P5", b"P6"):
        arr = _read_netpbm(data)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image

        try:
            with Image.open(io.BytesIO(data)) as im:
                im.load()
                if im.mode in ("I;16", "I;16B", "I"):
                    arr = np.asarray(im, dtype=np.float64) / 65535.0
                    arr = np.repeat(arr[:, :, None], 3, axis=2)
                    return np.clip(arr, 0.0, 1.0)
                arr = np.asarray(im.convert("RGB"))
        except (OSError, SyntaxError, ValueError) as exc:
            raise CorruptImageError(f"cannot decode PNG: {exc}") from exc
    else:
        raise TextureFormatError("unsupported image format (expected PNG, P5 or P6)")
    arr = arr.astype(np.float64) / 255.0
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    return arr


def load_texture(path, wrap: str = "clamp") -> GrayTexture:
    data = Path(path).read_bytes()
    return GrayTexture(decode_image(data), wrap=wrap)


def encode_netpbm(pixels: np.ndarray) -> bytes:
    """Encode an (H, W) or (H, W, 3) array in [0, 1] as binary PGM/PPM."""
    arr = np.asarray(pixels, dtype=np.float64)
    q = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    if q.ndim == 2:
        header = f"P5\n{q.shape[1]} {q.shape[0]}\n255\n"
    else:
        header = f"P6\n{q.shape[1]} {q.shape[0]}\n255\n"
    return header.encode("ascii") + q.tobytes()


def sample_texture(tex: GrayTexture, uv) -> np.ndarray:
    """Bilinear RGB lookup; ``uv`` may be one (2,) point or an (N, 2) array."""
    uv = np.asarray(uv, dtype=np.float64)
    single = uv.ndim == 1
    uv = uv.reshape(-1, 2)
    rgb = kernels.bilinear_sample(tex.pixels, uv[:, 0], uv[:, 1], tex.wrap == "repeat")
    return rgb[0] if single else rgb
