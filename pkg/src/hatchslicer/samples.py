"""Small textured meshes and textures for tests, demos and benchmarks.

``python -m hatchslicer.samples DIR`` writes the plate fixture (mesh, texture
and a job file) into DIR.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .config import JobConfig
from .model_io import GrayTexture, TexturedMesh, encode_netpbm, write_obj

# corner i of the unit cube is (i & 1, i >> 1 & 1, i >> 2 & 1)
_BOX_QUADS = (
    (0, 2, 3, 1),  # bottom
    (4, 5, 7, 6),  # top
    (0, 1, 5, 4),  # front (y = 0)
    (3, 2, 6, 7),  # back
    (2, 0, 4, 6),  # left
    (1, 3, 7, 5),  # right
)
_QUAD_UV = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def box_mesh(size=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)) -> TexturedMesh:
    """Axis-aligned box; every face shows the whole texture, upright on the sides."""
    corners = np.array([[i & 1, i >> 1 & 1, i >> 2 & 1] for i in range(8)], dtype=np.float64)
    verts = np.asarray(origin, dtype=np.float64) + corners * np.asarray(size, dtype=np.float64)
    faces, fuv = [], []
    for a, b, c, d in _BOX_QUADS:
        faces += [(a, b, c), (a, c, d)]
        fuv += [(0, 1, 2), (0, 2, 3)]
    return TexturedMesh(verts, np.array(faces, dtype=np.int64), _QUAD_UV.copy(), np.array(fuv, dtype=np.int64))


def sphere_mesh(radius: float = 5.0, subdivisions: int = 3, center=(0.0, 0.0, 0.0)) -> TexturedMesh:
    """Subdivided octahedron; texture projected along y onto the x-z plane."""
    verts = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    faces = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4), (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    pts = [np.array(v, dtype=np.float64) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = pts[i] + pts[j]
                pts.append(m / np.linalg.norm(m))
                cache[key] = len(pts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    unit = np.array(pts)
    verts = np.asarray(center, dtype=np.float64) + radius * unit
    uv = np.clip(0.5 + 0.5 * unit[:, [0, 2]], 0.0, 1.0)
    f = np.array(faces, dtype=np.int64)
    return TexturedMesh(verts, f, uv, f.copy())


def gradient_texture(size: int = 256, wrap: str = "clamp") -> GrayTexture:
    """Gray ramp from black on the left to white on the right."""
    ramp = np.linspace(0.0, 1.0, size)
    pixels = np.repeat(np.tile(ramp, (size, 1))[:, :, None], 3, axis=2)
    return GrayTexture(pixels, wrap=wrap)


def plate_fixture() -> tuple[TexturedMesh, GrayTexture]:
    """35 mm wide, 2 mm deep, 35 mm tall plate with a 256 px gradient."""
    return box_mesh((35.0, 2.0, 35.0)), gradient_texture(256)


def write_fixture(directory, mesh: TexturedMesh | None = None, texture: GrayTexture | None = None) -> Path:
    """Write mesh, texture and a single-wall job file; returns the job path."""
    if mesh is None or texture is None:
        mesh, texture = plate_fixture()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_obj(mesh, directory / "model.obj")
    (directory / "texture.ppm").write_bytes(encode_netpbm(texture.pixels))
    cfg = JobConfig(mesh="model.obj", texture="texture.ppm", output_dir="out")
    cfg.toolpath.wall_count = 1
    job = directory / "job.json"
    job.write_text(cfg.to_json(), encoding="utf-8")
    return job


if __name__ == "__main__":
    print(write_fixture(sys.argv[1] if len(sys.argv) > 1 else "fixture"))
