"""The compiled and pure-numpy kernels must agree."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hatchslicer import _accel, kernels
from hatchslicer.samples import sphere_mesh

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def test_bilinear_sample_agrees(rng):
    pixels = rng.random((7, 9, 3))
    u = rng.uniform(-1.5, 2.5, 500)
    v = rng.uniform(-1.5, 2.5, 500)
    for repeat in (False, True):
        np.testing.assert_allclose(
            kernels.bilinear_sample_numba(pixels, u, v, repeat),
            kernels.bilinear_sample_numpy(pixels, u, v, repeat),
            rtol=0,
            atol=1e-14,
        )


def test_slice_triangles_agree():
    mesh = sphere_mesh(4.0, 3)
    tri = np.ascontiguousarray(mesh.triangles)
    uv = np.ascontiguousarray(mesh.triangle_uvs)
    for z in (-3.3, -0.4, 0.0, 1.25, 3.9):
        a = kernels.slice_triangles_numba(tri, uv, z)
        b = kernels.slice_triangles_numpy(tri, uv, z)
        np.testing.assert_array_equal(a[5], b[5])
        for x, y in zip(a[:5], b[:5]):
            np.testing.assert_allclose(x, y, rtol=0, atol=1e-13)


def test_perpendicular_offsets_agree(rng):
    r = rng.uniform(0, 1, 2000)
    n = rng.uniform(0, math.radians(85), 2000)
    args = (0.1, 1 - math.sqrt(2) * 0.1 / 0.2, 0.35)
    a = kernels.perpendicular_offsets_numba(r, np.sin(n), np.cos(n), *args)
    b = kernels.perpendicular_offsets_numpy(r, np.sin(n), np.cos(n), *args)
    np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-13)
    np.testing.assert_array_equal(a[1], b[1])


@pytest.mark.parametrize("alpha_deg", [0.0, 20.0, 60.0])
def test_viewing_offsets_agree(rng, alpha_deg):
    r = rng.uniform(0, 1, 500)
    n = rng.uniform(0, math.radians(80), 500)
    args = (math.radians(alpha_deg), 0.1, 1 - math.sqrt(2) * 0.1 / 0.2, 0.35)
    a = kernels.viewing_offsets_numba(r, np.sin(n), np.cos(n), *args)
    b = kernels.viewing_offsets_numpy(r, np.sin(n), np.cos(n), *args)
    np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-12)
    np.testing.assert_array_equal(a[1], b[1])


def test_scanline_intervals_agree(rng):
    for _ in range(20):
        pts = rng.uniform(-2, 2, (int(rng.integers(3, 15)), 2))
        edges = np.hstack([pts, np.roll(pts, -1, axis=0)])
        ys = np.linspace(-2.1, 2.1, 57)
        a = kernels.scanline_intervals_numba(edges, ys)
        b = kernels.scanline_intervals_numpy(edges, ys)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


def test_counter_clockwise_square_is_filled():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    edges = np.hstack([sq, np.roll(sq, -1, axis=0)])
    for fn in (kernels.scanline_intervals_numba, kernels.scanline_intervals_numpy):
        rows, x0, x1 = fn(edges, np.array([0.5]))
        assert rows.tolist() == [0] and x0.tolist() == [0.0] and x1.tolist() == [1.0]
        rows, _, _ = fn(edges[::-1][:, [2, 3, 0, 1]], np.array([0.5]))
        assert rows.size == 0


def test_env_flag_selects_numpy():
    code = "from hatchslicer import _accel; print(_accel.backend())"
    env = dict(os.environ, HATCHSLICER_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["HATCHSLICER_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"
