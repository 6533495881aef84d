"""Time each hot kernel in its numba and pure-numpy flavour.

    python benchmarks/bench_kernels.py [--repeat 5] [--pipeline]

``--pipeline`` also times a full plate job twice in fresh interpreters, once
with HATCHSLICER_NUMBA=1 and once with HATCHSLICER_NUMBA=0.
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from hatchslicer import kernels
from hatchslicer.samples import sphere_mesh

CX = 1 - math.sqrt(2) * 0.1 / 0.2


def cases(rng):
    pixels = rng.random((256, 256, 3))
    u, v = rng.uniform(0, 1, 200_000), rng.uniform(0, 1, 200_000)
    yield "bilinear_sample (200k)", (pixels, u, v, False)

    mesh = sphere_mesh(10.0, 6)
    tri = np.ascontiguousarray(mesh.triangles)
    uv = np.ascontiguousarray(mesh.triangle_uvs)
    yield f"slice_triangles ({len(tri)} faces)", (tri, uv, 1.234)

    r = rng.uniform(0, 1, 100_000)
    n = rng.uniform(0, math.radians(80), 100_000)
    yield "perpendicular_offsets (100k)", (r, np.sin(n), np.cos(n), 0.1, CX, 0.35)
    yield "viewing_offsets (10k)", (r[:10_000], np.sin(n[:10_000]), np.cos(n[:10_000]), 0.3, 0.1, CX, 0.35)

    ang = np.linspace(0, 2 * math.pi, 400, endpoint=False)
    rad = 10 + rng.uniform(-1, 1, 400)
    pts = np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    edges = np.ascontiguousarray(np.hstack([pts, np.roll(pts, -1, axis=0)]))
    yield "scanline_intervals (400 edges x 2000 rows)", (edges, np.linspace(-11, 11, 2000))


KERNELS = {
    "bilinear_sample": (kernels.bilinear_sample_numba, kernels.bilinear_sample_numpy),
    "slice_triangles": (kernels.slice_triangles_numba, kernels.slice_triangles_numpy),
    "perpendicular_offsets": (kernels.perpendicular_offsets_numba, kernels.perpendicular_offsets_numpy),
    "viewing_offsets": (kernels.viewing_offsets_numba, kernels.viewing_offsets_numpy),
    "scanline_intervals": (kernels.scanline_intervals_numba, kernels.scanline_intervals_numpy),
}


def best_of(fn, args, repeat):
    fn(*args)  # warm up (compiles on first call)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


PIPELINE = """
import tempfile, time
from hatchslicer.config import load_config
from hatchslicer.pipeline import run_job
from hatchslicer.samples import write_fixture
with tempfile.TemporaryDirectory() as tmp:
    cfg = load_config(write_fixture(tmp))
    t0 = time.perf_counter()
    run_job(cfg, threads=1, write=False)
    print(time.perf_counter() - t0)
"""


def pipeline_time(flag: str) -> float:
    env = dict(os.environ, HATCHSLICER_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--pipeline", action="store_true", help="also time the plate job end to end")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':46s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for label, call_args in cases(rng):
        fast, slow = KERNELS[label.split()[0]]
        t_fast = best_of(fast, call_args, args.repeat)
        t_slow = best_of(slow, call_args, args.repeat)
        print(f"{label:46s} {t_fast * 1e3:8.2f}ms {t_slow * 1e3:8.2f}ms {t_slow / t_fast:7.1f}x")

    if args.pipeline:
        # first run fills numba's on-disk cache
        pipeline_time("1")
        t_fast, t_slow = pipeline_time("1"), pipeline_time("0")
        print(f"{'plate job, 1 thread':46s} {t_fast:9.2f}s {t_slow:9.2f}s {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
