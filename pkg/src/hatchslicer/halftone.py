"""Tone model for line hatching on stair-stepped surfaces.

Alternating black/white layers are shifted against each other; the visible
ratio of white to total filament depends on the shift, the stair-step width
``d = h * tan(n)`` of the sloped surface, the viewing elevation ``alpha`` and,
once a layer overhangs the one below it, on how far the overhanging line sags.

Sign conventions used throughout:

* ``delta`` passed to the forward models is the WHITE-layer offset
  (positive = outward, shows more white).
* The offset solvers return the BLACK-layer offset; white layers receive its
  negation. A positive black offset darkens the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProjectionError, DegenerateSlopeError

LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)

# Bisection budget for the numeric inverse; 80 halvings of a sub-millimetre
# bracket is far below double precision.
BISECTION_STEPS = 80


@dataclass(frozen=True)
class HalftoneParams:
    """Process constants of the tone model.

    ``viewing_angle`` is the fixed viewer elevation in radians, or ``None`` for
    perpendicular viewing (the viewer looks along the local surface normal).
    """

    h: float = 0.1
    w_full: float = 0.2
    gamma: float = 2.2
    line_width: float = 0.35
    viewing_angle: float | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"layer thickness must be positive, got {self.h}")
        if not self.w_full > math.sqrt(2.0) * self.h:
            raise ValueError(
                f"full-occlusion distance {self.w_full} must exceed sqrt(2)*h = {math.sqrt(2) * self.h:.6g}"
            )
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.line_width > 0:
            raise ValueError("line width must be positive")
        if self.viewing_angle is not None and not abs(self.viewing_angle) < math.pi / 2:
            raise ValueError("viewing angle must lie in (-90, 90) degrees")

    @property
    def cx(self) -> float:
        """Ratio of sag-circle recession to overhang."""
        return 1.0 - math.sqrt(2.0) * self.h / self.w_full

    @property
    def perpendicular(self) -> bool:
        return self.viewing_angle is None


@dataclass(frozen=True)
class SaggingProfile:
    delta_x: float
    delta_y: float
    delta_r: float


@dataclass(frozen=True)
class ToneSample:
    r: float
    sin_n: float
    cos_n: float
    d: float

    @classmethod
    def make(cls, r: float, sin_n: float, cos_n: float, h: float) -> ToneSample:
        return cls(r, sin_n, cos_n, stair_step(h, sin_n, cos_n))

    @classmethod
    def from_angle(cls, r: float, n: float, h: float) -> ToneSample:
        return cls.make(r, math.sin(n), math.cos(n), h)


@dataclass(frozen=True)
class OffsetSolution:
    delta: float
    saturated: bool = False


def stair_step(h: float, sin_n: float, cos_n: float) -> float:
    if cos_n <= 0.0:
        return math.inf
    return h * sin_n / cos_n


def luminance(rgb, gamma: float = 2.2) -> float:
    """Gamma-expanded luma of an RGB triple in [0, 1]."""
    red, green, blue = rgb
    y = LUMA_WEIGHTS[0] * red + LUMA_WEIGHTS[1] * green + LUMA_WEIGHTS[2] * blue
    y = min(1.0, max(0.0, y))
    return y ** (1.0 / gamma)


def luminance_array(rgb: np.ndarray, gamma: float = 2.2) -> np.ndarray:
    y = np.asarray(rgb, dtype=np.float64) @ np.asarray(LUMA_WEIGHTS)
    return np.clip(y, 0.0, 1.0) ** (1.0 / gamma)


def _projection(d: float, h: float, alpha: float) -> float:
    p = 2.0 * d * math.sin(alpha) + 2.0 * h * math.cos(alpha)
    if not p > 0.0:
        raise DegenerateProjectionError(
            f"stair pattern has no visible extent (d={d:.6g}, alpha={math.degrees(alpha):.3f} deg)"
        )
    return p


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def perceived_ratio(delta: float, sample: ToneSample, alpha: float, h: float) -> float:
    """Visible white ratio without sagging for white-layer offset ``delta``."""
    d = sample.d
    p = _projection(d, h, alpha)
    return _clamp01(((d + 2.0 * delta) * math.sin(alpha) + h * math.cos(alpha)) / p)


def sagging_profile(o: float, params: HalftoneParams) -> SaggingProfile:
    # Past one line width nothing more can sag.
    o = min(max(o, 0.0), params.line_width)
    dx = params.cx * o
    dr = (o - dx) ** 2 / (4.0 * params.h)
    return SaggingProfile(dx, dr, dr)


def occlusion(o: float, alpha: float, params: HalftoneParams, stair_step: float | None = None) -> float:
    """Projected height of the lower layer hidden by an overhang ``o``.

    Valid for ``alpha`` in [0, pi/2]. When the stair step is given, the result
    is capped at the projected extent of one layer.
    """
    if o <= 0.0:
        return 0.0
    sag = sagging_profile(o, params)
    o = min(o, params.line_width)
    f = (o - sag.delta_x) * math.sin(alpha) + sag.delta_y * math.cos(alpha) + sag.delta_r
    if stair_step is not None:
        f = min(f, stair_step * math.sin(alpha) + params.h * math.cos(alpha))
    return max(f, 0.0)


def _underside_gain(o: float, beta: float, params: HalftoneParams) -> float:
    """Visibility gained by a sagged layer seen from below at depression ``beta``.

    The drooping bottom covers the riser underneath (``delta_y + delta_r``
    projected) while the receding, rounder edge hides part of the layer's own
    underside (``delta_x`` projected). Matches ``occlusion`` at beta = 0.
    """
    if o <= 0.0:
        return 0.0
    sag = sagging_profile(o, params)
    g = (sag.delta_y + sag.delta_r) * math.cos(beta) - sag.delta_x * math.sin(beta)
    limit = params.h * math.cos(beta)
    return min(limit, max(-limit, g))


def overhangs(delta: float, d: float) -> tuple[float, float]:
    """(white, black) overhang distances for white-layer offset ``delta``."""
    return max(0.0, 2.0 * delta - d), max(0.0, -2.0 * delta - d)


def sagged_ratio(delta: float, sample: ToneSample, alpha: float, params: HalftoneParams) -> float:
    """Visible white ratio including sag occlusion, for white-layer offset ``delta``.

    Negative ``alpha`` (viewer below the surface) uses the underside model;
    this branch is for prediction only and is never inverted.
    """
    d = sample.d
    h = params.h
    p = _projection(d, h, alpha)
    o_white, o_black = overhangs(delta, d)
    if alpha >= 0.0:
        s = occlusion(o_white, alpha, params, d) - occlusion(o_black, alpha, params, d)
        visible = (d + 2.0 * delta) * math.sin(alpha) + h * math.cos(alpha) + s
    else:
        beta = -alpha
        s = _underside_gain(o_white, beta, params) - _underside_gain(o_black, beta, params)
        visible = h * math.cos(alpha) + (d - 2.0 * delta) * math.sin(alpha) + s
    return _clamp01(visible / p)


def max_offset(d: float, params: HalftoneParams) -> float:
    """Largest useful offset: the overhang reaches one full line width."""
    return 0.5 * d + 0.5 * params.line_width


def solve_perpendicular(r: float, sin_n: float, cos_n: float, params: HalftoneParams) -> OffsetSolution:
    """Black-layer offset that shows ratio ``r`` to a viewer along the normal.

    Below the sagging onset the closed form of the flat stair model applies.
    Past it, the overhang ``o = 2*delta - d`` solves the quadratic obtained by
    composing the stair model with the sag occlusion at ``alpha = n``::

        k*(1 + cos n)/(4h) * o^2 + (2 - cx) sin n * o + (2h r / cos n - h cos n) = 0

    with ``k = (1 - cx)^2`` and ``cx`` the sag recession ratio. The result is
    ``saturated`` when the overhang had to be limited to one line width.
    """
    if not (0.0 <= sin_n < 1.0 and 0.0 < cos_n <= 1.0):
        raise DegenerateSlopeError(
            f"closed-form offset needs a non-horizontal surface (sin_n={sin_n}, cos_n={cos_n})"
        )
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"tone ratio must lie in [0, 1], got {r}")
    h = params.h
    q = 0.5 - r
    direction = 1.0 if q >= 0.0 else -1.0
    q = abs(q)
    if q == 0.0:
        return OffsetSolution(0.0)
    d = h * sin_n / cos_n
    if sin_n > 0.0:
        delta = q * h / (sin_n * cos_n)
        if 2.0 * delta <= d:
            return OffsetSolution(direction * delta)
    cx = params.cx
    c2 = (1.0 - cx) ** 2
    a = c2 * (1.0 + cos_n) / (4.0 * h)
    b = (2.0 - cx) * sin_n
    c = 2.0 * h * (0.5 - q) / cos_n - h * cos_n
    det = max(0.0, b * b - 4.0 * a * c)
    root = b + math.sqrt(det)
    o = -2.0 * c / root if root > 0.0 else 0.0
    saturated = False
    if o > params.line_width:
        o = params.line_width
        saturated = True
    return OffsetSolution(direction * 0.5 * (o + d), saturated)


def offset_for_perpendicular(r: float, sin_n: float, cos_n: float, params: HalftoneParams) -> float:
    return solve_perpendicular(r, sin_n, cos_n, params).delta


def solve_viewing_angle(
    r: float, sin_n: float, cos_n: float, alpha: float, params: HalftoneParams
) -> OffsetSolution:
    """Black-layer offset for a fixed viewer elevation, by bisection on the forward model.

    The forward model is nondecreasing in the white offset for ``alpha >= 0``.
    Where a whole interval reaches ``r`` (saturated tones), the smallest
    displacement is returned. Unreachable tones clamp to the offset bound.
    """
    if alpha < 0.0:
        raise ValueError("offsets are only solved for non-negative viewing angles")
    if not (0.0 <= sin_n < 1.0 and 0.0 < cos_n <= 1.0):
        raise DegenerateSlopeError(f"sin_n={sin_n}, cos_n={cos_n}")
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"tone ratio must lie in [0, 1], got {r}")
    sample = ToneSample.make(r, sin_n, cos_n, params.h)
    bound = max_offset(sample.d, params)

    def ratio(delta_white: float) -> float:
        return sagged_ratio(delta_white, sample, alpha, params)

    if r == 0.5:
        return OffsetSolution(0.0)
    if r > 0.5:
        if ratio(bound) < r:
            return OffsetSolution(-bound, True)
        lo, hi = 0.0, bound
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            if ratio(mid) >= r:
                hi = mid
            else:
                lo = mid
        return OffsetSolution(-hi)
    if ratio(-bound) > r:
        return OffsetSolution(bound, True)
    lo, hi = -bound, 0.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if ratio(mid) <= r:
            lo = mid
        else:
            hi = mid
    return OffsetSolution(-lo)


def offset_for_viewing_angle(
    r: float, sin_n: float, cos_n: float, alpha: float, params: HalftoneParams
) -> float:
    return solve_viewing_angle(r, sin_n, cos_n, alpha, params).delta


def response_grid(n: float, phis, rs, params: HalftoneParams) -> np.ndarray:
    """Predicted luminance for offsets tuned to perpendicular viewing.

    ``grid[i, j]`` is the ratio seen from ``alpha = n + phis[i]`` on a surface
    of angle ``n`` whose offset was solved for tone ``rs[j]``. Cells whose
    viewing angle leaves (-90, 90) degrees or sees no stair extent are NaN.
    """
    phis = np.asarray(phis, dtype=np.float64)
    rs = np.asarray(rs, dtype=np.float64)
    sin_n, cos_n = math.sin(n), math.cos(n)
    sample = ToneSample.make(0.5, sin_n, cos_n, params.h)
    deltas = [offset_for_perpendicular(float(r), sin_n, cos_n, params) for r in rs]
    grid = np.full((phis.size, rs.size), np.nan)
    for i, phi in enumerate(phis):
        alpha = n + float(phi)
        if not abs(alpha) < math.pi / 2:
            continue
        for j, delta in enumerate(deltas):
            try:
                grid[i, j] = sagged_ratio(-delta, sample, alpha, params)
            except DegenerateProjectionError:
                pass
    return grid


def write_response_csv(stream, phis, rs, grid: np.ndarray) -> None:
    """CSV: header of r values, first column phi in degrees, empty cell = no data."""
    stream.write("phi_deg," + ",".join(f"{r:.6f}" for r in rs) + "\n")
    for phi, row in zip(phis, grid):
        cells = ["" if not np.isfinite(v) else f"{v:.6f}" for v in row]
        stream.write(f"{math.degrees(phi):.6f}," + ",".join(cells) + "\n")
