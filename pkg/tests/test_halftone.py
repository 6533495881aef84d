import io
import math
from dataclasses import astuple

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hatchslicer.errors import DegenerateProjectionError, DegenerateSlopeError
from hatchslicer.halftone import (
    HalftoneParams,
    ToneSample,
    luminance,
    luminance_array,
    max_offset,
    occlusion,
    offset_for_perpendicular,
    offset_for_viewing_angle,
    perceived_ratio,
    response_grid,
    sagged_ratio,
    sagging_profile,
    solve_perpendicular,
    solve_viewing_angle,
    write_response_csv,
)

import oracles

P = HalftoneParams()
DEG = math.pi / 180


def sc(n_deg):
    return math.sin(n_deg * DEG), math.cos(n_deg * DEG)


# ---------------------------------------------------------------------------
# parameters and luminance


def test_params_validation():
    with pytest.raises(ValueError):
        HalftoneParams(h=0.1, w_full=0.14)
    with pytest.raises(ValueError):
        HalftoneParams(h=0)
    with pytest.raises(ValueError):
        HalftoneParams(viewing_angle=math.pi / 2)
    assert HalftoneParams().perpendicular
    assert not HalftoneParams(viewing_angle=0.0).perpendicular


@given(st.floats(0.01, 1.0), st.floats(1.001, 5.0))
def test_cx_formula(h, ratio):
    w = math.sqrt(2) * h * ratio
    p = HalftoneParams(h=h, w_full=w)
    assert abs(p.cx - (1 - math.sqrt(2) * h / w)) <= 1e-12
    assert 0 < p.cx < 1


@pytest.mark.parametrize(
    "rgb, expected",
    [((1, 1, 1), 1.0), ((0, 0, 0), 0.0), ((0.5, 0.5, 0.5), 0.5 ** (1 / 2.2))],
)
def test_luminance_examples(rgb, expected):
    assert luminance(rgb, 2.2) == pytest.approx(expected, abs=1e-12)
    assert luminance_array(np.array([rgb], dtype=float))[0] == pytest.approx(expected, abs=1e-12)


def test_luminance_grey_value():
    assert luminance((0.5, 0.5, 0.5)) == pytest.approx(0.72974, abs=5e-6)


@given(
    st.tuples(*[st.floats(0, 1)] * 3),
    st.integers(0, 2),
    st.floats(0, 1),
)
def test_luminance_monotone_per_channel(rgb, channel, bump):
    higher = list(rgb)
    higher[channel] = max(higher[channel], bump)
    assert luminance(higher) >= luminance(rgb) - 1e-15


# ---------------------------------------------------------------------------
# flat stair model


def test_zero_offset_is_half():
    for n in (5, 30, 60, 85):
        for a in (0, 20, 45, 80):
            s = ToneSample.from_angle(0.5, n * DEG, 0.1)
            assert perceived_ratio(0.0, s, a * DEG, 0.1) == 0.5


def test_perpendicular_agrees_with_simplified_form():
    h = 0.1
    for n in np.linspace(2, 88, 30):
        s = ToneSample.from_angle(0.5, n * DEG, h)
        for delta in np.linspace(-s.d / 2, s.d / 2, 11):
            want = 0.5 + delta * math.sin(n * DEG) * math.cos(n * DEG) / h
            assert perceived_ratio(delta, s, n * DEG, h) == pytest.approx(want, abs=1e-12)


def test_hand_evaluated_ratio():
    s = ToneSample.from_angle(0.5, 45 * DEG, 0.1)
    assert s.d == pytest.approx(0.1)
    assert perceived_ratio(0.025, s, 45 * DEG, 0.1) == pytest.approx(0.625, abs=1e-12)


def test_degenerate_projection():
    s = ToneSample.from_angle(0.5, 80 * DEG, 0.1)
    with pytest.raises(DegenerateProjectionError):
        perceived_ratio(0.0, s, -60 * DEG, 0.1)


# ---------------------------------------------------------------------------
# sagging


def test_sagging_profile_examples():
    assert astuple(sagging_profile(0.0, P)) == (0.0, 0.0, 0.0)
    prof = sagging_profile(0.2, P)
    assert prof.delta_x == pytest.approx(0.058579, abs=1e-6)
    assert prof.delta_r == pytest.approx(0.05, abs=1e-12)
    assert prof.delta_y == prof.delta_r
    prof = sagging_profile(0.1, P)
    assert prof.delta_x == pytest.approx(0.029289, abs=1e-6)
    assert prof.delta_r == pytest.approx(0.0125, abs=1e-9)


def test_sagging_profile_clamps_to_line_width():
    assert sagging_profile(1.0, P) == sagging_profile(P.line_width, P)
    assert sagging_profile(-0.3, P) == sagging_profile(0.0, P)


def test_occlusion_examples():
    assert occlusion(P.w_full, 0.0, P) == pytest.approx(P.h, rel=1e-12)
    assert occlusion(0.0, 0.7, P) == 0.0
    assert occlusion(0.1, math.pi / 2, P) == pytest.approx(0.1 - 0.029289 + 0.0125, abs=2e-6)


def test_occlusion_cap_at_one_layer():
    d = 0.05
    cap = d * math.sin(0.3) + P.h * math.cos(0.3)
    assert occlusion(0.35, 0.3, P, stair_step=d) == pytest.approx(cap)
    assert occlusion(0.35, 0.3, P) > cap


@given(st.floats(0.0, 0.35), st.floats(0.0, 0.35), st.floats(0, math.pi / 2))
def test_occlusion_nonnegative_and_monotone(o1, o2, alpha):
    lo, hi = sorted((o1, o2))
    assert occlusion(lo, alpha, P) >= 0
    assert occlusion(hi, alpha, P) >= occlusion(lo, alpha, P) - 1e-15


def test_sagged_ratio_reduces_without_overhang():
    for n in (10, 40, 70):
        s = ToneSample.from_angle(0.5, n * DEG, P.h)
        for delta in np.linspace(-s.d / 2, s.d / 2, 9):
            for a in (0, 15, 60, 89):
                assert sagged_ratio(delta, s, a * DEG, P) == perceived_ratio(delta, s, a * DEG, P.h)


def test_sagged_ratio_hand_case_at_ten_degrees():
    n = 10 * DEG
    s = ToneSample.from_angle(0.5, n, P.h)
    delta = s.d + 0.025  # twice the offset exceeds two stair steps by 0.05
    want = oracles.white_ratio(delta, n, n)
    assert sagged_ratio(delta, s, n, P) == pytest.approx(want, abs=1e-12)
    assert 0.5 < want < 1


@given(st.floats(2, 85), st.floats(0, 89))
def test_sagged_ratio_continuous_at_onset(n_deg, a_deg):
    s = ToneSample.from_angle(0.5, n_deg * DEG, P.h)
    for sign in (1, -1):
        edge = sign * s.d / 2
        a = sagged_ratio(edge, s, a_deg * DEG, P)
        b = sagged_ratio(edge + sign * 1e-9, s, a_deg * DEG, P)
        assert abs(a - b) < 1e-6


def test_negative_viewing_angle_prediction_continuous():
    s = ToneSample.from_angle(0.5, 30 * DEG, P.h)
    for delta in (-0.2, -0.05, 0.0, 0.03, 0.15):
        above = sagged_ratio(delta, s, 0.0, P)
        below = sagged_ratio(delta, s, -1e-9, P)
        assert below == pytest.approx(above, abs=1e-6)


# ---------------------------------------------------------------------------
# perpendicular solver


def test_half_tone_needs_no_offset():
    for n in (0, 5, 45, 80):
        assert offset_for_perpendicular(0.5, *sc(n), P) == 0.0


def test_non_sagging_hand_case():
    delta = offset_for_perpendicular(0.3, *sc(45), P)
    assert delta == pytest.approx(0.04, abs=1e-12)
    assert 2 * delta <= 0.1


def test_sagging_case_matches_bisection():
    delta = offset_for_perpendicular(0.02, *sc(10), P)
    assert 2 * delta > oracles.stair_step(0.1, 10 * DEG)
    assert delta == pytest.approx(oracles.bisect_black_offset(0.02, 10 * DEG), abs=1e-6)


def test_vertical_black_reaches_half_full_occlusion():
    assert offset_for_perpendicular(0.0, 0.0, 1.0, P) == pytest.approx(P.w_full / 2, abs=1e-12)
    assert offset_for_perpendicular(1.0, 0.0, 1.0, P) == pytest.approx(-P.w_full / 2, abs=1e-12)


def test_horizontal_surface_rejected():
    with pytest.raises(DegenerateSlopeError):
        offset_for_perpendicular(0.3, 1.0, 0.0, P)


def test_tone_outside_range_rejected():
    with pytest.raises(ValueError):
        offset_for_perpendicular(1.2, *sc(30), P)


@given(st.integers(0, 2**20), st.floats(0, 85))
def test_symmetry(k, n):
    r = k / 2**20  # dyadic, so 1 - r is exact
    assert offset_for_perpendicular(1 - r, *sc(n), P) == -offset_for_perpendicular(r, *sc(n), P)


@given(st.floats(0.25, 0.75), st.floats(10, 80))
def test_round_trip_without_sagging(r, n):
    s = ToneSample.from_angle(r, n * DEG, P.h)
    delta = offset_for_perpendicular(r, s.sin_n, s.cos_n, P)
    assume(2 * abs(delta) <= s.d)
    assert perceived_ratio(-delta, s, n * DEG, P.h) == pytest.approx(r, abs=1e-9)


@given(st.floats(0.01, 0.99), st.floats(5, 60))
def test_round_trip_with_sagging(r, n):
    s = ToneSample.from_angle(r, n * DEG, P.h)
    sol = solve_perpendicular(r, s.sin_n, s.cos_n, P)
    if not sol.saturated:
        assert sagged_ratio(-sol.delta, s, n * DEG, P) == pytest.approx(r, abs=1e-6)


def test_offset_decreases_with_tone_and_joins_branches():
    for n in (5, 20, 45, 70, 85):
        rs = np.linspace(0, 1, 401)
        deltas = np.array([offset_for_perpendicular(r, *sc(n), P) for r in rs])
        assert np.all(np.diff(deltas[rs < 0.5]) < 0) and np.all(np.diff(deltas[rs > 0.5]) < 0)
        # continuity where the overhang starts
        sin_n, cos_n = sc(n)
        d = 0.1 * sin_n / cos_n
        r_edge = 0.5 - d / 2 * sin_n * cos_n / 0.1
        below = offset_for_perpendicular(r_edge + 1e-12, sin_n, cos_n, P)
        above = offset_for_perpendicular(r_edge - 1e-12, sin_n, cos_n, P)
        assert abs(above - below) < 1e-9


def test_black_offset_never_exceeds_bound():
    for n in np.linspace(0, 85, 35):
        sin_n, cos_n = sc(n)
        d = 0.1 * sin_n / cos_n
        for r in np.linspace(0, 1, 51):
            sol = solve_perpendicular(r, sin_n, cos_n, P)
            assert not sol.saturated
            assert abs(sol.delta) <= d / 2 + P.w_full / 2 + 1e-12


# ---------------------------------------------------------------------------
# fixed viewing angle


@pytest.mark.parametrize("n", [5, 20, 45, 70, 80])
@pytest.mark.parametrize("r", [0.0, 0.1, 0.3, 0.62, 0.9, 1.0])
def test_viewing_at_normal_reproduces_perpendicular(n, r):
    sin_n, cos_n = sc(n)
    a = offset_for_viewing_angle(r, sin_n, cos_n, n * DEG, P)
    b = offset_for_perpendicular(r, sin_n, cos_n, P)
    assert a == pytest.approx(b, abs=1e-6)


def test_viewing_half_tone():
    assert offset_for_viewing_angle(0.5, *sc(30), 0.4, P) == 0.0


@given(st.floats(0.01, 0.99), st.floats(5, 80), st.floats(0, 85))
def test_viewing_round_trip(r, n, a):
    sin_n, cos_n = sc(n)
    sol = solve_viewing_angle(r, sin_n, cos_n, a * DEG, P)
    s = ToneSample.make(r, sin_n, cos_n, P.h)
    got = sagged_ratio(-sol.delta, s, a * DEG, P)
    if sol.saturated:
        assert abs(sol.delta) == pytest.approx(max_offset(s.d, P))
        assert abs(got - r) > 0
    else:
        assert got == pytest.approx(r, abs=1e-6)


def test_full_white_at_grazing_view_of_steep_slope():
    # reachable under the occlusion model: the white overhang hides the black riser
    sin_n, cos_n = sc(80)
    sol = solve_viewing_angle(1.0, sin_n, cos_n, 10 * DEG, P)
    s = ToneSample.make(1.0, sin_n, cos_n, P.h)
    assert not sol.saturated
    assert sagged_ratio(-sol.delta, s, 10 * DEG, P) == 1.0
    assert abs(sol.delta) < max_offset(s.d, P)


def test_unreachable_tone_is_clamped_and_flagged():
    wide = HalftoneParams(w_full=0.5, line_width=0.35)
    sin_n, cos_n = sc(30)
    sol = solve_viewing_angle(1.0, sin_n, cos_n, 0.0, wide)
    d = 0.1 * sin_n / cos_n
    assert sol.saturated
    assert sol.delta == pytest.approx(-(d / 2 + 0.35 / 2))


def test_negative_viewing_angle_not_solved():
    with pytest.raises(ValueError):
        offset_for_viewing_angle(0.3, *sc(30), -0.1, P)


# ---------------------------------------------------------------------------
# response grid


@pytest.mark.parametrize("n", [0, 22.5, 45, 67.5])
def test_grid_centre_row_is_identity(n):
    rs = np.linspace(0, 1, 21)
    phis = np.radians([-30, 0, 30])
    grid = response_grid(n * DEG, phis, rs, P)
    np.testing.assert_allclose(grid[1], rs, atol=1e-6)


def test_grid_marks_invalid_angles():
    grid = response_grid(45 * DEG, np.radians([40, 50, 80]), [0.0, 0.5, 1.0], P)
    assert np.all(np.isfinite(grid[0]))
    assert np.all(np.isnan(grid[1:]))


def test_grid_contrast_on_vertical_wall():
    phis = np.radians(np.linspace(0, 80, 17))
    grid = response_grid(0.0, phis, [0.0, 1.0], P)
    contrast = grid[:, 1] - grid[:, 0]
    assert np.all(np.diff(contrast) >= -1e-12)


def test_csv_layout():
    phis = np.radians([-80.0, 0.0])
    rs = [0.0, 1.0]
    grid = np.array([[np.nan, 0.25], [0.0, 1.0]])
    buf = io.StringIO()
    write_response_csv(buf, phis, rs, grid)
    assert buf.getvalue().splitlines() == [
        "phi_deg,0.000000,1.000000",
        "-80.000000,,0.250000",
        "0.000000,0.000000,1.000000",
    ]
