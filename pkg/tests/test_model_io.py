import io
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from hatchslicer.errors import (
    CorruptImageError,
    MissingUVError,
    NonManifoldError,
    ObjParseError,
    TextureFormatError,
)
from hatchslicer.model_io import (
    GrayTexture,
    decode_image,
    encode_netpbm,
    format_obj,
    load_mesh,
    load_texture,
    parse_obj,
    sample_texture,
)
from hatchslicer.samples import box_mesh, sphere_mesh

TRIANGLE = """\
v 0 0 0
v 1 0 0
v 0 1 0
vt 0 0
vt 1 0
vt 0 1
f 1/1 2/2 3/3
"""


def test_single_triangle_is_not_watertight():
    with pytest.raises(NonManifoldError) as err:
        parse_obj(TRIANGLE)
    assert len(err.value.edges) == 3
    assert all(count == 1 for _, _, count in err.value.edges)


def test_single_triangle_without_watertight_check():
    mesh = parse_obj(TRIANGLE, check_watertight=False)
    assert mesh.faces.shape == (1, 3)


def test_cube_round_trips_through_obj(tmp_path):
    cube = box_mesh((1, 1, 1))
    path = tmp_path / "cube.obj"
    path.write_text(format_obj(cube))
    loaded = load_mesh(path)
    assert loaded.faces.shape == (12, 3)
    np.testing.assert_array_equal(loaded.vertices, cube.vertices)
    np.testing.assert_array_equal(loaded.faces, cube.faces)
    np.testing.assert_array_equal(loaded.texcoords, cube.texcoords)
    np.testing.assert_array_equal(loaded.face_uvs, cube.face_uvs)


def test_round_trip_is_exact_at_chosen_precision():
    mesh = sphere_mesh(3.7, 2, center=(0.1, -2.3, 4.0))
    text = format_obj(mesh, precision=9)
    again = parse_obj(text)
    assert format_obj(again, precision=9) == text


def test_face_missing_texture_index():
    text = TRIANGLE.replace("f 1/1 2/2 3/3", "f 1/1 2/2 3")
    with pytest.raises(MissingUVError) as err:
        parse_obj(text, check_watertight=False)
    assert err.value.line == 7


def test_bad_vertex_reports_line():
    text = "v 0 0 0\nv 1 x 0\n"
    with pytest.raises(ObjParseError) as err:
        parse_obj(text)
    assert err.value.line == 2
    assert "line 2" in str(err.value)


def test_index_out_of_range():
    with pytest.raises(ObjParseError, match="out of range"):
        parse_obj(TRIANGLE.replace("3/3", "4/3"), check_watertight=False)


def test_negative_indices_and_quads_fan_out():
    text = "\n".join(
        ["v 0 0 0", "v 1 0 0", "v 1 1 0", "v 0 1 0", "vt 0 0", "vt 1 0", "vt 1 1", "vt 0 1", "f -4/-4 -3/-3 -2/-2 -1/-1"]
    )
    mesh = parse_obj(text, check_watertight=False)
    np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])
    np.testing.assert_array_equal(mesh.face_uvs, [[0, 1, 2], [0, 2, 3]])


def test_unknown_records_are_ignored_with_warning(caplog):
    text = "mystery 1 2\n" + TRIANGLE + "vn 0 0 1\n"
    with caplog.at_level(logging.WARNING, logger="hatchslicer.model_io"):
        parse_obj(text, check_watertight=False)
    assert any("mystery" in r.message for r in caplog.records)
    assert not any("'vn'" in r.message for r in caplog.records)


def test_comments_are_skipped():
    mesh = parse_obj("# header\n" + TRIANGLE.replace("v 1 0 0", "v 1 0 0 # corner"), check_watertight=False)
    assert mesh.vertices[1].tolist() == [1, 0, 0]


@pytest.mark.parametrize(
    "mode, expected",
    [("clamp", [1.0, 0.0]), ("repeat", [0.25, 0.5])],
)
def test_uv_modes(mode, expected):
    text = TRIANGLE.replace("vt 1 0", "vt 1.25 -0.5")
    mesh = parse_obj(text, uv_mode=mode, check_watertight=False)
    np.testing.assert_allclose(mesh.texcoords[1], expected)


def test_uv_strict_rejects_out_of_range():
    with pytest.raises(ObjParseError, match="outside"):
        parse_obj(TRIANGLE.replace("vt 1 0", "vt 1.25 0"), check_watertight=False)


def test_mesh_arrays_are_read_only():
    mesh = box_mesh()
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 5.0


def test_face_normals_point_outwards():
    mesh = box_mesh((2, 3, 4))
    centers = mesh.triangles.mean(axis=1)
    outward = centers - np.array([1.0, 1.5, 2.0])
    assert np.all(np.einsum("ij,ij->i", mesh.face_normals(), outward) > 0)


# ---------------------------------------------------------------------------
# textures


def test_pgm_single_white_pixel(tmp_path):
    path = tmp_path / "w.pgm"
    path.write_bytes(b"P5\n1 1\n255\n\xff")
    tex = load_texture(path)
    np.testing.assert_array_equal(tex.pixels, [[[1.0, 1.0, 1.0]]])


def test_ppm_corners_kept_in_row_major_order(tmp_path):
    corners = [[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 0]]
    data = b"P6\n# comment line\n2 2\n255\n" + bytes(sum(corners, []))
    path = tmp_path / "c.ppm"
    path.write_bytes(data)
    tex = load_texture(path)
    np.testing.assert_array_equal(tex.pixels.reshape(4, 3) * 255, corners)


def _png_bytes(arr, mode):
    buf = io.BytesIO()
    Image.fromarray(arr, mode).save(buf, format="PNG")
    return buf.getvalue()


def test_png_grayscale_is_expanded_to_rgb():
    arr = np.array([[0, 128], [255, 64]], dtype=np.uint8)
    pixels = decode_image(_png_bytes(arr, "L"))
    assert pixels.shape == (2, 2, 3)
    np.testing.assert_allclose(pixels[..., 1], arr / 255.0)


def test_truncated_png_is_corrupt():
    rng = np.random.default_rng(1)
    data = _png_bytes(rng.integers(0, 255, (32, 32, 3), dtype=np.uint8), "RGB")
    with pytest.raises(CorruptImageError):
        decode_image(data[: len(data) // 2])


def test_truncated_ppm_is_corrupt():
    with pytest.raises(CorruptImageError, match="truncated"):
        decode_image(b"P6\n2 2\n255\n" + bytes(5))


def test_unsupported_formats():
    with pytest.raises(TextureFormatError):
        decode_image(b"GIF89a....")
    with pytest.raises(TextureFormatError, match="maxval"):
        decode_image(b"P5\n1 1\n65535\n\x00\x00")


def test_netpbm_encoder_round_trip():
    rng = np.random.default_rng(3)
    arr = rng.integers(0, 256, (5, 7, 3)) / 255.0
    np.testing.assert_array_equal(decode_image(encode_netpbm(arr)), arr)


def test_texture_validation():
    with pytest.raises(ValueError):
        GrayTexture(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        GrayTexture(np.zeros((0, 2, 3)))
    with pytest.raises(ValueError):
        GrayTexture(np.zeros((2, 2, 3)), wrap="mirror")


def _two_pixel():
    return GrayTexture(np.array([[[0.2, 0.4, 0.6], [0.8, 0.6, 0.0]]]))


def test_sample_at_pixel_centre():
    tex = _two_pixel()
    np.testing.assert_allclose(sample_texture(tex, (0.25, 0.5)), [0.2, 0.4, 0.6])
    np.testing.assert_allclose(sample_texture(tex, (0.75, 0.5)), [0.8, 0.6, 0.0])


def test_sample_between_pixel_centres_is_mean():
    tex = _two_pixel()
    np.testing.assert_allclose(sample_texture(tex, (0.5, 0.5)), [0.5, 0.5, 0.3])


def test_top_row_is_v_one():
    tex = GrayTexture(np.array([[[1.0] * 3], [[0.0] * 3]]))
    np.testing.assert_allclose(sample_texture(tex, (0.5, 0.75)), [1.0] * 3)
    np.testing.assert_allclose(sample_texture(tex, (0.5, 0.25)), [0.0] * 3)


def test_repeat_wrap_equivalence():
    rng = np.random.default_rng(5)
    tex = GrayTexture(rng.random((8, 8, 3)), wrap="repeat")
    np.testing.assert_allclose(sample_texture(tex, (1.3, -0.2)), sample_texture(tex, (0.3, 0.8)), atol=1e-12)


def test_clamp_wrap_holds_edge_value():
    tex = _two_pixel()
    np.testing.assert_allclose(sample_texture(tex, (-3.0, 7.0)), [0.2, 0.4, 0.6])


@given(
    st.floats(-3, 3, allow_nan=False),
    st.floats(-3, 3, allow_nan=False),
)
def test_repeat_sampling_is_continuous(u, v):
    rng = np.random.default_rng(11)
    tex = GrayTexture(rng.random((6, 5, 3)), wrap="repeat")
    eps = 1e-7
    a = sample_texture(tex, (u, v))
    b = sample_texture(tex, (u + eps, v - eps))
    # bilinear patches have slope below 2 * width per unit uv
    assert np.max(np.abs(a - b)) < 2 * 6 * eps * 2
