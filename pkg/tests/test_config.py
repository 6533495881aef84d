import json
import math

import pytest

from hatchslicer.config import JobConfig, config_from_dict, default_config_json, load_config
from hatchslicer.errors import ConfigError


def test_defaults_round_trip(tmp_path):
    path = tmp_path / "job.json"
    path.write_text(default_config_json())
    cfg = load_config(path)
    assert cfg == JobConfig()
    assert cfg.base_dir == tmp_path


def test_default_values():
    data = json.loads(default_config_json())
    assert data["toolpath"]["line_width"] == 0.35
    assert data["toolpath"]["wall_count"] == 2
    assert data["toolpath"]["skin_line_distance"] == 0.7
    assert data["toolpath"]["hatch_sample_interval"] == 0.4
    assert data["toolpath"]["outer_wall_speed"] == 15.0
    assert data["offset"]["sample_interval"] == 0.1
    assert data["offset"]["static_offset"] == 0.1
    assert data["offset"]["bevel_ratio"] == 1.1
    assert data["halftone"]["viewing_mode"] == "perpendicular"


def test_paths_resolve_against_config_dir(tmp_path):
    cfg = config_from_dict({"mesh": "a/m.obj", "texture": "/abs/t.png"}, tmp_path)
    assert cfg.mesh_path == tmp_path / "a" / "m.obj"
    assert str(cfg.texture_path) == "/abs/t.png"


def test_halftone_params_from_config():
    cfg = config_from_dict({"halftone": {"viewing_mode": "fixed", "viewing_angle_deg": 30}})
    p = cfg.halftone_params()
    assert p.viewing_angle == pytest.approx(math.radians(30))
    assert p.line_width == 0.35
    assert config_from_dict({}).halftone_params().perpendicular


@pytest.mark.parametrize(
    "data, match",
    [
        ({"colour": 1}, "unknown key"),
        ({"toolpath": {"line_widht": 0.4}}, "unknown key"),
        ({"toolpath": {"line_width": 0}}, "line_width"),
        ({"toolpath": {"wall_count": 0}}, "wall_count"),
        ({"toolpath": {"top_layers": 1.5}}, "top_layers"),
        ({"toolpath": {"infill_density": 2}}, "infill_density"),
        ({"offset": {"bevel_ratio": 1.0}}, "bevel_ratio"),
        ({"offset": {"static_offset": -0.1}}, "static_offset"),
        ({"halftone": {"viewing_mode": "oblique"}}, "viewing_mode"),
        ({"halftone": {"viewing_mode": "fixed", "viewing_angle_deg": 95}}, "viewing_angle"),
        ({"halftone": {"w_full": 0.1}}, "full-occlusion"),
        ({"uv_mode": "wrap"}, "uv_mode"),
        ({"halftone": "fast"}, "JSON object"),
    ],
)
def test_invalid_configs(data, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(data)


def test_bad_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.json")
