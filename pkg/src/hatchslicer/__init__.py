"""Dual-extrusion FDM slicing with grayscale line hatching."""

__version__ = "0.1.0"

from .halftone import HalftoneParams, offset_for_perpendicular, response_grid, sagged_ratio  # noqa: E402
from .model_io import GrayTexture, TexturedMesh, load_mesh, load_texture, parse_obj  # noqa: E402
from .slicing import LayerOutline, Loop, slice_mesh  # noqa: E402

__all__ = [
    "GrayTexture",
    "HalftoneParams",
    "LayerOutline",
    "Loop",
    "TexturedMesh",
    "load_mesh",
    "load_texture",
    "offset_for_perpendicular",
    "parse_obj",
    "response_grid",
    "sagged_ratio",
    "slice_mesh",
]
