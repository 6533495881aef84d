"""Exception types raised across the pipeline."""

from __future__ import annotations


class HatchSlicerError(ValueError):
    """Base class for all input and model errors."""


class ObjParseError(HatchSlicerError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingUVError(ObjParseError):
    pass


class NonManifoldError(HatchSlicerError):
    def __init__(self, edges: list[tuple[int, int, int]]):
        # (vertex a, vertex b, face count)
        self.edges = edges
        shown = ", ".join(f"({a},{b})x{n}" for a, b, n in edges[:10])
        more = "" if len(edges) <= 10 else f" (+{len(edges) - 10} more)"
        super().__init__(f"mesh is not watertight; edges with face count != 2: {shown}{more}")


class TextureFormatError(HatchSlicerError):
    pass


class CorruptImageError(HatchSlicerError):
    pass


class StitchError(HatchSlicerError):
    def __init__(self, message: str, layer: int | None = None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


class DegenerateProjectionError(HatchSlicerError):
    """The stair-step pattern projects to zero (or negative) extent."""


class DegenerateSlopeError(HatchSlicerError):
    """Closed-form offset is undefined for horizontal surfaces."""


class ParityError(HatchSlicerError):
    """A path's extruder does not match the layer parity."""


class ConfigError(HatchSlicerError):
    """Invalid or inconsistent job configuration."""
