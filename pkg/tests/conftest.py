import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from hatchslicer.model_io import GrayTexture  # noqa: E402
from hatchslicer.samples import box_mesh, gradient_texture  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture
def unit_cube():
    return box_mesh((1.0, 1.0, 1.0))


@pytest.fixture
def gray50():
    # pixel value whose gamma-expanded luminance is exactly 0.5
    return GrayTexture.uniform(0.5**2.2)


@pytest.fixture
def ramp():
    return gradient_texture(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
