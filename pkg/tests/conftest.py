import numpy as np
import pytest

from microshear.phantom import EllipseSpec, PhantomSpec, pixel_grid, rasterize
from microshear.shearlet import build_system


@pytest.fixture(scope="session")
def system64():
    return build_system(64, 2)


@pytest.fixture(scope="session")
def system128():
    return build_system(128, 4)


@pytest.fixture(scope="session")
def disk128():
    """Centered disk of radius 0.5, intensity 1, plus its ingredients."""
    spec = PhantomSpec((EllipseSpec((0.0, 0.0), (0.5, 0.5), 0.0, 1.0),), 128, 180)
    img = rasterize(spec)
    x, y = pixel_grid(128)
    return spec, img, x, y


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
