# conftest.py
import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from app.core.grid import GridFunction3D
from app.core.rearrangement import gauge
from app.main import app
from app.schemas.common import AlphaParam, QuadratureConfig


@pytest.fixture
def alpha_one() -> AlphaParam:
    return AlphaParam(alpha=1.0)


@pytest.fixture
def quadrature() -> QuadratureConfig:
    return QuadratureConfig(volume_resolution=64, surface_resolution=256, refine_depth=2)


@pytest.fixture
def coarse_quadrature() -> QuadratureConfig:
    return QuadratureConfig(volume_resolution=32, surface_resolution=128, refine_depth=1)


def gauge_bump(alpha: AlphaParam, dims: int = 48, pad: float = 1.1) -> GridFunction3D:
    """(1 - r^2)_+^2 in the gauge r, on a full-space box around the unit gauge ball."""
    a1 = alpha.alpha + 1.0
    X = pad * a1 ** (1.0 / a1)
    Y = pad / a1

    def fn(x1, x2, y):
        r = gauge(x1, x2, y, alpha)
        return np.where(r < 1.0, (1.0 - r * r) ** 2, 0.0)

    return GridFunction3D.from_function(fn, (-X, -X, -Y), (X, X, Y), (dims, dims, dims))


@pytest.fixture
def radial_bump(alpha_one) -> GridFunction3D:
    return gauge_bump(alpha_one)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner(mix_stderr=False)


@pytest.fixture
def client() -> TestClient:
    return TestClient(app)
