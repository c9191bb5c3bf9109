import numpy as np
import pytest

from windfield.geometry import ChartedSpace, VectorFieldDef, conformally_flat, euclidean
from windfield.wrs import WindData


def half_plane() -> ChartedSpace:
    """Poincare half-plane, curvature -1."""
    return conformally_flat(
        2,
        lambda p: 1.0 / p[1] ** 2,
        lambda p: np.array([0.0, -2.0 / p[1] ** 3]),
        lambda p: np.array([[0.0, 0.0], [0.0, 6.0 / p[1] ** 4]]),
        domain=lambda p: p[1] > 0,
        label="half-plane",
    )


def field(fn, label="") -> VectorFieldDef:
    return VectorFieldDef(lambda p: np.asarray(fn(p), dtype=float), None, label)


def flat_wind(fn, n=2) -> WindData:
    return WindData(euclidean(n), field(fn))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
