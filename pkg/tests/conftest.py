import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_projective_points(rng, n, include_infinite=0):
    """Random homogeneous points with magnitudes spread over several decades."""
    pts = rng.normal(size=(n, 3)) * np.exp(rng.uniform(-3, 3, size=(n, 1)))
    if include_infinite:
        pts[:include_infinite, 2] = 0.0
    # regenerate the (measure-zero) all-zero rows, if any
    bad = np.all(pts == 0.0, axis=1)
    pts[bad] = rng.normal(size=(int(bad.sum()), 3)) + 1.0
    return pts
