import math

import numpy as np
import pytest

from amalgam_lab.incarnation import make_incarnating_set


def unit(angles):
    a = np.asarray(angles, dtype=float)
    return np.c_[np.cos(a), np.sin(a)]


@pytest.fixture
def hexagon():
    return make_incarnating_set(2, unit(np.arange(3) * math.pi / 3), 1.0)


@pytest.fixture
def square():
    return make_incarnating_set(2, [[1, 0], [0, 1]], 1.0)


def random_symmetric_polygon(rng, n_vertices):
    """Centrally symmetric convex polygon with ``n_vertices`` (even) vertices."""
    h = n_vertices // 2
    while True:
        ang = np.sort(rng.uniform(0, math.pi, h))
        if np.min(np.diff(np.r_[ang, ang[0] + math.pi])) > 1e-3:
            break
    gens = unit(ang) * rng.uniform(0.2, 3.0, h)[:, None]
    return gens
