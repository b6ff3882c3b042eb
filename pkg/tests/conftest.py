from functools import lru_cache

import numpy as np
import pytest

from vemmhd.forms import Coefficients
from vemmhd.mesh import FAMILIES, PolygonalMesh, Rectangle, build_mesh
from vemmhd.system import discretize


@lru_cache(maxsize=None)
def mesh_of(family, level=1):
    return build_mesh(family, level)


@lru_cache(maxsize=None)
def disc_of(family, level=1, k=1, coef=Coefficients()):
    return discretize(mesh_of(family, level), k, coef)


def single_cell(verts):
    verts = np.asarray(verts, dtype=float)
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    return PolygonalMesh(verts, [list(range(len(verts)))], Rectangle(lo[0], lo[1], hi[0], hi[1]), validate=False)


PENTAGON = np.array([[np.cos(2 * np.pi * i / 5 + 0.3), np.sin(2 * np.pi * i / 5 + 0.3)] for i in range(5)])
NONCONVEX = np.array([[0, 0], [2, 0], [2, 2], [1, 0.8], [0, 2]], dtype=float)
UNIT = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)


@pytest.fixture(params=FAMILIES)
def family(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
