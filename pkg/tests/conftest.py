import numpy as np
import pytest

from epe.core import build_config
from epe.fem.dofs import make_layouts
from epe.mesh import build_unit_cube_mesh
from epe.schemes import Discretization


@pytest.fixture(scope="session")
def config():
    """Headline study configuration (tau = 0.0025, T = 0.1, splitting)."""
    return build_config()


@pytest.fixture(scope="session")
def params(config):
    return config.params


@pytest.fixture(scope="session")
def mesh1():
    return build_unit_cube_mesh(1)


@pytest.fixture(scope="session")
def mesh2():
    return build_unit_cube_mesh(2)


@pytest.fixture(scope="session")
def mesh3():
    return build_unit_cube_mesh(3)


@pytest.fixture(scope="session")
def mesh4():
    return build_unit_cube_mesh(4)


@pytest.fixture(scope="session")
def disc2(mesh2, params):
    return Discretization(mesh2, make_layouts(mesh2), params)


@pytest.fixture(scope="session")
def disc3(mesh3, params):
    return Discretization(mesh3, make_layouts(mesh3), params)


def random_tet(rng, min_det=1e-2):
    """Random nondegenerate, positively oriented tetrahedron vertices."""
    while True:
        verts = rng.random((4, 3))
        mat = np.ones((4, 4))
        mat[:, 1:] = verts
        det = np.linalg.det(mat)
        if abs(det) < min_det:
            continue
        if det < 0:
            verts[[2, 3]] = verts[[3, 2]]
        return verts
