import numpy as np
import pytest

from periodicflat import synth
from periodicflat.cut import CutPath
from periodicflat.mesh import SurfaceMesh


@pytest.fixture(scope="session")
def tetrahedron():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
    faces = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])
    return SurfaceMesh(verts, faces)


@pytest.fixture(scope="session")
def grid_torus8():
    return synth.flat_torus(8, 8)


@pytest.fixture(scope="session")
def square_torus32():
    return synth.flat_torus(32, 32)


@pytest.fixture(scope="session")
def skew_torus():
    return synth.flat_torus(16, 16, t_vec=(1.0, 0.0), h_vec=(0.3, 0.8))


@pytest.fixture(scope="session")
def revolution_torus():
    return synth.torus_of_revolution(2.0, 1.0, 64, 32)


@pytest.fixture(scope="session")
def cylinder_mesh():
    return synth.cylinder(1.0, 1.0, 64, 32, metric="arc")


@pytest.fixture(scope="session")
def cylinder_chord():
    return synth.cylinder(1.0, 1.0, 16, 8)


@pytest.fixture(scope="session")
def holed_disk2():
    return synth.holed_disk(16, holes=[(3, 6, 3, 6), (10, 13, 9, 12)])


@pytest.fixture(scope="session")
def annulus_grid():
    return synth.holed_disk(12, holes=[(4, 8, 4, 8)])


def lattice_paths(nu, nv):
    """Grid-aligned handle/tunnel loops of an nu x nv grid torus."""
    loop_i, loop_j = synth.grid_loops(nu, nv)
    return CutPath(loop_j, "handle"), CutPath(loop_i, "tunnel")


@pytest.fixture(scope="session")
def thin_quad():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0.5, 0.2, 0], [0.5, -0.2, 0.0]])
    faces = np.array([[0, 1, 2], [1, 0, 3]])
    return SurfaceMesh(verts, faces)
