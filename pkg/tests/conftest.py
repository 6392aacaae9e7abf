import numpy as np
import pytest

from reflectwalk import domain as dm
from reflectwalk.grid import build_cube_complex, build_edge_graph


@pytest.fixture(scope="session")
def unit_square():
    return dm.RectangleDomain.create((0.0, 0.0), (1.0, 1.0))


@pytest.fixture(scope="session")
def square_k2(unit_square):
    return build_cube_complex(unit_square, 2, 0.5)


@pytest.fixture(scope="session")
def interval():
    return dm.RectangleDomain.create((0.0,), (1.0,))


@pytest.fixture(scope="session")
def disk():
    return dm.BallDomain.create(1.0)


@pytest.fixture(scope="session")
def comb_geometric():
    return dm.comb_domain(dm.CombParams.geometric(4.0, 3))


def small_grids():
    """A few varied nonempty cube complexes used across modules."""
    sq = dm.RectangleDomain.create((0.0, 0.0), (1.0, 1.0))
    return [
        build_cube_complex(sq, 3),
        build_cube_complex(dm.BallDomain.create(1.0), 3),
        build_cube_complex(dm.comb_domain(dm.CombParams.constant(1 / 8, 2)), 4),
        build_edge_graph(dm.slit_disk(), 3),
        build_cube_complex(dm.RectangleDomain.create((0.0,), (1.0,)), 4),
        build_cube_complex(dm.RectangleDomain.create((0, 0, 0), (1, 1, 1)), 2),
    ]


@pytest.fixture(scope="session")
def grids():
    return small_grids()


def dense_transition(g):
    """Independent dense transition matrix built straight from the edge list."""
    n = g.n_vertices
    A = np.zeros((n, n))
    for i, j in g.edges():
        A[i, j] = A[j, i] = 1.0
    return A / A.sum(axis=1, keepdims=True), A
