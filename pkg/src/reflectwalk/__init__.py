"""Reflecting random walks on lattice approximations of bounded domains."""
from ._backend import BACKEND
from .domain import (
    BallDomain,
    CombParams,
    CutDomain,
    DomainSpec,
    ImplicitDomain,
    PolygonDomain,
    RectangleDomain,
    comb_domain,
    contains_point,
    cube_clearance,
    make_builtin_domain,
)
from .grid import (
    GridFunction,
    GridGraph,
    build_cube_complex,
    build_edge_graph,
    extend_to_domain,
    restrict_to_grid,
    total_measure,
)

__version__ = "0.1.0"
