"""Transition operator, generator and Dirichlet energies on lattice graphs.

Pair sums run over UNORDERED adjacent pairs.  With that convention the
Dirichlet form of the walk satisfies the exact identity

    E^k(f, f) = 2^{2k} (f - Q_k f, f)_{m_k},

and the energy sum ``2^{k(2-d)} sum (f(x) - f(y))^2`` of a C^1 function
converges to ``int |grad f|^2``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import DomainSpec
from .grid import GridFunction, GridGraph, as_values, gauss_cell_rule, restrict_to_grid
from .walk import PathSample

__all__ = [
    "apply_q",
    "apply_generator",
    "inner_m",
    "compensator",
    "energy_sum",
    "dirichlet_form",
    "dirichlet_bilinear",
    "power_contraction_check",
    "continuum_energy",
    "TestFunction",
    "TEST_FUNCTIONS",
    "EnergyReport",
    "energy_report",
    "energy_reports_csv",
    "ContractionViolation",
]


def apply_q(g: GridGraph, f) -> GridFunction:
    """Neighbour average ``(Q_k f)(x) = mean of f over neighbours of x``."""
    vals = as_values(g, f)
    deg = g.degrees
    if np.any(deg == 0):
        raise ValueError("Q_k is undefined at isolated vertices")
    if deg.size == 0:
        return GridFunction(g, vals)
    sums = np.add.reduceat(vals[g.indices], g.indptr[:-1])
    return GridFunction(g, sums / deg)


def apply_generator(g: GridGraph, f) -> GridFunction:
    vals = as_values(g, f)
    return GridFunction(g, apply_q(g, vals).values - vals)


def inner_m(g: GridGraph, f, h) -> float:
    """Inner product in ``L^2(m_k)``."""
    return float(np.dot(as_values(g, f) * g.measure, as_values(g, h)))


def compensator(g: GridGraph, p: PathSample, f) -> np.ndarray:
    """``M_j = f(Y_j) - f(Y_0) - sum_{i<j} L_k f(Y_i)`` along a lattice path."""
    if p.interpolation not in ("linear", "step"):
        raise ValueError("compensator needs a discrete-time path")
    if p.level != g.level or (p.vertex_ids.size and p.vertex_ids.max() >= g.n_vertices):
        raise ValueError("path does not belong to this grid")
    vals = as_values(g, f)
    lf = apply_generator(g, vals).values
    fy = vals[p.vertex_ids]
    drift = np.concatenate([[0.0], np.cumsum(lf[p.vertex_ids[:-1]])])
    return fy - fy[0] - drift


def _edge_diffs(g, vals):
    e = g.edges()
    return vals[e[:, 0]] - vals[e[:, 1]]


def energy_sum(g: GridGraph, f) -> float:
    """``2^{k(2-d)} sum_{x~y} (f(x) - f(y))^2`` over unordered adjacent pairs."""
    diff = _edge_diffs(g, as_values(g, f))
    return float(2.0 ** (g.level * (2 - g.dimension)) * np.dot(diff, diff))


def dirichlet_form(g: GridGraph, f) -> float:
    """``E^k(f, f) = (1/2d) sum_{x~y} 2^{-(d-2)k} (f(x) - f(y))^2``."""
    return energy_sum(g, f) / (2 * g.dimension)


def dirichlet_bilinear(g: GridGraph, f, h) -> float:
    fv = _edge_diffs(g, as_values(g, f))
    hv = _edge_diffs(g, as_values(g, h))
    return float(2.0 ** (g.level * (2 - g.dimension)) * np.dot(fv, hv) / (2 * g.dimension))


class ContractionViolation(AssertionError):
    """A power-contraction inequality failed beyond tolerance."""


def power_contraction_check(g: GridGraph, f, j_max: int, slack: float = 1e-9,
                            max_vertices: int = 2000) -> dict:
    """Check ``(f - Q^{2j} f, f) <= j (f - Q^2 f, f) <= 2j (f - Q f, f)``.

    Inner products are in ``L^2(m_k)``; powers come from repeated
    :func:`apply_q`.  Raises :class:`ContractionViolation` if either
    inequality fails by more than ``slack``.
    """
    if g.n_vertices > max_vertices:
        raise ValueError(f"grid has {g.n_vertices} vertices; limit is {max_vertices}")
    vals = as_values(g, f)
    ff = inner_m(g, vals, vals)
    q1 = apply_q(g, vals).values
    q2 = apply_q(g, q1).values
    one = ff - inner_m(g, q1, vals)
    two = ff - inner_m(g, q2, vals)
    lhs, mid, rhs = [], [], []
    cur = vals
    for j in range(1, j_max + 1):
        cur = apply_q(g, apply_q(g, cur).values).values
        lhs.append(ff - inner_m(g, cur, vals))
        mid.append(j * two)
        rhs.append(2 * j * one)
    lhs, mid, rhs = map(np.asarray, (lhs, mid, rhs))
    gap_left = mid - lhs
    gap_right = rhs - mid
    report = {"j": np.arange(1, j_max + 1), "lhs": lhs, "mid": mid, "rhs": rhs,
              "min_slack": float(min(gap_left.min(initial=np.inf), gap_right.min(initial=np.inf)))}
    if report["min_slack"] < -slack:
        raise ContractionViolation(f"power contraction fails with slack {report['min_slack']:.3e}")
    return report


# --- smooth test functions ----------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Smooth function with analytic gradient; both act on ``(M, d)`` arrays."""

    name: str
    value: Callable
    grad: Callable
    description: str = ""

    __test__ = False  # not a pytest class


def _x1(x):
    return x[:, 0]


def _x1_grad(x):
    g = np.zeros_like(x)
    g[:, 0] = 1.0
    return g


def _sincos(x):
    return np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])


def _sincos_grad(x):
    g = np.zeros_like(x)
    g[:, 0] = np.pi * np.cos(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])
    g[:, 1] = -np.pi * np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])
    return g


def _sqnorm(x):
    return (x * x).sum(axis=1)


def _bump(x):
    return np.exp(-4.0 * (x * x).sum(axis=1))


TEST_FUNCTIONS = {
    "x1": TestFunction("x1", _x1, _x1_grad, "first coordinate"),
    "sinCos": TestFunction("sinCos", _sincos, _sincos_grad, "sin(pi x1) cos(pi x2), planar"),
    "sqNorm": TestFunction("sqNorm", _sqnorm, lambda x: 2 * x, "|x|^2"),
    "gaussBump": TestFunction("gaussBump", _bump, lambda x: -8.0 * x * _bump(x)[:, None],
                              "exp(-4|x|^2)"),
}


def continuum_energy(g: GridGraph, phi: TestFunction, order: int = 3) -> float:
    """``int |grad phi|^2`` over the cube union, by tensor Gauss per cube."""
    if g.cubes is None:
        raise ValueError("continuum energy needs a cube-based grid")
    if g.cubes.shape[0] == 0:
        return 0.0
    nodes, weights = gauss_cell_rule(g.dimension, order)
    h = g.h
    centers = (g.cubes + 0.5) * h
    pts = (centers[:, None, :] + h * nodes[None, :, :]).reshape(-1, g.dimension)
    grad = np.asarray(phi.grad(pts), dtype=float)
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient is not finite at a quadrature node")
    sq = (grad * grad).sum(axis=1).reshape(centers.shape[0], -1)
    return float((sq @ weights).sum() * h ** g.dimension)


@dataclass
class EnergyReport:
    domain: str
    level: int
    c1: float
    function_id: str
    energy_sum: float
    dirichlet_form: float
    continuum_integral: float

    @property
    def rel_error(self) -> float:
        if self.continuum_integral == 0:
            return 0.0 if self.energy_sum == 0 else math.inf
        return self.energy_sum / self.continuum_integral - 1.0


def energy_report(spec: DomainSpec, g: GridGraph, phi: TestFunction) -> EnergyReport:
    """Energies of the cell-average restriction of ``phi`` against its continuum value."""
    f = restrict_to_grid(g, phi.value)
    return EnergyReport(spec.name, g.level, g.c1, phi.name, energy_sum(g, f),
                        dirichlet_form(g, f), continuum_energy(g, phi))


ENERGY_CSV_FIELDS = ("domain", "k", "c1", "functionId", "energySum", "dirichletForm",
                     "continuumIntegral", "relError")


def energy_reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ENERGY_CSV_FIELDS)
    for r in reports:
        w.writerow([r.domain, r.level, r.c1, r.function_id, repr(r.energy_sum),
                    repr(r.dirichlet_form), repr(r.continuum_integral), repr(r.rel_error)])
    return buf.getvalue()
