"""Lattice graphs approximating a domain at level ``k`` (mesh ``2^-k``).

Two constructions are provided:

* :func:`build_cube_complex` -- vertices are corners of closed lattice cubes
  with clearance greater than ``c1 * 2^-k``, face-connected to a cube that
  contains the base point.  Two vertices are adjacent when their segment is
  an edge of an accepted cube.
* :func:`build_edge_graph` -- the older construction: lattice segments lying
  in the domain, restricted to the component nearest the base point.  It
  reaches into crevices the cube complex stays out of.

Vertices are stored as integer lattice indices in lexicographic order, so
``position = index * 2^-k``.  Adjacency is CSR with neighbour lists sorted by
vertex id.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._backend import kernels
from .domain import DomainSpec

__all__ = [
    "GridGraph",
    "GridFunction",
    "build_cube_complex",
    "build_edge_graph",
    "extend_to_domain",
    "restrict_to_grid",
    "total_measure",
    "gauss_cell_rule",
]

_CLEARANCE_CHUNK = 1 << 16


@dataclass(eq=False)
class GridGraph:
    level: int
    dimension: int
    vertices: np.ndarray            # (n, d) int64 lattice indices, lexicographic
    indptr: np.ndarray              # (n + 1,) int64
    indices: np.ndarray             # int32 neighbour ids
    tag: str = "cubeBased"
    c1: float | None = None
    cubes: np.ndarray | None = None  # (m, d) int64 lower-corner indices
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.int64).reshape(-1, self.dimension)
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int32)

    # -- basic shape --
    @property
    def h(self) -> float:
        return 2.0 ** -self.level

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.indices.size // 2

    @property
    def is_empty(self) -> bool:
        return self.n_vertices == 0

    def __len__(self):
        return self.n_vertices

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def measure(self) -> np.ndarray:
        """m_k(x) = v_k(x) 2^{-kd} / (2d)."""
        return self.degrees * self.h ** self.dimension / (2 * self.dimension)

    @cached_property
    def positions(self) -> np.ndarray:
        return self.vertices * self.h

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Unordered edges as ``(E, 2)`` id pairs with ``i < j``, sorted."""
        src = np.repeat(np.arange(self.n_vertices, dtype=np.int64), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep].astype(np.int64)])

    @cached_property
    def _lookup(self) -> dict:
        return {tuple(v): i for i, v in enumerate(self.vertices.tolist())}

    def index_of(self, lattice_point) -> int:
        """Vertex id of an integer lattice point, or -1."""
        return self._lookup.get(tuple(int(v) for v in lattice_point), -1)

    def nearest_vertex(self, point) -> int:
        """Closest vertex to ``point``; ties go to the lexicographically smallest."""
        if self.is_empty:
            raise ValueError("empty grid has no vertices")
        d2 = ((self.positions - np.asarray(point, float)) ** 2).sum(axis=1)
        return int(np.flatnonzero(d2 == d2.min())[0])

    def adjacency_matrix(self) -> csr_matrix:
        data = np.ones(self.indices.size)
        n = self.n_vertices
        return csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    # -- serialisation --
    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "c1": self.c1,
            "tag": self.tag,
            "vertices": self.vertices.tolist(),
            "edges": self.edges().tolist(),
            "degrees": self.degrees.tolist(),
            "measure": self.measure.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"))

    @cached_property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_json(cls, text: str) -> "GridGraph":
        obj = json.loads(text)
        verts = np.asarray(obj["vertices"], dtype=np.int64)
        dim = verts.shape[1] if verts.size else 1
        return cls.from_edges(verts, obj["edges"], obj["level"], tag=obj["tag"],
                              c1=obj["c1"], dimension=dim)

    @classmethod
    def from_edges(cls, vertices, edges, level, tag="cubeBased", c1=None, dimension=None,
                   cubes=None):
        """Assemble a graph from lattice vertices and an unordered edge list."""
        vertices = np.asarray(vertices, dtype=np.int64)
        if dimension is None:
            dimension = vertices.shape[1]
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        indptr, indices = _csr_from_pairs(len(vertices), edges[:, 0], edges[:, 1])
        return cls(level, dimension, vertices, indptr, indices, tag, c1, cubes)


@dataclass
class GridFunction:
    """Real values indexed by the vertices of one grid."""

    grid: GridGraph
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_vertices,):
            raise ValueError(f"grid function has {self.values.shape} values, "
                             f"grid has {self.grid.n_vertices} vertices")


def as_values(g: GridGraph, f) -> np.ndarray:
    """Values of ``f`` on ``g``; rejects functions that live on another grid."""
    if isinstance(f, GridFunction):
        if f.grid is not g and f.grid.fingerprint != g.fingerprint:
            raise ValueError("grid function belongs to a different grid")
        return f.values
    vals = np.asarray(f, dtype=float)
    if vals.shape != (g.n_vertices,):
        raise ValueError(f"expected {g.n_vertices} values, got shape {vals.shape}")
    return vals


def _csr_from_pairs(n, a, b):
    src = np.concatenate([a, b])
    dst = np.concatenate([b, a])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst.astype(np.int32)


def _empty_grid(k, dim, tag, c1, reason):
    g = GridGraph(k, dim, np.zeros((0, dim), np.int64), np.zeros(1, np.int64),
                  np.zeros(0, np.int32), tag, c1,
                  np.zeros((0, dim), np.int64) if tag == "cubeBased" else None)
    g.meta["empty_reason"] = reason
    return g


def _lattice_range(spec: DomainSpec, h: float):
    lo, hi = spec.bounding_box
    i_lo = np.floor(lo / h).astype(np.int64)
    i_hi = np.ceil(hi / h).astype(np.int64)
    return i_lo, np.maximum(i_hi - i_lo, 1)


def _index_grid(shape):
    return np.indices(shape).reshape(len(shape), -1).T


def build_cube_complex(spec: DomainSpec, k: int, c1: float = 0.5) -> GridGraph:
    """Cube-complex lattice graph at level ``k``.

    A lattice cube is accepted when its clearance exceeds ``c1 * 2^-k`` and it
    is face-connected, through such cubes, to a closed cube containing the
    base point.  Returns an empty grid (with ``meta['empty_reason']``) if no
    qualifying cube contains the base point.
    """
    if not 0 < c1 < 1:
        raise ValueError("c1 must lie in (0,1)")
    if k < 0:
        raise ValueError("level must be nonnegative")
    d = spec.dimension
    h = 2.0 ** -k
    i_lo, shape = _lattice_range(spec, h)
    shape = tuple(int(s) for s in shape)

    cells = _index_grid(shape)
    qualify = np.zeros(cells.shape[0], dtype=bool)
    thresh = c1 * h
    for s in range(0, cells.shape[0], _CLEARANCE_CHUNK):
        lo = (cells[s:s + _CLEARANCE_CHUNK] + i_lo) * h
        qualify[s:s + _CLEARANCE_CHUNK] = spec.cube_clearances(lo, h) > thresh
    qualify = qualify.reshape(shape)

    # every closed lattice cube containing the base point seeds the search
    x0 = np.asarray(spec.base_point, float) / h
    per_axis = []
    for j in range(d):
        fl = int(np.floor(x0[j]))
        opts = {fl - 1, fl} if fl == x0[j] else {fl}
        per_axis.append(sorted(o - int(i_lo[j]) for o in opts))
    seeds = [s for s in product(*per_axis)
             if all(0 <= s[j] < shape[j] for j in range(d)) and qualify[s]]
    if not seeds:
        return _empty_grid(k, d, "cubeBased", c1, "no qualifying cube contains the base point")

    accepted = kernels.flood_fill(qualify, np.asarray(seeds, dtype=np.int64))

    # vertex lattice: corners of accepted cubes
    vshape = tuple(s + 1 for s in shape)
    vmask = np.zeros(vshape, dtype=bool)
    for off in product((0, 1), repeat=d):
        sl = tuple(slice(o, o + s) for o, s in zip(off, shape))
        vmask[sl] |= accepted
    vid = np.full(vshape, -1, dtype=np.int64)
    n = int(vmask.sum())
    vid[vmask] = np.arange(n)
    vertices = np.argwhere(vmask) + i_lo

    # edge along axis a from vertex v exists iff some accepted cube c has
    # c_a = v_a and c_j in {v_j - 1, v_j} for j != a
    src, dst = [], []
    padded = np.pad(accepted, 1)
    for a in range(d):
        eshape = list(vshape)
        eshape[a] -= 1
        emask = np.zeros(eshape, dtype=bool)
        others = [j for j in range(d) if j != a]
        for off in product((0, 1), repeat=d - 1):
            sl = [None] * d
            sl[a] = slice(1, 1 + shape[a])
            for j, o in zip(others, off):
                # vertex index v_j in [0, shape_j]; cube index v_j - o, shifted by pad
                sl[j] = slice(1 - o, 1 - o + vshape[j])
            emask |= padded[tuple(sl)]
        idx = np.argwhere(emask)
        nxt = idx.copy()
        nxt[:, a] += 1
        src.append(vid[tuple(idx.T)])
        dst.append(vid[tuple(nxt.T)])
    src = np.concatenate(src) if src else np.zeros(0, np.int64)
    dst = np.concatenate(dst) if dst else np.zeros(0, np.int64)
    indptr, indices = _csr_from_pairs(n, src, dst)
    cubes = np.argwhere(accepted) + i_lo
    g = GridGraph(k, d, vertices, indptr, indices, "cubeBased", c1, cubes)
    g.meta["domain"] = spec.describe()
    return g


def build_edge_graph(spec: DomainSpec, k: int) -> GridGraph:
    """Edge-based lattice graph: segments in the domain, base component only.

    The component kept is the one containing the graph vertex nearest the
    base point (ties broken lexicographically).
    """
    d = spec.dimension
    h = 2.0 ** -k
    i_lo, shape = _lattice_range(spec, h)
    vshape = tuple(int(s) + 1 for s in shape)
    pts_idx = _index_grid(vshape)
    inside = spec.contains((pts_idx + i_lo) * h)
    cand = pts_idx[inside]
    vid = np.full(vshape, -1, dtype=np.int64)
    vid[tuple(cand.T)] = np.arange(cand.shape[0])

    src, dst = [], []
    for a in range(d):
        nxt = cand.copy()
        nxt[:, a] += 1
        ok = nxt[:, a] < vshape[a]
        ids_b = np.full(cand.shape[0], -1, dtype=np.int64)
        ids_b[ok] = vid[tuple(nxt[ok].T)]
        ok &= ids_b >= 0
        if ok.any():
            ok[ok] = spec.lattice_edges_inside((cand[ok] + i_lo) * h, a, h)
        src.append(np.flatnonzero(ok))
        dst.append(ids_b[ok])
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    m = cand.shape[0]
    if src.size == 0:
        return _empty_grid(k, d, "edgeBased", None, "no lattice segment lies in the domain")

    adj = csr_matrix((np.ones(src.size), (src, dst)), shape=(m, m))
    _, labels = connected_components(adj, directed=False)
    has_edge = np.zeros(m, dtype=bool)
    has_edge[src] = True
    has_edge[dst] = True
    eligible = np.flatnonzero(has_edge)
    x0 = np.asarray(spec.base_point, float)
    d2 = (((cand[eligible] + i_lo) * h - x0) ** 2).sum(axis=1)
    seed = eligible[np.flatnonzero(d2 == d2.min())[0]]
    keep = labels == labels[seed]
    new_id = np.full(m, -1, dtype=np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    emask = keep[src]
    indptr, indices = _csr_from_pairs(int(keep.sum()), new_id[src[emask]], new_id[dst[emask]])
    g = GridGraph(k, d, cand[keep] + i_lo, indptr, indices, "edgeBased", None, None)
    g.meta["domain"] = spec.describe()
    return g


def total_measure(g: GridGraph) -> float:
    return float(g.measure.sum()) if g.n_vertices else 0.0


# --- cross-level operators ---------------------------------------------------

def extend_to_domain(g: GridGraph, f):
    """Piecewise-constant extension ``E_k f``.

    Returns a callable on ``(M, d)`` points: the value of the vertex whose
    half-open cell ``prod [x_i - h/2, x_i + h/2)`` contains the point, else 0.
    """
    vals = as_values(g, f)
    h = g.h

    def evaluate(points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = pts.reshape(-1, g.dimension)
        # lower-closed cells: index = floor(z / h + 1/2)
        idx = np.floor(pts / h + 0.5).astype(np.int64)
        out = np.zeros(pts.shape[0])
        for r, key in enumerate(map(tuple, idx.tolist())):
            i = g._lookup.get(key, -1)
            if i >= 0:
                out[r] = vals[i]
        return out[0] if single else out

    return evaluate


def gauss_cell_rule(d: int, order: int = 3):
    """Tensor Gauss-Legendre nodes on ``[-1/2, 1/2]^d`` with weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = x / 2
    w = w / 2
    nodes = np.array(list(product(x, repeat=d)))
    weights = np.prod(np.array(list(product(w, repeat=d))), axis=1)
    return nodes, weights


def restrict_to_grid(g: GridGraph, u, order: int = 3) -> GridFunction:
    """Cell averages ``pi_k u(x)`` over ``U_k(x)`` by tensor Gauss quadrature.

    ``u`` maps ``(M, d)`` points to ``(M,)`` values and must be defined on every
    cell (cells of boundary vertices may reach slightly past the cube union).
    """
    nodes, weights = gauss_cell_rule(g.dimension, order)
    pts = g.positions[:, None, :] + g.h * nodes[None, :, :]
    vals = np.asarray(u(pts.reshape(-1, g.dimension)), dtype=float).reshape(g.n_vertices, -1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("function returned non-finite values during cell quadrature")
    return GridFunction(g, vals @ weights)
