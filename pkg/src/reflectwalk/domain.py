"""Geometry oracles for bounded domains.

Every domain answers two questions: is a point in the (open) domain, and how
far is a closed lattice cube from the boundary.  Built-in domains answer the
second question exactly; :class:`ImplicitDomain` answers it with a certified
lower bound derived from a Lipschitz level-set function.

All vectorised methods take points as ``(M, d)`` float arrays.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DomainSpec",
    "RectangleDomain",
    "BallDomain",
    "PolygonDomain",
    "CutDomain",
    "ImplicitDomain",
    "CombParams",
    "contains_point",
    "cube_clearance",
    "make_builtin_domain",
    "comb_domain",
    "koch_snowflake_vertices",
    "polygon_from_json",
    "BUILTIN_DOMAINS",
]

_CHUNK = 4096


def _as_points(points, dim):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {pts.shape[-1]}")
    return pts


# --- planar segment helpers -------------------------------------------------

def _point_segment_dist(px, py, ax, ay, bx, by):
    """Distance from points (px, py) to segments a-b; all args broadcast."""
    dx = bx - ax
    dy = by - ay
    len2 = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = ((px - ax) * dx + (py - ay) * dy) / len2
    t = np.where(len2 > 0, np.clip(t, 0.0, 1.0), 0.0)
    qx = ax + t * dx - px
    qy = ay + t * dy - py
    return np.hypot(qx, qy)


def _point_box_dist(px, py, x0, y0, x1, y1):
    ex = np.maximum(np.maximum(x0 - px, px - x1), 0.0)
    ey = np.maximum(np.maximum(y0 - py, py - y1), 0.0)
    return np.hypot(ex, ey)


def _segment_hits_box(ax, ay, bx, by, x0, y0, x1, y1):
    """Closed segment vs closed axis-aligned box intersection (Liang-Barsky).

    Boxes may be degenerate (zero width), which lets the same routine test
    lattice edges against boundary segments.
    """
    lo = np.zeros(np.broadcast(ax, x0).shape)
    hi = np.ones_like(lo)
    for p, q, blo, bhi in ((ax, bx, x0, x1), (ay, by, y0, y1)):
        d = q - p
        flat = d == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (blo - p) / d
            tb = (bhi - p) / d
        t_enter = np.where(flat, -np.inf, np.minimum(ta, tb))
        t_exit = np.where(flat, np.inf, np.maximum(ta, tb))
        outside = flat & ((p < blo) | (p > bhi))
        lo = np.maximum(lo, t_enter)
        hi = np.minimum(hi, t_exit)
        hi = np.where(outside, -np.inf, hi)
    return lo <= hi


def _boxes_segments_dist(lo, hi, segs):
    """Min distance between each closed 2-D box and a set of segments.

    ``lo``/``hi`` are ``(M, 2)``; ``segs`` is ``(S, 4)`` rows ``ax, ay, bx, by``.
    Returns ``(M,)``; zero where a box touches any segment.
    """
    out = np.full(lo.shape[0], np.inf)
    if len(segs) == 0:
        return out
    ax, ay, bx, by = (segs[:, i][None, :] for i in range(4))
    for s in range(0, lo.shape[0], _CHUNK):
        x0 = lo[s:s + _CHUNK, 0:1]
        y0 = lo[s:s + _CHUNK, 1:2]
        x1 = hi[s:s + _CHUNK, 0:1]
        y1 = hi[s:s + _CHUNK, 1:2]
        hit = _segment_hits_box(ax, ay, bx, by, x0, y0, x1, y1)
        # disjoint convex sets in the plane: the gap is realised at a vertex
        dist = np.minimum(_point_box_dist(ax, ay, x0, y0, x1, y1),
                          _point_box_dist(bx, by, x0, y0, x1, y1))
        for cx, cy in ((x0, y0), (x1, y0), (x0, y1), (x1, y1)):
            dist = np.minimum(dist, _point_segment_dist(cx, cy, ax, ay, bx, by))
        dist = np.where(hit, 0.0, dist)
        out[s:s + _CHUNK] = dist.min(axis=1)
    return out


def _points_segments_dist(pts, segs):
    out = np.full(pts.shape[0], np.inf)
    if len(segs) == 0:
        return out
    ax, ay, bx, by = (segs[:, i][None, :] for i in range(4))
    for s in range(0, pts.shape[0], _CHUNK):
        px = pts[s:s + _CHUNK, 0:1]
        py = pts[s:s + _CHUNK, 1:2]
        out[s:s + _CHUNK] = _point_segment_dist(px, py, ax, ay, bx, by).min(axis=1)
    return out


def _points_on_segments(pts, segs):
    """Exact membership of points in closed segments (a point is a degenerate box)."""
    out = np.zeros(pts.shape[0], dtype=bool)
    if len(segs) == 0:
        return out
    ax, ay, bx, by = (segs[:, i][None, :] for i in range(4))
    for s in range(0, pts.shape[0], _CHUNK):
        px = pts[s:s + _CHUNK, 0:1]
        py = pts[s:s + _CHUNK, 1:2]
        out[s:s + _CHUNK] = _segment_hits_box(ax, ay, bx, by, px, py, px, py).any(axis=1)
    return out


def _lattice_edges_hit(starts, axis, h, segs):
    """Whether each lattice edge ``[p, p + h e_axis]`` touches any segment."""
    out = np.zeros(starts.shape[0], dtype=bool)
    if len(segs) == 0:
        return out
    ends = starts.copy()
    ends[:, axis] += h
    ax, ay, bx, by = (segs[:, i][None, :] for i in range(4))
    for s in range(0, starts.shape[0], _CHUNK):
        x0 = starts[s:s + _CHUNK, 0:1]
        y0 = starts[s:s + _CHUNK, 1:2]
        x1 = ends[s:s + _CHUNK, 0:1]
        y1 = ends[s:s + _CHUNK, 1:2]
        out[s:s + _CHUNK] = _segment_hits_box(ax, ay, bx, by, x0, y0, x1, y1).any(axis=1)
    return out


def _corner_points(lo, h):
    d = lo.shape[1]
    offs = np.array(np.meshgrid(*([[0.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T
    return lo[:, None, :] + h * offs[None, :, :]


# --- domain classes -----------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    """Base class for geometry oracles.

    Subclasses implement :meth:`contains` and :meth:`cube_clearances`; the
    scalar helpers and the lattice-segment test are derived from them.
    """

    dimension: int
    bbox_lo: tuple
    bbox_hi: tuple
    base_point: tuple
    name: str = field(default="domain", compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not self.contains(np.asarray(self.base_point, dtype=float))[0]:
            raise ValueError(f"base point {self.base_point} is not inside the domain")

    @property
    def bounding_box(self):
        return np.asarray(self.bbox_lo, float), np.asarray(self.bbox_hi, float)

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def cube_clearances(self, lo, h: float) -> np.ndarray:
        """dist(Q, boundary) for closed cubes ``[lo, lo + h]``; 0 if Q is not inside."""
        raise NotImplementedError

    def lattice_edges_inside(self, starts, axis: int, h: float) -> np.ndarray:
        """Whether each segment ``[p, p + h e_axis]`` lies entirely in the domain."""
        starts = _as_points(starts, self.dimension)
        ends = starts.copy()
        ends[:, axis] += h
        # convex default: both endpoints suffice
        return self.contains(starts) & self.contains(ends)

    def crevices(self) -> list:
        """Open boxes ``(lo, hi)`` marking thin regions of interest (may be empty)."""
        return []

    def describe(self) -> dict:
        return {"name": self.name, "dimension": self.dimension}


@dataclass(frozen=True)
class RectangleDomain(DomainSpec):
    """Open axis-aligned box ``prod (lo_i, hi_i)`` in any dimension."""

    @classmethod
    def create(cls, lo: Sequence[float], hi: Sequence[float], base_point=None):
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("rectangle corners must have equal, positive dimension")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("rectangle must have positive side lengths")
        if base_point is None:
            base_point = tuple((a + b) / 2 for a, b in zip(lo, hi))
        return cls(len(lo), lo, hi, tuple(float(v) for v in base_point), name="rectangle")

    def contains(self, points):
        pts = _as_points(points, self.dimension)
        lo, hi = self.bounding_box
        return np.all((pts > lo) & (pts < hi), axis=1)

    def cube_clearances(self, lo, h):
        clo = _as_points(lo, self.dimension)
        blo, bhi = self.bounding_box
        gap = np.minimum(clo - blo, bhi - (clo + h)).min(axis=1)
        return np.where(gap > 0, gap, 0.0)

    def describe(self):
        return {"name": "rectangle", "lo": list(self.bbox_lo), "hi": list(self.bbox_hi)}


@dataclass(frozen=True)
class BallDomain(DomainSpec):
    """Open Euclidean ball."""

    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    @classmethod
    def create(cls, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0), base_point=None):
        if not radius > 0:
            raise ValueError("radius must be positive")
        c = tuple(float(v) for v in center)
        lo = tuple(v - radius for v in c)
        hi = tuple(v + radius for v in c)
        bp = c if base_point is None else tuple(float(v) for v in base_point)
        return cls(len(c), lo, hi, bp, "disk", c, float(radius))

    def contains(self, points):
        pts = _as_points(points, self.dimension)
        return np.linalg.norm(pts - np.asarray(self.center), axis=1) < self.radius

    def cube_clearances(self, lo, h):
        clo = _as_points(lo, self.dimension) - np.asarray(self.center)
        far = np.maximum(np.abs(clo), np.abs(clo + h))
        gap = self.radius - np.sqrt((far * far).sum(axis=1))
        return np.where(gap > 0, gap, 0.0)

    def describe(self):
        return {"name": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class PolygonDomain(DomainSpec):
    """Planar polygon with holes, given as closed vertex loops.

    The outer loop is counterclockwise and holes are clockwise.  Membership
    uses the even-odd rule and excludes the boundary itself.
    """

    loops: tuple = ()

    @classmethod
    def create(cls, loops, base_point=None, name="polygon"):
        arrs = [np.asarray(loop, dtype=float) for loop in loops]
        if not arrs:
            raise ValueError("polygon needs at least one loop")
        for i, a in enumerate(arrs):
            if a.ndim != 2 or a.shape[1] != 2 or len(a) < 3:
                raise ValueError(f"loop {i} must be a list of at least 3 planar vertices")
            area = _signed_area(a)
            if i == 0 and area <= 0:
                raise ValueError("outer loop must be counterclockwise")
            if i > 0 and area >= 0:
                raise ValueError(f"hole {i} must be clockwise")
        allv = np.vstack(arrs)
        lo = tuple(allv.min(axis=0))
        hi = tuple(allv.max(axis=0))
        if base_point is None:
            base_point = tuple(arrs[0].mean(axis=0))
        frozen = tuple(tuple(map(tuple, a)) for a in arrs)
        return cls(2, lo, hi, tuple(float(v) for v in base_point), name, frozen)

    @property
    def segments(self) -> np.ndarray:
        rows = []
        for loop in self.loops:
            a = np.asarray(loop)
            b = np.roll(a, -1, axis=0)
            rows.append(np.hstack([a, b]))
        return np.vstack(rows)

    def _inside_evenodd(self, pts):
        segs = self.segments
        inside = np.zeros(pts.shape[0], dtype=bool)
        px = pts[:, 0:1]
        py = pts[:, 1:2]
        ax, ay, bx, by = (segs[:, i][None, :] for i in range(4))
        for s in range(0, pts.shape[0], _CHUNK):
            x = px[s:s + _CHUNK]
            y = py[s:s + _CHUNK]
            straddle = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = ax + (y - ay) * (bx - ax) / (by - ay)
            crossings = (straddle & (x < xcross)).sum(axis=1)
            inside[s:s + _CHUNK] = crossings % 2 == 1
        return inside

    def contains(self, points):
        pts = _as_points(points, 2)
        inside = self._inside_evenodd(pts)
        if inside.any():
            on_edge = _points_on_segments(pts[inside], self.segments)
            inside[np.flatnonzero(inside)[on_edge]] = False
        return inside

    def cube_clearances(self, lo, h):
        clo = _as_points(lo, 2)
        centers = clo + h / 2
        dist = _boxes_segments_dist(clo, clo + h, self.segments)
        ok = (dist > 0) & self._inside_evenodd(centers)
        return np.where(ok, dist, 0.0)

    def lattice_edges_inside(self, starts, axis, h):
        starts = _as_points(starts, 2)
        ends = starts.copy()
        ends[:, axis] += h
        ok = self.contains(starts) & self.contains(ends)
        if ok.any():
            idx = np.flatnonzero(ok)
            ok[idx[_lattice_edges_hit(starts[idx], axis, h, self.segments)]] = False
        return ok

    def describe(self):
        return {"name": self.name, "loops": len(self.loops),
                "vertices": sum(len(loop) for loop in self.loops)}


def _signed_area(a):
    x, y = a[:, 0], a[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class CutDomain(DomainSpec):
    """A convex planar base domain with closed segments removed.

    Used for the slit disk and the comb domain: both are convex sets minus
    finitely many closed segments, so the boundary is the base boundary plus
    those segments.
    """

    base: DomainSpec = None
    cuts: tuple = ()
    crevice_boxes: tuple = ()

    @classmethod
    def create(cls, base, cuts, base_point=None, name="cut", crevice_boxes=()):
        if base.dimension != 2:
            raise ValueError("segment cuts are only supported in the plane")
        cuts = tuple(tuple(float(v) for v in c) for c in cuts)
        bp = base.base_point if base_point is None else tuple(float(v) for v in base_point)
        return cls(2, base.bbox_lo, base.bbox_hi, bp, name, base, cuts,
                   tuple(crevice_boxes))

    @property
    def segments(self) -> np.ndarray:
        return np.asarray(self.cuts, dtype=float).reshape(-1, 4)

    def contains(self, points):
        pts = _as_points(points, 2)
        ok = self.base.contains(pts)
        if ok.any():
            idx = np.flatnonzero(ok)
            ok[idx[_points_on_segments(pts[idx], self.segments)]] = False
        return ok

    def cube_clearances(self, lo, h):
        clo = _as_points(lo, 2)
        c = self.base.cube_clearances(clo, h)
        live = c > 0
        if live.any():
            c[live] = np.minimum(c[live], _boxes_segments_dist(clo[live], clo[live] + h, self.segments))
        return c

    def lattice_edges_inside(self, starts, axis, h):
        starts = _as_points(starts, 2)
        ok = self.base.lattice_edges_inside(starts, axis, h)
        if ok.any():
            idx = np.flatnonzero(ok)
            ok[idx[_lattice_edges_hit(starts[idx], axis, h, self.segments)]] = False
        return ok

    def crevices(self):
        return [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in self.crevice_boxes]

    def describe(self):
        out = {"name": self.name, "base": self.base.describe(), "cuts": len(self.cuts)}
        return out


@dataclass(frozen=True)
class ImplicitDomain(DomainSpec):
    """Domain ``{x : level(x) > 0}`` for a Lipschitz level-set function.

    ``level`` must vanish on the boundary and have Lipschitz constant at most
    ``lipschitz``; then ``level(x) / lipschitz`` bounds ``dist(x, boundary)``
    from below and the clearances returned here are certified lower bounds.
    """

    level: Callable = None
    lipschitz: float = 1.0

    @classmethod
    def create(cls, level, lipschitz, lo, hi, base_point, name="implicit"):
        if not lipschitz > 0:
            raise ValueError("lipschitz constant must be positive")
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        return cls(len(lo), lo, hi, tuple(float(v) for v in base_point), name, level,
                   float(lipschitz))

    def contains(self, points):
        pts = _as_points(points, self.dimension)
        return np.asarray(self.level(pts), dtype=float) > 0

    def cube_clearances(self, lo, h):
        clo = _as_points(lo, self.dimension)
        half_diag = 0.5 * h * math.sqrt(self.dimension)
        bound = np.asarray(self.level(clo + h / 2), dtype=float) / self.lipschitz - half_diag
        return np.where(bound > 0, bound, 0.0)

    def lattice_edges_inside(self, starts, axis, h):
        starts = _as_points(starts, self.dimension)
        mid = starts.copy()
        mid[:, axis] += h / 2
        return np.asarray(self.level(mid), dtype=float) / self.lipschitz > h / 2


# --- scalar conveniences --------------------------------------------------------

def contains_point(spec: DomainSpec, p) -> bool:
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.dimension,):
        raise ValueError(f"point has dimension {p.size}, domain has {spec.dimension}")
    return bool(spec.contains(p)[0])


def cube_clearance(spec: DomainSpec, cube, k: int) -> float:
    """Clearance of the closed lattice cube ``prod [i_j 2^-k, (i_j + 1) 2^-k]``."""
    idx = np.asarray(cube, dtype=np.int64).reshape(1, -1)
    if idx.shape[1] != spec.dimension:
        raise ValueError("cube index dimension does not match the domain")
    h = 2.0 ** -k
    return float(spec.cube_clearances(idx * h, h)[0])


# --- built-in catalogue -----------------------------------------------------------

@dataclass(frozen=True)
class CombParams:
    """Channel widths ``delta_n`` for ``n = 2 .. channel_count + 1``."""

    channel_widths: tuple

    @property
    def channel_count(self) -> int:
        return len(self.channel_widths)

    @classmethod
    def geometric(cls, base: float, count: int) -> "CombParams":
        return cls(tuple(base ** -n for n in range(2, count + 2)))

    @classmethod
    def constant(cls, width: float, count: int) -> "CombParams":
        return cls((float(width),) * count)

    def validate(self):
        if self.channel_count < 1:
            raise ValueError("comb needs at least one channel")
        widths = self.channel_widths
        for j, w in enumerate(widths):
            n = j + 2
            if not w > 0:
                raise ValueError(f"channel width delta_{n} must be positive")
            if n == 2 and not 0.5 + w < 1:
                raise ValueError("channel delta_2 must stay below the top edge")
            if j > 0 and not 1.0 / n + w < 1.0 / (n - 1):
                raise ValueError(f"channels {n - 1} and {n} overlap")


def comb_domain(params: CombParams, base_point=(0.75, 0.75)) -> CutDomain:
    """Two unit squares joined through a wall by thin channels, with slit faces.

    The right square is ``(0,1)^2`` and the left one ``(-1,0) x (0,1)``.  The
    wall ``x1 = 0`` is open only across each channel
    ``(-1/n, 1/n) x (1/n, 1/n + delta_n)``; the channel's top and bottom faces
    are removed as closed slits.
    """
    params.validate()
    base = RectangleDomain.create((-1.0, 0.0), (1.0, 1.0), base_point=base_point)
    cuts = []
    gaps = []
    crevices = []
    for j, w in enumerate(params.channel_widths):
        n = j + 2
        a, b = 1.0 / n, 1.0 / n + w
        cuts.append((-1.0 / n, a, 1.0 / n, a))
        cuts.append((-1.0 / n, b, 1.0 / n, b))
        gaps.append((a, b))
        crevices.append(((-1.0 / n, a), (1.0 / n, b)))
    gaps.sort()
    y = 0.0
    for a, b in gaps:
        cuts.append((0.0, y, 0.0, a))
        y = b
    cuts.append((0.0, y, 0.0, 1.0))
    return CutDomain.create(base, cuts, base_point=base_point, name="comb",
                            crevice_boxes=crevices)


def slit_disk(radius: float = 1.0, base_point=(0.5, 0.0)) -> CutDomain:
    # the slit is the closed segment [-r, 0] x {0}; keeping the origin would
    # leave a non-open set
    base = BallDomain.create(radius, (0.0, 0.0), base_point=base_point)
    return CutDomain.create(base, [(-radius, 0.0, 0.0, 0.0)], base_point=base_point,
                            name="slitDisk")


def koch_snowflake_vertices(level: int, radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    """Counterclockwise vertices of the level-``level`` Koch prefractal."""
    if level < 0:
        raise ValueError("prefractal level must be nonnegative")
    c = complex(*center)
    pts = [c + radius * np.exp(1j * (np.pi / 2 + 2 * np.pi * i / 3)) for i in range(3)]
    turn = np.exp(-1j * np.pi / 3)
    for _ in range(level):
        new = []
        for i, p in enumerate(pts):
            q = pts[(i + 1) % len(pts)]
            s1 = p + (q - p) / 3
            s2 = p + 2 * (q - p) / 3
            new.extend([p, s1, s1 + (s2 - s1) * turn, s2])
        pts = new
    arr = np.array(pts)
    return np.column_stack([arr.real, arr.imag])


def koch_domain(level: int, radius: float = 1.0) -> PolygonDomain:
    return PolygonDomain.create([koch_snowflake_vertices(level, radius)],
                                base_point=(0.0, 0.0), name="kochPrefractal")


def polygon_from_json(text_or_obj) -> PolygonDomain:
    """Parse ``[[x, y], ...]`` loops (outer CCW first, then CW holes)."""
    obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
    if isinstance(obj, dict):
        return PolygonDomain.create(obj["loops"], base_point=obj.get("basePoint"))
    return PolygonDomain.create(obj)


BUILTIN_DOMAINS = {
    "rectangle": {"lo": "list[float], default [0,0]", "hi": "list[float], default [1,1]",
                  "basePoint": "optional list[float]"},
    "disk": {"radius": "float > 0, default 1", "center": "list[float], default [0,0]",
             "basePoint": "optional list[float]"},
    "slitDisk": {"radius": "float > 0, default 1", "basePoint": "optional, default [0.5,0]"},
    "kochPrefractal": {"level": "int >= 0", "radius": "float > 0, default 1"},
    "comb": {"channelWidths": "list[float] (delta_2, delta_3, ...)",
             "geometricBase": "float, alternative: delta_n = base^-n",
             "channelCount": "int, with geometricBase or constantWidth",
             "constantWidth": "float, alternative: every delta_n equal",
             "basePoint": "optional, default [0.75,0.75]"},
    "polygon": {"loops": "list of vertex loops, outer CCW then CW holes",
                "basePoint": "optional list[float]"},
}


def make_builtin_domain(name: str, params: dict | None = None) -> DomainSpec:
    params = dict(params or {})
    bp = params.get("basePoint")
    if name == "rectangle":
        return RectangleDomain.create(params.get("lo", (0.0, 0.0)), params.get("hi", (1.0, 1.0)), bp)
    if name == "disk":
        return BallDomain.create(float(params.get("radius", 1.0)),
                                 params.get("center", (0.0, 0.0)), bp)
    if name == "slitDisk":
        return slit_disk(float(params.get("radius", 1.0)), bp if bp is not None else (0.5, 0.0))
    if name == "kochPrefractal":
        return koch_domain(int(params.get("level", 0)), float(params.get("radius", 1.0)))
    if name == "comb":
        if "channelWidths" in params:
            cp = CombParams(tuple(float(w) for w in params["channelWidths"]))
        elif "geometricBase" in params:
            cp = CombParams.geometric(float(params["geometricBase"]), int(params["channelCount"]))
        elif "constantWidth" in params:
            cp = CombParams.constant(float(params["constantWidth"]), int(params["channelCount"]))
        else:
            raise ValueError("comb needs channelWidths, geometricBase or constantWidth")
        return comb_domain(cp, bp if bp is not None else (0.75, 0.75))
    if name == "polygon":
        return PolygonDomain.create(params["loops"], base_point=bp)
    raise ValueError(f"unknown domain {name!r}")
