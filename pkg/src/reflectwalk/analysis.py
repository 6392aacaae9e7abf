"""Continuum oracles and Monte Carlo diagnostics for the lattice walks.

The walks converge to reflecting Brownian motion with generator
``(1/(2d)) Laplacian`` ("speed 1/d").  On boxes the limit law is explicit:

* the Neumann heat kernel is a product of cosine series, one per axis;
* the exit time from a sub-box has a sine-series survival function.

Histogram bins are equal-width bins whose interior edges are snapped to cell
boundaries ``(i + 1/2) 2^-k``, so each bin holds whole lattice cells and the
bipartite lattice does not alias against the bin edges.  Discrete-time
marginals average the two lattice times bracketing ``t`` to cancel the
walk's period-2 parity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .domain import DomainSpec
from ._backend import kernels
from .grid import GridGraph, build_cube_complex, build_edge_graph
from .walk import (
    RandomSource,
    WalkConfig,
    ensemble_continuous,
    ensemble_discrete,
    ensemble_exit,
    sample_stationary_start,
    simulate_discrete,
)

__all__ = [
    "HeatKernelOracle",
    "neumann_kernel",
    "BoxExitOracle",
    "MarginalComparison",
    "snapped_bin_edges",
    "lattice_histogram",
    "total_variation",
    "marginal_test",
    "stationary_marginal_test",
    "discipline_comparison",
    "occupation_test",
    "crevice_penetration",
    "exit_time_test",
    "tv_noise_level",
    "mean_square_displacement",
]


# --- Neumann heat kernel ----------------------------------------------------------

@dataclass(frozen=True)
class HeatKernelOracle:
    """Reflecting Brownian motion on ``prod [0, L_i]`` with generator ``(1/(2d)) Laplacian``.

    ``speed_dim`` is the ``d`` in the generator; it defaults to the number of
    axes.  ``terms`` fixes the series length per axis (``None``: choose it so
    the first neglected exponential is below ``tol``).
    """

    lengths: tuple
    speed_dim: int | None = None
    terms: int | None = None
    tol: float = 1e-14

    def __post_init__(self):
        if not self.lengths or any(not L > 0 for L in self.lengths):
            raise ValueError("box side lengths must be positive")

    @property
    def dimension(self) -> int:
        return len(self.lengths)

    @property
    def d(self) -> int:
        return self.speed_dim or self.dimension

    def _rate(self, L):
        return math.pi ** 2 / (2 * self.d * L * L)

    def n_terms(self, t: float, L: float) -> int:
        if not t > 0:
            raise ValueError("time must be positive")
        need = math.ceil(math.sqrt(math.log(1 / self.tol) / (self._rate(L) * t)))
        if self.terms is None:
            return need
        if self.terms < need:
            raise ValueError(f"{self.terms} terms leave a tail above {self.tol:g} at t={t}")
        return self.terms

    def _tail(self, t, L, N):
        a = self._rate(L) * t
        return (2 / L) * math.exp(-(N + 1) ** 2 * a) / (1 - math.exp(-a))

    def axis_density(self, t, x, y, axis=0):
        L = self.lengths[axis]
        N = self.n_terms(t, L)
        n = np.arange(1, N + 1)
        coef = np.exp(-n * n * self._rate(L) * t)
        x = np.atleast_1d(np.asarray(x, float))[:, None]
        y = np.atleast_1d(np.asarray(y, float))[:, None]
        s = (coef * np.cos(n * np.pi * x / L) * np.cos(n * np.pi * y / L)).sum(axis=1)
        return 1 / L + (2 / L) * s, self._tail(t, L, N)

    def density(self, t, x, y):
        """``(p_t(x, y), error bound)`` for single points ``x``, ``y``."""
        x = np.asarray(x, float).reshape(-1)
        y = np.asarray(y, float).reshape(-1)
        vals, errs = [], []
        for i in range(self.dimension):
            v, e = self.axis_density(t, x[i], y[i], i)
            vals.append(float(v[0]))
            errs.append(e)
        val = float(np.prod(vals))
        bound = 0.0
        for i in range(self.dimension):
            others = np.prod([abs(vals[j]) + errs[j] for j in range(self.dimension) if j != i])
            bound += errs[i] * others
        return val, bound

    def axis_bin_masses(self, t, x, edges, axis=0):
        """``int_{e_j}^{e_j+1} p_t(x, y) dy`` along one axis, in closed form."""
        L = self.lengths[axis]
        N = self.n_terms(t, L)
        n = np.arange(1, N + 1)
        e = np.asarray(edges, float)
        coef = np.exp(-n * n * self._rate(L) * t) * np.cos(n * np.pi * x / L)
        sines = np.sin(np.outer(e, n) * np.pi / L) * (L / (n * np.pi))
        prim = e / L + (2 / L) * (sines * coef).sum(axis=1)
        return np.diff(prim)

    def bin_masses(self, t, x, edges_per_axis):
        masses = None
        for i, edges in enumerate(edges_per_axis):
            m = self.axis_bin_masses(t, float(np.asarray(x).reshape(-1)[i]), edges, i)
            masses = m if masses is None else np.multiply.outer(masses, m)
        return masses


def neumann_kernel(o: HeatKernelOracle, t, x, y):
    return o.density(t, x, y)


# --- Brownian exit from a box ------------------------------------------------------------

@dataclass(frozen=True)
class BoxExitOracle:
    """Exit time of speed-``1/d`` Brownian motion from an open box, started at ``x``."""

    lo: tuple
    hi: tuple
    start: tuple
    speed_dim: int | None = None
    tol: float = 1e-14

    @property
    def d(self):
        return self.speed_dim or len(self.lo)

    def _axis_survival(self, t, i):
        s = self.hi[i] - self.lo[i]
        u = (self.start[i] - self.lo[i]) / s
        a = math.pi ** 2 / (2 * self.d * s * s)
        t = np.atleast_1d(np.asarray(t, float))
        tmin = max(float(t[t > 0].min()) if np.any(t > 0) else 1.0, 1e-300)
        N = math.ceil(math.sqrt(math.log(1 / self.tol) / (a * tmin))) + 1
        n = np.arange(1, min(N, 200000) + 1, 2)  # even modes vanish
        c = 4 / (n * math.pi) * np.sin(n * math.pi * u)
        out = (c[None, :] * np.exp(-np.outer(t, n * n) * a)).sum(axis=1)
        return np.where(t <= 0, 1.0, np.clip(out, 0.0, 1.0))

    def survival(self, t):
        out = 1.0
        for i in range(len(self.lo)):
            out = out * self._axis_survival(t, i)
        return out

    def cdf(self, t):
        return 1.0 - self.survival(t)

    def mean_series(self, terms: int = 20001) -> float:
        """Mean exit time: closed-form per-mode integral in 1-D, quadrature otherwise."""
        if len(self.lo) == 1:
            s = self.hi[0] - self.lo[0]
            u = (self.start[0] - self.lo[0]) / s
            n = np.arange(1, terms + 1, 2)
            a = math.pi ** 2 / (2 * self.d * s * s)
            return float((4 / (n * math.pi) * np.sin(n * math.pi * u) / (n * n * a)).sum())
        val, _ = integrate.quad(lambda t: float(self.survival(t)[0]), 0, np.inf, limit=200)
        return val

    def mean_closed_form_1d(self) -> float:
        """``d (x - lo)(hi - x)`` for the interval."""
        return self.d * (self.start[0] - self.lo[0]) * (self.hi[0] - self.start[0])


# --- histograms ------------------------------------------------------------------------

def snapped_bin_edges(lo: float, hi: float, bins: int, h: float) -> np.ndarray:
    """Equal-width edges with interior edges moved to the nearest cell boundary."""
    if bins < 1:
        raise ValueError("need at least one bin")
    e = np.linspace(lo, hi, bins + 1)
    inner = (np.floor(e[1:-1] / h) + 0.5) * h
    e[1:-1] = inner
    if np.any(np.diff(e) <= 0):
        raise ValueError("bins are narrower than the lattice spacing")
    return e


def lattice_histogram(g: GridGraph, ids, edges_per_axis, weights=None) -> np.ndarray:
    """Normalised histogram of vertex positions over the given bin edges."""
    ids = np.asarray(ids).reshape(-1)
    pts = g.positions[ids]
    hist, _ = np.histogramdd(pts, bins=list(edges_per_axis), weights=weights)
    total = hist.sum()
    return hist / total if total > 0 else hist


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def tv_noise_level(p, n_eff) -> float:
    """Expected TV of an ``n_eff``-sample histogram from its own law ``p`` (normal approx.)."""
    p = np.asarray(p, float).reshape(-1)
    return 0.5 * float(np.sqrt(2 / np.pi) * np.sqrt(p * (1 - p) / n_eff).sum())


@dataclass
class MarginalComparison:
    level: int
    time: float
    replicas: int
    edges: list
    empirical: np.ndarray
    reference: np.ndarray
    total_variation: float
    noise_level: float
    config: dict = field(default_factory=dict)
    grid_fingerprint: str = ""
    reference_kind: str = "neumannKernel"

    def to_dict(self):
        return {
            "level": self.level, "time": self.time, "replicas": self.replicas,
            "edges": [list(map(float, e)) for e in self.edges],
            "empirical": np.asarray(self.empirical).reshape(-1).tolist(),
            "reference": np.asarray(self.reference).reshape(-1).tolist(),
            "totalVariation": self.total_variation, "noiseLevel": self.noise_level,
            "referenceKind": self.reference_kind, "config": self.config,
            "gridFingerprint": self.grid_fingerprint,
            "hypothesis": "boundary has zero Lebesgue measure",
        }


def _box_of(g: GridGraph):
    dom = g.meta.get("domain", {})
    if dom.get("name") != "rectangle":
        raise ValueError("kernel comparison needs a grid built on a rectangle domain")
    return np.asarray(dom["lo"], float), np.asarray(dom["hi"], float)


def _check_geometry(g, o: HeatKernelOracle):
    lo, hi = _box_of(g)
    if lo.size != o.dimension or np.any(lo != 0) or np.any(np.abs(hi - np.asarray(o.lengths)) > 1e-12):
        raise ValueError("grid domain does not match the oracle box")
    return lo, hi


def _discrete_parity_ids(g, cfg, t):
    n0 = int(math.floor(t * 4.0 ** cfg.level))
    return ensemble_discrete(g, cfg, [n0, n0 + 1])


def marginal_test(g: GridGraph, cfg: WalkConfig, o: HeatKernelOracle, t: float,
                  bins: int) -> MarginalComparison:
    """Walk marginal at time ``t`` against Neumann-kernel bin masses.

    Discrete-time ensembles use the two lattice times bracketing ``t``
    (weight 1/2 each); continuous-time ensembles use ``X_t`` directly.
    """
    if cfg.start_mode != "fixed":
        raise ValueError("kernel comparison needs a fixed start vertex")
    if cfg.level != g.level:
        raise ValueError("walk level does not match grid level")
    lo, hi = _check_geometry(g, o)
    edges = [snapped_bin_edges(lo[i], hi[i], bins, g.h) for i in range(g.dimension)]
    if cfg.discipline == "discreteTime":
        ids = _discrete_parity_ids(g, cfg, t)
        n_eff = cfg.replicas
    else:
        ids, _ = ensemble_continuous(g, replace_horizon(cfg, t), [t])
        n_eff = cfg.replicas
    emp = lattice_histogram(g, ids, edges)
    x0 = g.positions[cfg.start_vertex]
    ref = o.bin_masses(t, x0, edges)
    return MarginalComparison(g.level, t, cfg.replicas, edges, emp, ref,
                              total_variation(emp, ref), tv_noise_level(ref, n_eff),
                              cfg.to_dict(), g.fingerprint)


def replace_horizon(cfg: WalkConfig, t: float) -> WalkConfig:
    return replace(cfg, horizon=max(cfg.horizon, t))


def stationary_marginal_test(g: GridGraph, cfg: WalkConfig, t: float, bins: int) -> MarginalComparison:
    """Stationary-start marginal at ``t`` against the pushforward of normalised ``m_k``."""
    if cfg.start_mode != "stationary":
        raise ValueError("stationary marginal test needs a stationary start")
    lo, hi = _box_of(g)
    edges = [snapped_bin_edges(lo[i], hi[i], bins, g.h) for i in range(g.dimension)]
    if cfg.discipline == "discreteTime":
        ids = _discrete_parity_ids(g, cfg, t)
    else:
        ids, _ = ensemble_continuous(g, replace_horizon(cfg, t), [t])
    emp = lattice_histogram(g, ids, edges)
    ref = lattice_histogram(g, np.arange(g.n_vertices), edges, weights=g.measure)
    return MarginalComparison(g.level, t, cfg.replicas, edges, emp, ref,
                              total_variation(emp, ref), tv_noise_level(ref, cfg.replicas),
                              cfg.to_dict(), g.fingerprint, "stationaryMeasure")


def discipline_comparison(g: GridGraph, cfg: WalkConfig, t: float, bins: int) -> dict:
    """TV between discrete-time and continuous-time marginals at ``t``.

    Both ensembles use the same replica count; the continuous run uses seed
    ``cfg.seed + 1`` so the two are independent.
    """
    lo, hi = _box_of(g)
    edges = [snapped_bin_edges(lo[i], hi[i], bins, g.h) for i in range(g.dimension)]
    dcfg = replace(cfg, discipline="discreteTime", horizon=max(cfg.horizon, t))
    ids_d = _discrete_parity_ids(g, dcfg, t)
    ccfg = replace(cfg, discipline="exponentialHolding", horizon=max(cfg.horizon, t),
                   seed=cfg.seed + 1)
    ids_c, _ = ensemble_continuous(g, ccfg, [t])
    hd = lattice_histogram(g, ids_d, edges)
    hc = lattice_histogram(g, ids_c, edges)
    pooled = (hd + hc) / 2
    noise = 0.5 * float(np.sqrt(2 / np.pi) *
                        np.sqrt(pooled * (1 - pooled) * 2 / cfg.replicas).sum())
    return {"level": g.level, "time": t, "replicas": cfg.replicas,
            "edges": [e.tolist() for e in edges], "discrete": hd.reshape(-1).tolist(),
            "continuous": hc.reshape(-1).tolist(), "totalVariation": total_variation(hd, hc),
            "noiseLevel": noise, "config": cfg.to_dict(), "gridFingerprint": g.fingerprint}


# --- occupation ----------------------------------------------------------------------------

def occupation_test(g: GridGraph, cfg: WalkConfig) -> dict:
    """Long-run visit frequencies and ordered-transition symmetry.

    Each replica runs ``cfg.n_steps`` discrete steps from its start; visits
    are counted at steps ``0..n-1`` (equal numbers of even and odd steps when
    ``n`` is even, which cancels the lattice parity).
    """
    n = cfg.n_steps
    visits = np.zeros(g.n_vertices, dtype=np.int64)
    slot_counts = np.zeros(g.indices.size, dtype=np.int64)
    src_of_slot = np.repeat(np.arange(g.n_vertices), g.degrees)
    slot_key = src_of_slot * g.n_vertices + g.indices
    for r in range(cfg.replicas):
        rng = RandomSource(cfg.seed, r)
        start = sample_stationary_start(g, rng) if cfg.start_mode == "stationary" else cfg.start_vertex
        path = kernels.walk_path(g.indptr, g.indices, np.int32(start), rng.random(n))
        visits += np.bincount(path[:-1], minlength=g.n_vertices)
        # slot of transition x -> y inside x's sorted neighbour list
        a = path[:-1].astype(np.int64)
        b = path[1:].astype(np.int64)
        key = a * g.n_vertices + b
        slot_counts += np.bincount(np.searchsorted(slot_key, key), minlength=g.indices.size)
    total = visits.sum()
    freq = visits / total
    pi = g.measure / g.measure.sum()
    chi2 = float(((visits - total * pi) ** 2 / (total * pi)).sum())
    e = g.edges()
    fwd = slot_counts[np.searchsorted(slot_key, e[:, 0] * g.n_vertices + e[:, 1])]
    bwd = slot_counts[np.searchsorted(slot_key, e[:, 1] * g.n_vertices + e[:, 0])]
    denom = np.sqrt(np.maximum(fwd + bwd, 1))
    z = (fwd - bwd) / denom
    return {"steps": int(total), "frequencies": freq.tolist(), "stationary": pi.tolist(),
            "totalVariation": total_variation(freq, pi), "chiSquare": chi2,
            "edges": e.tolist(), "forward": fwd.tolist(), "backward": bwd.tolist(),
            "maxAbsZ": float(np.abs(z).max()) if z.size else 0.0,
            "config": cfg.to_dict(), "gridFingerprint": g.fingerprint}


# --- crevices ---------------------------------------------------------------------------------

def _in_boxes(points, boxes):
    mask = np.zeros(points.shape[0], dtype=bool)
    for lo, hi in boxes:
        mask |= np.all((points > lo) & (points < hi), axis=1)
    return mask


def crevice_penetration(spec: DomainSpec, k: int, c1: float = 0.5) -> dict:
    """Compare how far the cube complex and the edge graph reach into crevices."""
    boxes = spec.crevices()
    out = {"domain": spec.describe(), "level": k, "c1": c1}
    for tag, g in (("cubeBased", build_cube_complex(spec, k, c1)),
                   ("edgeBased", build_edge_graph(spec, k))):
        if g.is_empty:
            out[tag] = {"vertices": 0, "creviceVertices": 0, "creviceMass": 0.0,
                        "gridFingerprint": g.fingerprint}
            continue
        inside = _in_boxes(g.positions, boxes)
        out[tag] = {
            "vertices": g.n_vertices,
            "creviceVertices": int(inside.sum()),
            "creviceMass": float(g.measure[inside].sum() / g.measure.sum()),
            "gridFingerprint": g.fingerprint,
        }
    return out


# --- exit times --------------------------------------------------------------------------------

def _ks_lattice(samples, cdf):
    """Kolmogorov-Smirnov distance for atomic samples against a continuous CDF."""
    x = np.sort(np.asarray(samples, float))
    vals, counts = np.unique(x, return_counts=True)
    F_after = np.cumsum(counts) / x.size
    F_before = F_after - counts / x.size
    Fc = cdf(vals)
    return float(max(np.abs(F_after - Fc).max(), np.abs(F_before - Fc).max()))


def exit_time_test(g: GridGraph, cfg: WalkConfig, sub_lo, sub_hi) -> dict:
    """Exit time of the discrete walk from an open sub-box against Brownian motion.

    The walk starts at the vertex nearest the box centre; the exit time is
    the first lattice time at which it is not strictly inside the box.
    """
    sub_lo = np.asarray(sub_lo, float)
    sub_hi = np.asarray(sub_hi, float)
    center = (sub_lo + sub_hi) / 2
    start = g.nearest_vertex(center)
    pos = g.positions
    inside = np.all((pos > sub_lo) & (pos < sub_hi), axis=1)
    if not inside[start]:
        raise ValueError("start vertex is not inside the sub-box")
    run_cfg = replace(cfg, start_mode="fixed", start_vertex=start)
    steps = ensemble_exit(g, run_cfg, inside)
    done = steps >= 0
    times = steps[done] * 4.0 ** -g.level
    oracle = BoxExitOracle(tuple(sub_lo), tuple(sub_hi), tuple(pos[start]), speed_dim=g.dimension)
    mean_bm = oracle.mean_series()
    mean_walk = float(times.mean()) if times.size else math.nan
    sem = float(times.std(ddof=1) / math.sqrt(times.size)) if times.size > 1 else math.nan
    return {
        "level": g.level, "replicas": cfg.replicas, "exited": int(done.sum()),
        "subBox": [sub_lo.tolist(), sub_hi.tolist()], "start": pos[start].tolist(),
        "meanExitTime": mean_walk, "meanStdError": sem, "brownianMean": mean_bm,
        "relError": mean_walk / mean_bm - 1 if mean_bm > 0 else math.nan,
        "ksDistance": _ks_lattice(times, oracle.cdf) if times.size else math.nan,
        "config": run_cfg.to_dict(), "gridFingerprint": g.fingerprint,
    }


def mean_square_displacement(g: GridGraph, cfg: WalkConfig, t: float) -> float:
    """``E |X_t - X_0|^2`` of the linearly interpolated walk (fixed start)."""
    disp = []
    for r in range(cfg.replicas):
        p = simulate_discrete(g, cfg, RandomSource(cfg.seed, r))
        disp.append(p.positions(g, t)[0] - g.positions[p.vertex_ids[0]])
    d = np.asarray(disp)
    return float((d * d).sum(axis=1).mean())
