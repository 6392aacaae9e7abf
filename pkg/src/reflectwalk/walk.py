"""Simple random walks on lattice graphs.

The discrete-time walk jumps every ``2^-2k`` time units to a uniformly chosen
neighbour; between jumps it is linearly interpolated (``X^k``) or frozen
(``Y^k``).  The continuous-time walk holds for exponential times of mean
``2^-2k``.

Randomness contract
-------------------
Replica ``r`` of a run with seed ``s`` draws exclusively from
``RandomSource(s, r)``, a Philox counter-based stream whose key is derived
from ``s`` and whose counter's top word is ``r``.  Within a stream draws
happen in a fixed order:

1. stationary start only: two uniforms (alias column, alias coin);
2. continuous time only: exponential holding times in blocks of
   ``HOLD_BLOCK`` until their sum exceeds the horizon;
3. one uniform per jump; the neighbour taken from ``x`` is
   ``neighbors(x)[floor(u * deg(x))]`` with neighbours sorted by vertex id.

Ensembles are therefore independent of block size and worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from ._backend import kernels
from .grid import GridGraph

__all__ = [
    "RandomSource",
    "AliasTable",
    "WalkConfig",
    "PathSample",
    "step_discrete",
    "simulate_discrete",
    "simulate_continuous",
    "reverse_path",
    "sample_stationary_start",
    "free_walk",
    "free_directions",
    "ensemble_discrete",
    "ensemble_continuous",
    "ensemble_exit",
]

HOLD_BLOCK = 1024
EXIT_BLOCK = 4096
REPLICA_BLOCK = 2048


class RandomSource:
    """Reproducible random stream identified by ``(seed, stream)``."""

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.random.SeedSequence(self.seed).generate_state(2, np.uint64)
        bitgen = np.random.Philox(key=key, counter=[0, 0, 0, self.stream])
        self.generator = np.random.Generator(bitgen)

    def random(self, size=None):
        return self.generator.random(size)

    def exponential(self, scale, size=None):
        return self.generator.exponential(scale, size)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


class AliasTable:
    """Walker/Vose alias table for O(1) sampling from a finite distribution."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("alias table needs nonnegative weights with positive sum")
        n = w.size
        scaled = w * n / w.sum()
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            l = large[-1]
            prob[s] = scaled[s]
            alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            if scaled[l] < 1.0:
                large.pop()
                small.append(l)
        self.prob = prob
        self.alias = alias

    def __len__(self):
        return self.prob.size

    def sample(self, u_column, u_coin):
        """Map uniform pairs to outcomes (vectorised)."""
        i = (np.asarray(u_column) * self.prob.size).astype(np.int64)
        return np.where(np.asarray(u_coin) < self.prob[i], i, self.alias[i])

    def probabilities(self):
        """Exact outcome probabilities implied by the table."""
        n = self.prob.size
        p = self.prob / n
        np.add.at(p, self.alias, (1.0 - self.prob) / n)
        return p


_ALIAS_CACHE_KEY = "_stationary_alias"


def _alias_for(g: GridGraph) -> AliasTable:
    table = g.meta.get(_ALIAS_CACHE_KEY)
    if table is None:
        table = AliasTable(g.measure)
        g.meta[_ALIAS_CACHE_KEY] = table
    return table


@dataclass(frozen=True)
class WalkConfig:
    level: int
    horizon: float
    replicas: int = 1
    seed: int = 0
    discipline: str = "discreteTime"     # or "exponentialHolding"
    start_mode: str = "fixed"            # or "stationary"
    start_vertex: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.discipline not in ("discreteTime", "exponentialHolding"):
            raise ValueError(f"unknown discipline {self.discipline!r}")
        if self.start_mode not in ("fixed", "stationary"):
            raise ValueError(f"unknown start mode {self.start_mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def step_time(self) -> float:
        return 4.0 ** -self.level

    @property
    def n_steps(self) -> int:
        # multiplying by a power of two is exact, so ceil is exact too
        return int(math.ceil(self.horizon * 4.0 ** self.level))

    def to_dict(self):
        return {"level": self.level, "horizon": self.horizon, "replicas": self.replicas,
                "seed": self.seed, "discipline": self.discipline,
                "startMode": self.start_mode, "startVertex": self.start_vertex}


@dataclass(frozen=True)
class PathSample:
    """A lattice trajectory stored as vertex ids.

    ``interpolation`` is ``"linear"`` (the interpolated walk), ``"step"``
    (frozen between lattice times) or ``"jump"`` (right-continuous with
    arbitrary jump times).  The path is defined on ``[0, horizon]``.
    """

    times: np.ndarray
    vertex_ids: np.ndarray
    interpolation: str
    horizon: float
    level: int

    def __post_init__(self):
        if len(self.times) != len(self.vertex_ids) or len(self.times) == 0:
            raise ValueError("times and vertex ids must have equal, positive length")
        if self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase")
        if self.interpolation not in ("linear", "step", "jump"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    @property
    def n_jumps(self) -> int:
        return len(self.times) - 1

    def as_step(self) -> "PathSample":
        """The frozen process ``Y^k`` built on the same jump chain."""
        return replace(self, interpolation="step")

    def value_ids(self, s):
        """Right-continuous vertex at time(s) ``s`` (step/jump discipline)."""
        s = np.asarray(s, dtype=float)
        i = np.searchsorted(self.times, s, side="right") - 1
        return self.vertex_ids[np.clip(i, 0, None)]

    def left_limit_ids(self, s):
        """Vertex at ``s-``; at ``s = 0`` this is the initial vertex."""
        s = np.asarray(s, dtype=float)
        i = np.searchsorted(self.times, s, side="left") - 1
        return self.vertex_ids[np.clip(i, 0, None)]

    def positions(self, g: GridGraph, s):
        """Spatial position(s) at time(s) ``s`` honouring the interpolation."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        pos = g.positions
        if self.interpolation == "linear":
            x = s * 4.0 ** self.level
            j = np.floor(x).astype(np.int64)
            j = np.clip(j, 0, len(self.vertex_ids) - 1)
            frac = np.clip(x - j, 0.0, 1.0)
            j1 = np.minimum(j + 1, len(self.vertex_ids) - 1)
            a = pos[self.vertex_ids[j]]
            b = pos[self.vertex_ids[j1]]
            return (1 - frac)[:, None] * a + frac[:, None] * b
        return pos[self.value_ids(s)]


def _require_walkable(g: GridGraph):
    if g.is_empty:
        raise ValueError("cannot walk on an empty grid")


def step_discrete(g: GridGraph, vertex: int, rng: RandomSource) -> int:
    """One uniform nearest-neighbour jump."""
    lo, hi = g.indptr[vertex], g.indptr[vertex + 1]
    if hi == lo:
        raise ValueError(f"vertex {vertex} has no neighbours")
    u = rng.random()
    return int(g.indices[lo + int(u * float(hi - lo))])


def sample_stationary_start(g: GridGraph, rng: RandomSource) -> int:
    """Vertex drawn with probability ``m_k(x) / sum m_k``."""
    _require_walkable(g)
    u = rng.random(2)
    return int(_alias_for(g).sample(u[0], u[1]))


def _start_for(g, cfg, rng):
    if cfg.start_mode == "stationary":
        return sample_stationary_start(g, rng)
    if not 0 <= cfg.start_vertex < g.n_vertices:
        raise ValueError(f"start vertex {cfg.start_vertex} is not in the grid")
    return cfg.start_vertex


def _check_degrees(g):
    if np.any(g.degrees == 0):
        raise ValueError("grid has isolated vertices; the walk is undefined")


def simulate_discrete(g: GridGraph, cfg: WalkConfig, rng: RandomSource) -> PathSample:
    """Discrete-time walk on ``[0, horizon]`` with ``ceil(T 4^k)`` jumps."""
    _require_walkable(g)
    _check_degrees(g)
    start = _start_for(g, cfg, rng)
    n = cfg.n_steps
    ids = kernels.walk_path(g.indptr, g.indices, np.int32(start), rng.random(n))
    times = np.arange(n + 1) * cfg.step_time
    return PathSample(times, np.asarray(ids), "linear", n * cfg.step_time, cfg.level)


def _holding_times(rng, scale, horizon):
    chunks = []
    total = 0.0
    while total <= horizon:
        block = rng.exponential(scale, HOLD_BLOCK)
        chunks.append(block)
        total += float(block.sum())
    jt = np.cumsum(np.concatenate(chunks))
    return jt[jt <= horizon]


def simulate_continuous(g: GridGraph, cfg: WalkConfig, rng: RandomSource) -> PathSample:
    """Continuous-time walk: exponential holding with mean ``2^-2k``."""
    _require_walkable(g)
    _check_degrees(g)
    start = _start_for(g, cfg, rng)
    jumps = _holding_times(rng, cfg.step_time, cfg.horizon)
    ids = kernels.walk_path(g.indptr, g.indices, np.int32(start), rng.random(jumps.size))
    times = np.concatenate([[0.0], jumps])
    return PathSample(times, np.asarray(ids), "jump", float(cfg.horizon), cfg.level)


def reverse_path(p: PathSample, t: float) -> PathSample:
    """Time reversal ``r_t``: ``s -> p((t - s)-)`` on ``[0, t]``, then ``p(0)``.

    Linear paths are reversed only at lattice times ``t = j 2^-2k``, where the
    reversed path is again a lattice path.
    """
    if t < 0 or t > p.horizon:
        raise ValueError(f"reversal time {t} outside [0, {p.horizon}]")
    if p.interpolation == "linear":
        x = t * 4.0 ** p.level
        if x != math.floor(x):
            raise ValueError("linear paths can only be reversed at lattice times")
        j = int(x)
        ids = p.vertex_ids[:j + 1][::-1].copy()
        return PathSample(p.times[:j + 1].copy(), ids, "linear", float(t), p.level)
    inner = p.times[1:]
    jumps = inner[inner < t]
    m = jumps.size
    values = p.vertex_ids[:m + 1]
    times = np.concatenate([[0.0], (t - jumps)[::-1]])
    interp = p.interpolation
    if interp == "step" and t * 4.0 ** p.level != math.floor(t * 4.0 ** p.level):
        interp = "jump"
    return PathSample(times, values[::-1].copy(), interp, float(t), p.level)


def free_directions(d: int) -> np.ndarray:
    """Unit steps ``-e1, ..., -ed, +ed, ..., +e1``: the lexicographic order of
    an interior vertex's neighbours, so grid and free walks share draws."""
    eye = np.eye(d, dtype=np.int64)
    return np.vstack([-eye, eye[::-1]])


def free_walk(start_lattice, uniforms) -> np.ndarray:
    """Simple random walk on ``Z^d`` (lattice units) driven by given uniforms."""
    start = np.asarray(start_lattice, dtype=np.int64)
    dirs = free_directions(start.size)
    choice = (np.asarray(uniforms) * float(dirs.shape[0])).astype(np.int64)
    return np.vstack([start, start + np.cumsum(dirs[choice], axis=0)])


# --- ensembles -------------------------------------------------------------------

def _blocks(replicas):
    return [(s, min(s + REPLICA_BLOCK, replicas)) for s in range(0, replicas, REPLICA_BLOCK)]


def _run_blocks(fn, replicas, workers):
    blocks = _blocks(replicas)
    if workers <= 1 or len(blocks) == 1:
        return [fn(a, b) for a, b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), blocks))


def _starts(g, cfg, sources):
    if cfg.start_mode == "stationary":
        u = np.array([src.random(2) for src in sources]).reshape(-1, 2)
        return _alias_for(g).sample(u[:, 0], u[:, 1]).astype(np.int32)
    if not 0 <= cfg.start_vertex < g.n_vertices:
        raise ValueError(f"start vertex {cfg.start_vertex} is not in the grid")
    return np.full(len(sources), cfg.start_vertex, dtype=np.int32)


def ensemble_discrete(g: GridGraph, cfg: WalkConfig, record_steps) -> np.ndarray:
    """Vertex ids of every replica at the given (sorted) step indices.

    Returns ``(replicas, len(record_steps))`` int32.
    """
    _require_walkable(g)
    _check_degrees(g)
    rec = np.asarray(record_steps, dtype=np.int64)
    if rec.ndim != 1 or np.any(np.diff(rec) < 0) or np.any(rec < 0):
        raise ValueError("record steps must be a nondecreasing list of nonnegative ints")
    n = int(rec[-1]) if rec.size else 0

    def run(a, b):
        sources = [RandomSource(cfg.seed, r) for r in range(a, b)]
        starts = _starts(g, cfg, sources)
        U = np.empty((b - a, max(n, 1)))
        for i, src in enumerate(sources):
            U[i, :n] = src.random(n)
        record = np.ascontiguousarray(np.broadcast_to(rec, (b - a, rec.size)))
        return kernels.walk_record(g.indptr, g.indices, starts, U, record)

    return np.vstack(_run_blocks(run, cfg.replicas, cfg.workers))


def ensemble_continuous(g: GridGraph, cfg: WalkConfig, record_times) -> tuple:
    """Continuous-time ensemble sampled at ``record_times`` (<= horizon).

    Returns ``(ids, jump_counts)``, both ``(replicas, len(record_times))``.
    """
    _require_walkable(g)
    _check_degrees(g)
    rt = np.asarray(record_times, dtype=float)
    if np.any(rt > cfg.horizon) or np.any(np.diff(rt) < 0):
        raise ValueError("record times must be sorted and within the horizon")

    def run(a, b):
        sources = [RandomSource(cfg.seed, r) for r in range(a, b)]
        starts = _starts(g, cfg, sources)
        jumps = [_holding_times(src, cfg.step_time, cfg.horizon) for src in sources]
        nmax = max(j.size for j in jumps)
        U = np.zeros((b - a, max(nmax, 1)))
        counts = np.empty((b - a, rt.size), dtype=np.int64)
        for i, (src, jt) in enumerate(zip(sources, jumps)):
            U[i, :jt.size] = src.random(jt.size)
            counts[i] = np.searchsorted(jt, rt, side="right")
        ids = kernels.walk_record(g.indptr, g.indices, starts, U, counts)
        return ids, counts

    parts = _run_blocks(run, cfg.replicas, cfg.workers)
    return np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts])


def ensemble_exit(g: GridGraph, cfg: WalkConfig, inside, max_steps: int = 1 << 24) -> np.ndarray:
    """First step index at which each replica's discrete walk leaves ``inside``.

    ``inside`` is a boolean vertex mask; the start vertex must be inside.
    Uniforms are drawn in blocks of ``EXIT_BLOCK`` per replica as needed.
    Replicas still inside after ``max_steps`` report -1.
    """
    _require_walkable(g)
    _check_degrees(g)
    inside = np.ascontiguousarray(inside, dtype=np.uint8)

    def run(a, b):
        sources = [RandomSource(cfg.seed, r) for r in range(a, b)]
        pos = _starts(g, cfg, sources)
        if not inside[pos].all():
            raise ValueError("start vertex lies outside the region")
        result = np.full(b - a, -1, dtype=np.int64)
        active = np.arange(b - a)
        offset = 0
        while active.size and offset < max_steps:
            U = np.empty((active.size, EXIT_BLOCK))
            for i, r in enumerate(active):
                U[i] = sources[r].random(EXIT_BLOCK)
            steps, last = kernels.exit_walk(g.indptr, g.indices, pos[active].copy(), U, inside)
            done = steps >= 0
            result[active[done]] = steps[done] + offset
            pos[active] = last
            active = active[~done]
            offset += EXIT_BLOCK
        return result

    return np.concatenate(_run_blocks(run, cfg.replicas, cfg.workers))
