"""Compare the compiled kernels with the numpy fallback on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each row reports the best wall time over ``N`` runs and checks that both
backends return identical arrays.
"""
import argparse
import time

import numpy as np

from reflectwalk import _backend
from reflectwalk.domain import BallDomain, RectangleDomain
from reflectwalk.grid import build_cube_complex


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    rng = np.random.default_rng(0)
    g = build_cube_complex(BallDomain.create(1.0), 7)
    line = build_cube_complex(RectangleDomain.create((0.0,), (1.0,)), 7)

    u_path = rng.random(200_000)
    yield "walk_path (2e5 steps)", lambda k: k.walk_path(g.indptr, g.indices, np.int32(100), u_path)

    R, n = 2048, 1640
    U = rng.random((R, n))
    starts = rng.integers(0, g.n_vertices, R).astype(np.int32)
    record = np.ascontiguousarray(np.broadcast_to(np.array([n - 1, n], dtype=np.int64), (R, 2)))
    yield f"walk_record ({R}x{n})", lambda k: k.walk_record(g.indptr, g.indices, starts, U, record)

    inside = np.all(np.abs(line.positions - 0.5) < 0.25, axis=1).astype(np.uint8)
    mid = np.full(R, line.nearest_vertex([0.5]), dtype=np.int32)
    Ue = rng.random((R, 4096))
    yield f"exit_walk ({R}x4096)", lambda k: k.exit_walk(line.indptr, line.indices, mid.copy(), Ue, inside)

    mask = rng.random((256, 256)) < 0.62
    seeds = np.argwhere(mask)[:1].astype(np.int64)
    yield "flood_fill (256^2)", lambda k: k.flood_fill(mask, seeds)


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = _backend.available()
    if "cython" not in names:
        print("compiled extension not built; only the fallback is available")
    mods = {n: _backend.load(n) for n in names}
    print(f"{'kernel':28s}" + "".join(f"{n:>12s}" for n in names) + "   speedup  equal")
    for label, fn in cases():
        res = {n: best_of(lambda: fn(m), args.repeat) for n, m in mods.items()}
        row = f"{label:28s}" + "".join(f"{res[n][0]:11.4f}s" for n in names)
        if len(names) == 2:
            row += f"  {res['python'][0] / res['cython'][0]:8.1f}x  {same(res['cython'][1], res['python'][1])}"
        print(row)


if __name__ == "__main__":
    main()
