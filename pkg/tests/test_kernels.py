"""The compiled kernels and the numpy fallback must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest

from reflectwalk import _backend
from reflectwalk.domain import BallDomain, RectangleDomain
from reflectwalk.grid import build_cube_complex

py = _backend.load("python")
cy = _backend.load("cython") if "cython" in _backend.available() else None
needs_cython = pytest.mark.skipif(cy is None, reason="compiled extension not built")


@pytest.fixture(scope="module")
def disk_grid():
    return build_cube_complex(BallDomain.create(1.0), 5)


@pytest.mark.parametrize("impl", [py] + ([cy] if cy else []), ids=lambda m: m.__name__)
def test_walk_path_follows_rule(impl, disk_grid):
    g = disk_grid
    u = np.random.default_rng(0).random(500)
    path = np.asarray(impl.walk_path(g.indptr, g.indices, np.int32(3), u))
    assert path[0] == 3
    for j, (a, b) in enumerate(zip(path[:-1], path[1:])):
        nb = g.neighbors(a)
        assert b == nb[int(u[j] * len(nb))]


@needs_cython
def test_walk_path_equal(disk_grid):
    g = disk_grid
    u = np.random.default_rng(1).random(2000)
    assert np.array_equal(cy.walk_path(g.indptr, g.indices, np.int32(10), u),
                          py.walk_path(g.indptr, g.indices, np.int32(10), u))


@needs_cython
def test_walk_record_equal(disk_grid):
    g = disk_grid
    rng = np.random.default_rng(2)
    U = rng.random((64, 300))
    starts = rng.integers(0, g.n_vertices, 64).astype(np.int32)
    record = np.sort(rng.integers(0, 301, size=(64, 5)), axis=1).astype(np.int64)
    assert np.array_equal(cy.walk_record(g.indptr, g.indices, starts, U, record),
                          py.walk_record(g.indptr, g.indices, starts, U, record))


@needs_cython
def test_exit_walk_equal(disk_grid):
    g = disk_grid
    rng = np.random.default_rng(3)
    inside = (np.linalg.norm(g.positions, axis=1) < 0.4).astype(np.uint8)
    cand = np.flatnonzero(inside)
    starts = rng.choice(cand, 100).astype(np.int32)
    U = rng.random((100, 200))
    s1, l1 = cy.exit_walk(g.indptr, g.indices, starts, U, inside)
    s2, l2 = py.exit_walk(g.indptr, g.indices, starts, U, inside)
    assert np.array_equal(s1, s2)
    assert np.array_equal(l1, l2)
    assert (np.asarray(s1) == -1).any() and (np.asarray(s1) >= 0).any()


@needs_cython
def test_flood_fill_equal():
    rng = np.random.default_rng(4)
    for shape in [(40, 40), (12, 12, 12), (100,)]:
        mask = rng.random(shape) < 0.6
        seeds = np.argwhere(mask)[:3].astype(np.int64)
        a = np.asarray(cy.flood_fill(mask, seeds), dtype=bool)
        b = np.asarray(py.flood_fill(mask, seeds), dtype=bool)
        assert np.array_equal(a, b)


def test_pure_python_switch_gives_identical_results(tmp_path):
    """Whole-pipeline check: forcing the fallback leaves results unchanged."""
    code = (
        "import numpy as np, reflectwalk as rw\n"
        "from reflectwalk.grid import build_cube_complex\n"
        "from reflectwalk.walk import WalkConfig, ensemble_discrete\n"
        "g = build_cube_complex(rw.RectangleDomain.create((0,0),(1,1)), 4)\n"
        "ids = ensemble_discrete(g, WalkConfig(4, 0.1, replicas=30, seed=7, start_mode='stationary'), [5, 25])\n"
        "print(rw.BACKEND, g.fingerprint, ids.sum(), ids[:, 1].tolist()[:10])\n"
    )
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, REFLECTWALK_PURE_PYTHON=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                             check=True)
        out[flag] = res.stdout.split(" ", 1)
    assert out["1"][0] == "python"
    assert out["0"][1] == out["1"][1]
