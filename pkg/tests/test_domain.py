import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from reflectwalk import domain as dm
from reflectwalk.domain import contains_point, cube_clearance


def brute_clearance(spec, lo, h, n=41):
    """Sampled distance from a cube to the complement of the domain.

    Samples the cube's faces densely and measures the distance to the
    nearest sampled non-member point in a surrounding window.  Returns an
    upper bound on the true clearance (up to the sampling step).
    """
    lo = np.asarray(lo, float)
    pad = 0.8
    axes = [np.linspace(a - pad, a + h + pad, 161) for a in lo]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, lo.size)
    outside = mesh[~spec.contains(mesh)]
    face = np.stack(np.meshgrid(*[np.linspace(a, a + h, n) for a in lo], indexing="ij"),
                    -1).reshape(-1, lo.size)
    if outside.size == 0:
        return math.inf
    return float(cKDTree(outside).query(face)[0].min())


class TestRectangle:
    def test_membership_is_open(self, unit_square):
        assert contains_point(unit_square, (0.5, 0.5))
        assert not contains_point(unit_square, (0.0, 0.5))
        assert not contains_point(unit_square, (1.0, 1.0))

    def test_clearance_values(self, unit_square):
        assert cube_clearance(unit_square, (1, 1), 2) == pytest.approx(0.25)
        assert cube_clearance(unit_square, (0, 1), 2) == 0.0
        assert cube_clearance(unit_square, (5, 5), 2) == 0.0

    def test_any_dimension(self):
        cube = dm.RectangleDomain.create((0, 0, 0), (1, 2, 3))
        assert cube.dimension == 3
        assert cube.base_point == (0.5, 1.0, 1.5)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            dm.RectangleDomain.create((0, 0), (0, 1))
        with pytest.raises(ValueError):
            dm.RectangleDomain.create((0, 0), (1, 1), base_point=(2, 2))
        with pytest.raises(ValueError):
            contains_point(dm.RectangleDomain.create((0, 0), (1, 1)), (0.5,))


class TestDisk:
    def test_corner_cube_clearance(self, disk):
        assert cube_clearance(disk, (0, 0), 1) == pytest.approx(1 - math.sqrt(0.5))

    def test_clearance_against_sampling(self, disk):
        for cube in [(0, 0), (-2, 1), (-1, -1), (2, -1)]:
            c = cube_clearance(disk, cube, 2)
            ref = brute_clearance(disk, np.array(cube) * 0.25, 0.25)
            assert c <= ref + 1e-12
            assert c >= ref - 0.02


class TestCuts:
    def test_slit_removes_segment(self):
        sd = dm.slit_disk()
        assert not contains_point(sd, (-0.5, 0.0))
        assert not contains_point(sd, (0.0, 0.0))
        assert contains_point(sd, (-0.5, 1e-9))
        assert contains_point(sd, (0.5, 0.0))

    def test_slit_clearance_is_distance_to_cut(self):
        sd = dm.slit_disk()
        # cube [-0.5,-0.25] x [0.25,0.5] sits 0.25 above the slit
        assert cube_clearance(sd, (-2, 1), 2) == pytest.approx(0.25)

    def test_lattice_segment_crossing_slit(self):
        sd = dm.slit_disk()
        ok = sd.lattice_edges_inside(np.array([[-0.5, -0.25], [0.25, -0.25]]), axis=1, h=0.5)
        assert ok.tolist() == [False, True]

    def test_comb_geometry(self, comb_geometric):
        c = comb_geometric
        # inside the first channel (n=2): (-1/2,1/2) x (1/2, 1/2 + 1/16)
        assert contains_point(c, (0.0, 0.53))
        assert contains_point(c, (-0.4, 0.53))
        # the wall outside every channel
        assert not contains_point(c, (0.0, 0.9))
        # slit faces are removed
        assert not contains_point(c, (0.2, 0.5))
        assert len(c.crevices()) == 3

    def test_comb_validation(self):
        with pytest.raises(ValueError):
            dm.CombParams((0.6,)).validate()
        with pytest.raises(ValueError):
            dm.CombParams((0.1, 0.3)).validate()
        dm.CombParams.geometric(2.0, 5).validate()


class TestPolygon:
    def test_square_with_hole(self):
        outer = [(0, 0), (4, 0), (4, 4), (0, 4)]
        hole = [(1, 1), (1, 3), (3, 3), (3, 1)]
        p = dm.PolygonDomain.create([outer, hole], base_point=(0.5, 0.5))
        assert contains_point(p, (0.5, 2))
        assert not contains_point(p, (2, 2))
        assert not contains_point(p, (0, 2))
        assert cube_clearance(p, (0, 0), 1) == 0.0
        # [0.5, 0.75]^2 is closest to the hole corner (1, 1)
        assert cube_clearance(p, (2, 2), 2) == pytest.approx(math.sqrt(2) / 4)

    def test_orientation_checked(self):
        with pytest.raises(ValueError):
            dm.PolygonDomain.create([[(0, 0), (0, 1), (1, 1), (1, 0)]])

    def test_from_json(self):
        p = dm.polygon_from_json(json.dumps({"loops": [[[0, 0], [2, 0], [2, 2], [0, 2]]]}))
        assert contains_point(p, (1, 1))

    def test_koch_vertices(self):
        for level in range(4):
            v = dm.koch_snowflake_vertices(level)
            assert len(v) == 3 * 4 ** level
            area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
            assert area > 0
        # area grows towards 8/5 of the triangle
        tri = 3 * math.sqrt(3) / 4
        v = dm.koch_snowflake_vertices(6)
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        assert area == pytest.approx(1.6 * tri, rel=1e-2)


def test_implicit_domain_lower_bound(disk):
    imp = dm.ImplicitDomain.create(lambda x: 1 - np.linalg.norm(x, axis=1), 1.0,
                                   (-1, -1), (1, 1), (0, 0))
    rng = np.random.default_rng(0)
    cubes = rng.integers(-4, 4, size=(50, 2))
    exact = disk.cube_clearances(cubes * 0.25, 0.25)
    bound = imp.cube_clearances(cubes * 0.25, 0.25)
    assert np.all(bound <= exact + 1e-12)


@pytest.mark.parametrize("name,params", [
    ("rectangle", {}), ("disk", {"radius": 2}), ("slitDisk", {}), ("kochPrefractal", {"level": 2}),
    ("comb", {"geometricBase": 4, "channelCount": 2}), ("comb", {"channelWidths": [0.1]}),
    ("comb", {"constantWidth": 0.05, "channelCount": 3}),
    ("polygon", {"loops": [[[0, 0], [1, 0], [0, 1]]], "basePoint": [0.2, 0.2]}),
])
def test_builtins(name, params):
    spec = dm.make_builtin_domain(name, params)
    assert contains_point(spec, spec.base_point)
    assert name in dm.BUILTIN_DOMAINS


def test_unknown_builtin():
    with pytest.raises(ValueError):
        dm.make_builtin_domain("torus")


# --- properties ---------------------------------------------------------------------------

shapes = st.sampled_from(["rectangle", "disk", "slitDisk", "comb"])


def _spec(name):
    if name == "comb":
        return dm.comb_domain(dm.CombParams.geometric(4.0, 2))
    return dm.make_builtin_domain(name)


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(-8, 7), st.integers(-8, 7), st.integers(1, 4))
def test_clearance_monotone_under_subdivision(name, i, j, k):
    spec = _spec(name)
    parent = cube_clearance(spec, (i, j), k)
    for di in (0, 1):
        for dj in (0, 1):
            child = cube_clearance(spec, (2 * i + di, 2 * j + dj), k + 1)
            assert child >= parent - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["rectangle", "disk"]), st.integers(-4, 3), st.integers(-4, 3))
def test_clearance_matches_sampling_oracle(name, i, j):
    spec = _spec(name)
    h = 0.25
    c = cube_clearance(spec, (i, j), 2)
    ref = brute_clearance(spec, np.array([i, j]) * h, h, n=21)
    # sampling overestimates distance by at most about one mesh step
    assert c <= ref + 1e-9
    if c > 0:
        assert c >= ref - 0.02


@settings(max_examples=40, deadline=None)
@given(shapes, st.integers(-8, 7), st.integers(-8, 7), st.integers(1, 3))
def test_positive_clearance_means_cube_inside(name, i, j, k):
    spec = _spec(name)
    if cube_clearance(spec, (i, j), k) > 0:
        h = 2.0 ** -k
        t = np.linspace(0, 1, 9)
        pts = (np.stack(np.meshgrid(t, t, indexing="ij"), -1).reshape(-1, 2) + (i, j)) * h
        assert spec.contains(pts).all()
