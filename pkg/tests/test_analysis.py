import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from reflectwalk import analysis as an
from reflectwalk import domain as dm
from reflectwalk.grid import build_cube_complex
from reflectwalk.walk import WalkConfig


def images_kernel(t, x, y, L, d=1, terms=30):
    """Neumann kernel on (0, L) by the method of images; variance t/d per axis."""
    var = t / d
    n = np.arange(-terms, terms + 1)
    g = lambda z: np.exp(-z ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    return float(np.sum(g(y - x + 2 * n * L) + g(y + x + 2 * n * L)))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.001, 0.5), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from([1, 2, 3]))
def test_cosine_series_matches_images(t, x, y, d):
    o = an.HeatKernelOracle((1.0,), speed_dim=d)
    val, bound = o.axis_density(t, np.array([x]), np.array([y]))
    ref = images_kernel(t, x, y, 1.0, d)
    assert abs(float(np.ravel(val)[0]) - ref) <= 1e-9 * max(1.0, ref)
    assert float(np.ravel(bound)[0]) < 1e-10


def test_kernel_normalised_and_symmetric():
    o = an.HeatKernelOracle((1.0,))
    for t in (0.01, 0.1, 1.0):
        total, _ = integrate.quad(lambda y: float(np.ravel(o.density(t, [0.3], [y])[0])[0]), 0, 1,
                                  points=[0.3], limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)
    a = np.ravel(o.density(0.05, [0.2], [0.7])[0])[0]
    b = np.ravel(o.density(0.05, [0.7], [0.2])[0])[0]
    assert a == pytest.approx(b, rel=1e-12)


def test_chapman_kolmogorov():
    o = an.HeatKernelOracle((1.0,))
    s, t, x, y = 0.03, 0.05, 0.2, 0.65

    def p(tt, a, b):
        return float(np.ravel(o.density(tt, [a], [b])[0])[0])

    lhs, _ = integrate.quad(lambda z: p(s, x, z) * p(t, z, y), 0, 1, limit=200, epsabs=1e-12)
    assert lhs == pytest.approx(p(s + t, x, y), abs=1e-6)


def test_bin_masses_integrate_density():
    o = an.HeatKernelOracle((1.0, 1.0), speed_dim=2)
    edges = [np.array([0, 0.3, 0.55, 1.0]), np.array([0, 0.5, 1.0])]
    masses = o.bin_masses(0.05, np.array([0.4, 0.6]), edges)
    assert masses.shape == (3, 2)
    assert masses.sum() == pytest.approx(1.0, abs=1e-12)
    ax0 = o.axis_bin_masses(0.05, 0.4, edges[0], axis=0)
    ref = [integrate.quad(lambda y: float(np.ravel(o.axis_density(0.05, np.array([0.4]), np.array([y]))[0])[0]),
                          a, b)[0] for a, b in zip(edges[0][:-1], edges[0][1:])]
    assert np.allclose(ax0, ref, atol=1e-10)


def test_exit_oracle():
    o = an.BoxExitOracle((0.25,), (0.75,), (0.5,))
    assert o.mean_series() == pytest.approx(0.0625, rel=1e-6)
    assert o.mean_closed_form_1d() == pytest.approx(0.0625)
    assert float(np.ravel(o.survival(0.0))[0]) == pytest.approx(1.0, abs=1e-6)
    s = np.ravel(o.survival(np.array([0.01, 0.05, 0.2])))
    assert np.all(np.diff(s) < 0)
    # generator (1/4) Laplacian in 2-D: mean exit from the slab doubles
    o2 = an.BoxExitOracle((0.25,), (0.75,), (0.4,), speed_dim=2)
    assert o2.mean_closed_form_1d() == pytest.approx(2 * 0.15 * 0.35)
    assert o2.mean_series() == pytest.approx(2 * 0.15 * 0.35, rel=1e-6)


def test_snapped_edges():
    h = 1 / 32
    e = an.snapped_bin_edges(0.0, 1.0, 20, h)
    assert e[0] == 0 and e[-1] == 1
    inner = e[1:-1] / h - 0.5
    assert np.allclose(inner, np.round(inner))
    assert np.all(np.abs(e[1:-1] - np.linspace(0, 1, 21)[1:-1]) <= h / 2 + 1e-15)
    with pytest.raises(ValueError):
        an.snapped_bin_edges(0.0, 1.0, 20, 1 / 16)


def test_total_variation():
    assert an.total_variation([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.5)
    assert an.total_variation([0.2, 0.8], [0.2, 0.8]) == 0.0


def test_marginal_small(interval):
    g = build_cube_complex(interval, 5)
    cfg = WalkConfig(5, 0.1, replicas=20000, seed=3, start_vertex=g.nearest_vertex([0.5]))
    mc = an.marginal_test(g, cfg, an.HeatKernelOracle((1.0,)), 0.1, 10)
    assert mc.total_variation < 0.04
    d = mc.to_dict()
    assert d["referenceKind"] == "neumannKernel"
    assert len(d["empirical"]) == 10


def test_marginal_geometry_checked(interval):
    g = build_cube_complex(interval, 4)
    cfg = WalkConfig(4, 0.1, start_vertex=7)
    with pytest.raises(ValueError):
        an.marginal_test(g, cfg, an.HeatKernelOracle((2.0,)), 0.1, 5)
    disk_g = build_cube_complex(dm.BallDomain.create(1.0), 3)
    with pytest.raises(ValueError):
        an.marginal_test(disk_g, WalkConfig(3, 0.1), an.HeatKernelOracle((1.0, 1.0)), 0.1, 4)


def test_stationary_marginal(unit_square):
    g = build_cube_complex(unit_square, 4)
    cfg = WalkConfig(4, 0.05, replicas=20000, seed=1, start_mode="stationary")
    mc = an.stationary_marginal_test(g, cfg, 0.05, 4)
    assert mc.total_variation < 4 * mc.noise_level + 0.005


def test_discipline_comparison_small(interval):
    g = build_cube_complex(interval, 4)
    cfg = WalkConfig(4, 0.1, replicas=20000, seed=5, start_vertex=g.nearest_vertex([0.5]))
    rep = an.discipline_comparison(g, cfg, 0.1, 8)
    assert rep["totalVariation"] < 0.04


def test_occupation_small(square_k2):
    cfg = WalkConfig(2, 2 ** 14 / 16, replicas=4, seed=2, start_mode="stationary")
    rep = an.occupation_test(square_k2, cfg)
    assert rep["steps"] == 4 * 2 ** 14
    assert rep["totalVariation"] < 0.02
    assert rep["maxAbsZ"] < 4.5
    assert sum(rep["forward"]) + sum(rep["backward"]) == rep["steps"]


def test_crevice_geometric_channels_invisible_to_cubes():
    spec = dm.comb_domain(dm.CombParams.geometric(4.0, 3))
    rep = an.crevice_penetration(spec, 3)
    assert rep["cubeBased"]["creviceVertices"] == 0


def test_crevice_one_step_channels():
    spec = dm.comb_domain(dm.CombParams.constant(2.0 ** -5, 3))
    rep = an.crevice_penetration(spec, 5)
    assert rep["edgeBased"]["creviceVertices"] >= 1
    assert rep["cubeBased"]["creviceVertices"] == 0


def test_crevice_wide_channel_entered_by_both():
    spec = dm.comb_domain(dm.CombParams((0.25,)))
    rep = an.crevice_penetration(spec, 5)
    assert rep["edgeBased"]["creviceVertices"] >= 1
    assert rep["cubeBased"]["creviceVertices"] >= 1
    assert 0 < rep["cubeBased"]["creviceMass"] < 1


def test_exit_time_small(interval):
    g = build_cube_complex(interval, 5)
    rep = an.exit_time_test(g, WalkConfig(5, 1.0, replicas=5000, seed=1), [0.25], [0.75])
    assert rep["exited"] == 5000
    assert abs(rep["relError"]) < 0.08
    assert rep["ksDistance"] < 0.1


def test_mean_square_displacement(unit_square):
    g = build_cube_complex(unit_square, 5)
    # 16 steps from the centre cannot reach the boundary, so E|X_t - X_0|^2 = 16 h^2 = t
    cfg = WalkConfig(5, 1 / 64, replicas=2000, start_vertex=g.nearest_vertex([0.5, 0.5]))
    assert an.mean_square_displacement(g, cfg, 1 / 64) == pytest.approx(1 / 64, rel=0.1)
    cfg = WalkConfig(5, 1 / 1024, replicas=20, start_vertex=g.nearest_vertex([0.5, 0.5]))
    assert an.mean_square_displacement(g, cfg, 1 / 1024) == pytest.approx(1 / 1024)
