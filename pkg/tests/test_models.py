import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windfield.geometry import geodesic_defect, lie_derivative_metric, norm
from windfield.models import (
    StereoChart,
    ex1_interval,
    ex1_wind,
    example_ex1,
    figure3,
    figure3_wind,
    get_spec,
    list_models,
    make_model,
    recenter_sphere,
    sample_points,
)
from windfield.wrs import Region, region_at, speeds, tangent


def test_catalog_size_and_keys():
    specs = list_models()
    assert len(specs) >= 8
    assert len({s.key for s in specs}) == len(specs)
    assert get_spec("example_ex1").notes.startswith("g_R incomplete")
    with pytest.raises(KeyError):
        get_spec("nope")


def test_every_model_has_positive_definite_metric(rng):
    for spec in list_models():
        wd = spec.build()
        assert wd.meta["name"] == spec.name
        for p in sample_points(wd, spec.box, 10, rng):
            g = wd.g(p)
            assert np.max(np.abs(g - g.T)) <= 1e-14
            assert np.linalg.eigvalsh(g)[0] > 0


def test_make_model_errors():
    with pytest.raises(KeyError):
        make_model("no_such_model")
    with pytest.raises(ValueError):
        make_model("euclidean_parallel", {"bogus": 1})
    with pytest.raises(ValueError, match="even dimension"):
        make_model("odd_sphere_hopf", {"n": 2})
    with pytest.raises(ValueError):
        make_model("hyperbolic", {"k": 1.0})


def test_parallel_lambda():
    wd = make_model("euclidean_parallel", {"c": [0.5, 0.0]})
    for p in ([0, 0], [5, -3], [-100, 7]):
        assert wd.Lambda(p) == pytest.approx(0.75, abs=1e-15)


def test_hopf_field_is_unit_and_geodesic(rng):
    for r in (1.0, 2.0):
        wd = make_model("odd_sphere_hopf", {"m": 1, "r": r})
        for p in rng.uniform(-1.5, 1.5, (100, 3)):
            assert norm(wd.space, p, wd.W(p)) == pytest.approx(1.0, abs=1e-10)
        for p in rng.uniform(-1.5, 1.5, (10, 3)):
            assert geodesic_defect(wd.space, wd.wind, p) < 1e-7


def test_flat_homothetic_lie_derivative_exact(rng):
    A = [[0.0, -0.3], [0.3, 0.0]]
    wd = make_model("flat_homothetic", {"mu": 0.8, "A": A})
    for p in rng.uniform(-3, 3, (5, 2)):
        assert np.max(np.abs(lie_derivative_metric(wd.space, wd.wind, p) - 1.6 * np.eye(2))) < 1e-12


def test_figure3_region_census():
    wd = figure3()
    regions = {region_at(wd, [x, 0.0]).region for x in np.linspace(-8, 8, 1601)}
    assert Region.STRONG not in regions
    assert region_at(wd, [3.0, 0.0]).region is Region.CRITICAL
    assert region_at(wd, [-3.0, 0.0]).region is Region.CRITICAL
    assert region_at(wd, [2.9, 0.0]).region is Region.MILD


def test_figure3_wind_profile():
    assert figure3_wind(3.0)[0] == pytest.approx(-1.0)
    assert figure3_wind(-3.0)[0] == pytest.approx(1.0)
    assert figure3_wind(6.0) == (0.0, 0.0)
    # continuous at the joints
    for x in (3.0, 6.0, -3.0, -6.0):
        assert figure3_wind(x - 1e-9)[0] == pytest.approx(figure3_wind(x + 1e-9)[0], abs=1e-8)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10))
def test_figure3_wind_bounded_with_consistent_derivative(x):
    f, df = figure3_wind(x)
    assert abs(f) <= 1.0
    if abs(abs(x) - 3) > 1e-3 and abs(abs(x) - 6) > 1e-3:
        h = 1e-6
        assert df == pytest.approx((figure3_wind(x + h)[0] - figure3_wind(x - h)[0]) / (2 * h), abs=1e-5)


@pytest.mark.parametrize("k", range(4))
def test_ex1_speeds_on_plateaus(k):
    wd = example_ex1()
    lo, hi = ex1_interval(4 * k)
    x = np.array([0.5 * (lo + hi)])
    assert speeds(wd, tangent(x, [1.0]))[0] == pytest.approx(2.0 ** (4 * k + 1), rel=1e-12)
    lo, hi = ex1_interval(4 * k + 2)
    x = np.array([0.5 * (lo + hi)])
    assert speeds(wd, tangent(x, [-1.0]))[0] == pytest.approx(2.0 ** (4 * k + 3), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 2.0))
def test_ex1_wind_strictly_mild(x):
    assert abs(ex1_wind(x)[0]) < 1.0


def test_ex1_is_smooth_across_interval_ends():
    for j in range(1, 8):
        lo, hi = ex1_interval(j)
        for x in (lo, hi):
            left, right = ex1_wind(x * (1 - 1e-12)), ex1_wind(x * (1 + 1e-12))
            assert left[0] == pytest.approx(right[0], abs=1e-9)


def test_recenter_sphere_moves_point_to_origin():
    A = [[0, -0.5, 0.2], [0.5, 0, 0], [-0.2, 0, 0]]
    u = np.array([6.0, -3.0])
    wd, phi = recenter_sphere(2, 1.0, A, u)
    assert np.allclose(phi(u), 0.0, atol=1e-12)
    ch = StereoChart(2, 1.0)
    assert np.linalg.norm(ch.embed(phi([0.1, 0.2]))) == pytest.approx(1.0)
    assert wd.space.contains(phi(u))


def test_sample_points_respect_domain(rng):
    wd = make_model("punctured_plane")
    pts = sample_points(wd, ((0.8, -0.2), (1.2, 0.2)), 20, rng)
    assert all(wd.space.contains(p) for p in pts)
    with pytest.raises(RuntimeError):
        sample_points(wd, ((0.99, -0.01), (1.01, 0.01)), 5, rng, max_tries=200)
