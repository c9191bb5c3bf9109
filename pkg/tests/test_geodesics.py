import math

import numpy as np
import pytest

from conftest import flat_wind
from oracles import randers_geodesic
from windfield.geodesics import (
    boundary_geodesic,
    exceptional_test,
    flag_curvature_deviation,
    geodesic_ivp,
    navigate,
)
from windfield.geometry import DomainError
from windfield.models import StereoChart, make_model
from windfield.wrs import Admissible, admissible, reverse, speeds, tangent, wind_curve_check

O = np.zeros(2)


def const(c):
    return flat_wind(lambda p: c)


def unit(wd, p, v):
    v = np.asarray(v, dtype=float)
    return v / speeds(wd, tangent(p, v))[0]


def still_sphere():
    return make_model("sphere_killing", {"A": np.zeros((3, 3)).tolist()})


def test_flat_line_case_one():
    c = geodesic_ivp(const([0, 0]), O, [1.0, 0.0], 2.0, t_eval=np.linspace(0, 2, 5))
    assert c.meta["case"] == 1
    assert np.allclose(c.points, np.column_stack([np.linspace(0, 2, 5), np.zeros(5)]), atol=1e-12)


def test_sphere_geodesic_is_great_circle():
    wd = still_sphere()
    p = np.array([0.2, -0.1])
    v = unit(wd, p, [0.3, 1.0])
    c = geodesic_ivp(wd, p, v, 2.5, t_eval=np.linspace(0, 2.5, 50))
    ch = StereoChart(2, 1.0)
    X = np.array([ch.embed(x) for x in c.points])
    normal = np.cross(X[0], X[10])
    assert np.max(np.abs(X @ normal / np.linalg.norm(normal))) < 1e-8
    # unit speed: ambient arc length equals t
    assert math.acos(np.clip(X[0] @ X[-1], -1, 1)) == pytest.approx(2.5, abs=1e-8)
    assert c.meta["case"] == 1


def test_strong_cone_launch_is_case_four_line():
    wd = const([2.0, 0.0])
    v = unit(wd, O, [math.sqrt(3), 1.0])
    assert admissible(wd, tangent(O, v)) is Admissible.CONE
    c = geodesic_ivp(wd, O, v, 1.0, t_eval=np.linspace(0, 1, 11))
    assert c.meta["case"] == 4
    assert np.allclose(c.points, np.outer(np.linspace(0, 1, 11), v), atol=1e-12)
    for x, u in zip(c.points, c.velocities):
        f, fl = speeds(wd, tangent(x, u))
        assert f == pytest.approx(1.0, abs=1e-9) and fl == pytest.approx(1.0, abs=1e-9)


def test_concave_launch_is_case_two():
    wd = const([2.0, 0.0])
    c = geodesic_ivp(wd, O, [1.0, 0.0], 1.0)
    assert c.meta["case"] == 2


def test_geodesic_ivp_rejects_bad_vectors():
    with pytest.raises(DomainError):
        geodesic_ivp(const([2.0, 0]), O, [-1.0, 0.0], 1.0)
    with pytest.raises(DomainError):
        geodesic_ivp(const([0, 0]), O, [2.0, 0.0], 1.0)


def test_case_one_conserves_speed():
    wd = make_model("figure3")
    p = np.array([0.5, 0.0])
    c = geodesic_ivp(wd, p, unit(wd, p, [0.3, 1.0]), 2.0, t_eval=np.linspace(0, 2, 41))
    assert max(abs(speeds(wd, tangent(x, u))[0] - 1) for x, u in zip(c.points, c.velocities)) < 1e-8


def test_reversed_geodesic_solves_reverse_structure():
    wd = make_model("sphere_killing")
    p = np.array([0.3, 0.1])
    c = geodesic_ivp(wd, p, unit(wd, p, [1.0, 0.4]), 1.0, t_eval=np.linspace(0, 1, 21))
    rev = reverse(wd)
    back = geodesic_ivp(rev, c.points[-1], -c.velocities[-1], 1.0, t_eval=np.linspace(0, 1, 21))
    assert np.max(np.linalg.norm(back.points[::-1] - c.points, axis=1)) < 1e-6
    assert back.meta["case"] == 1


@pytest.mark.parametrize(
    "name,params,p",
    [
        ("euclidean_parallel", {}, [0.1, 0.2]),
        ("hyperbolic", {}, [0.3, 1.2]),
        ("sphere_killing", {}, [0.4, -0.3]),
        ("flat_homothetic", {"mu": 0.2}, [0.5, 0.3]),
        ("figure3", {}, [0.7, 0.1]),
    ],
)
def test_matches_randers_euler_lagrange(name, params, p):
    wd = make_model(name, params)
    p = np.array(p)
    v = unit(wd, p, np.random.default_rng(len(name)).standard_normal(2))
    ts = np.linspace(0, 1, 21)
    c = geodesic_ivp(wd, p, v, 1.0, t_eval=ts)
    assert np.max(np.linalg.norm(c.points - randers_geodesic(wd, p, v, ts), axis=1)) < 1e-6


def test_boundary_geodesic_constant_strong_wind():
    wd = const([2.0, 0.0])
    ts = np.linspace(0, 1, 11)
    c = boundary_geodesic(wd, O, [math.sqrt(3), 1.0], 1.0, c=0.7, t_eval=ts)
    direction = np.array([math.sqrt(3), 1.0]) / 2.0
    assert np.max(np.abs(c.points[:, 0] * direction[1] - c.points[:, 1] * direction[0])) < 1e-12
    assert c.meta["case"] == 4
    for x, u in zip(c.points, c.velocities):
        assert speeds(wd, tangent(x, u))[0] == pytest.approx(0.7, abs=1e-9)


def test_boundary_geodesic_matches_spacetime_route():
    wd = make_model("flat_homothetic")  # W = x, strong outside the unit circle
    p = np.array([2.0, 0.0])
    v = np.array([1.5, math.sqrt(0.75)])
    ts = np.linspace(0, 0.5, 11)
    direct = boundary_geodesic(wd, p, v, 0.5, t_eval=ts)
    lifted = geodesic_ivp(wd, p, v, 0.5, t_eval=ts)
    assert lifted.meta["case"] == 4
    assert np.max(np.linalg.norm(direct.points - lifted.points, axis=1)) < 1e-6
    assert direct.meta["speed_drift"] < 1e-8


def test_boundary_geodesic_preconditions():
    with pytest.raises(DomainError):
        boundary_geodesic(const([0.5, 0]), O, [1.0, 0.0], 1.0)
    with pytest.raises(DomainError):
        boundary_geodesic(const([2.0, 0]), O, [1.0, 0.0], 1.0)


def test_exceptional_points():
    assert not exceptional_test(const([0.5, 0.0]), [0.3, 0.4])
    assert exceptional_test(const([1.0, 0.0]), [0.3, 0.4])
    wd = make_model("figure3")
    assert exceptional_test(wd, [3.0, 0.7])
    assert exceptional_test(wd, [-3.0, -1.0])
    assert not exceptional_test(wd, [1.0, 0.0])


@pytest.mark.parametrize(
    "wd,p,expected",
    [
        (make_model("sphere_killing", {"A": np.zeros((3, 3)).tolist()}), [0.2, 0.1], 1.0),
        (make_model("euclidean_parallel"), [0.0, 0.0], 0.0),
        (make_model("flat_homothetic"), [0.3, 0.1], -0.25),
    ],
)
def test_flag_curvature_estimates(wd, p, expected):
    p = np.array(p)
    est = flag_curvature_deviation(wd, p, unit(wd, p, [0.2, 1.0]), [1.0, 0.0])
    assert est.kappa == pytest.approx(expected, abs=0.02)
    assert est.stderr >= 0


def test_flag_curvature_rejects_parallel_transverse():
    wd = const([0.5, 0.0])
    with pytest.raises(ValueError):
        flag_curvature_deviation(wd, O, unit(wd, O, [1.0, 0.0]), [2.0, 0.0])


def test_navigate_flat():
    res = navigate(const([0, 0]), O, [0.0, 1.0])
    assert res.status == "Optimal" and res.time == pytest.approx(1.0, abs=1e-8)


def test_navigate_constant_wind_and_sandwich():
    wd = const([0.5, 0.0])
    res = navigate(wd, O, [0.0, 1.0])
    assert res.status == "Optimal"
    assert res.time == pytest.approx(2 / math.sqrt(3), abs=1e-8)
    assert np.allclose(res.meta["heading"], [-0.5, math.sqrt(0.75)], atol=1e-6)
    rep = wind_curve_check(wd, res.curve, tol=1e-8)
    assert rep.ok
    assert rep.lengths[0] - 1e-6 <= res.time <= rep.lengths[1] + 1e-6


def test_navigate_strong_wind_unreachable():
    res = navigate(const([2.0, 0.0]), O, [-1.0, 0.0])
    assert res.status == "Unreachable" and res.time == math.inf


def test_navigate_still_air_sphere_is_riemannian_distance():
    wd = still_sphere()
    p, q = np.array([0.1, 0.2]), np.array([-0.5, 0.4])
    ch = StereoChart(2, 1.0)
    res = navigate(wd, p, q)
    assert res.time == pytest.approx(math.acos(ch.embed(p) @ ch.embed(q)), abs=1e-4)


def test_navigate_still_air_hyperbolic_is_riemannian_distance():
    p, q = np.array([0.0, 1.0]), np.array([1.0, 2.0])
    d = math.acosh(1 + (p - q) @ (p - q) / (2 * p[1] * q[1]))
    assert navigate(make_model("hyperbolic"), p, q).time == pytest.approx(d, abs=1e-4)


def test_navigate_same_point_and_dimension_guard():
    assert navigate(const([0.5, 0]), O, O).time == 0.0
    with pytest.raises(ValueError):
        navigate(make_model("example_ex1"), [0.2], [0.3])
