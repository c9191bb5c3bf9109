import math

import numpy as np
import pytest

from conftest import flat_wind
from windfield.geodesics import navigate
from windfield.models import example_ex1, figure3, make_model
from windfield.reachability import (
    ArrivalField,
    GridSpec,
    ball_inclusion_report,
    forward_ball,
    hausdorff,
    precompactness_probe,
)

BOX = ((-2.5, -2.5), (2.5, 2.5))


def const(c):
    return flat_wind(lambda p: c)


def ball(wd, p0, r, box=BOX, res=65, **kw):
    return forward_ball(wd, p0, r, GridSpec.auto(wd, box, res), **kw)


def front(field: ArrivalField) -> np.ndarray:
    """Nodes of the closed ball that touch a node outside it."""
    inside = field.closed_ball()
    pad = np.pad(inside, 1, constant_values=False)
    interior = np.ones_like(inside)
    for axis in range(inside.ndim):
        for shift in (-1, 1):
            interior &= np.roll(pad, shift, axis=axis)[1:-1, 1:-1]
    return field.grid.nodes()[inside & ~interior]


def disc_front(center, r, n=2000):
    a = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.asarray(center) + r * np.column_stack([np.cos(a), np.sin(a)])


@pytest.mark.parametrize("w", [(0.0, 0.0), (0.5, 0.0), (2.0, 0.0)])
def test_constant_wind_ball_is_translated_disc(w):
    f = ball(const(list(w)), [0.0, 0.0], 1.0, box=((-3.5, -3.5), (3.5, 3.5)), res=91)
    cell = float(f.grid.cell[0])
    assert hausdorff(front(f), disc_front(w, 1.0)) < 2 * cell
    assert f.closed_ball()[f.grid.index_of([0.0, 0.0])] == (w[0] < 1.0)


def test_grid_spec_validation_and_cfl():
    wd = const([0.5, 0.0])
    with pytest.raises(ValueError):
        GridSpec(BOX, 2, 0.1)
    with pytest.raises(ValueError):
        GridSpec(((0, 0), (0, 1)), 10, 0.1)
    with pytest.raises(ValueError, match="CFL"):
        forward_ball(wd, [0, 0], 1.0, GridSpec(BOX, 65, 1.0))
    with pytest.raises(ValueError):
        forward_ball(wd, [3.0, 0.0], 1.0, GridSpec.auto(wd, BOX, 65))
    g = GridSpec.auto(wd, BOX, 65)
    assert g.dt <= 0.5 * g.cell[0] / 1.5 * (1 + 1e-12)


def test_times_nonnegative_and_center_first():
    f = ball(const([0.5, 0.0]), [0.0, 0.0], 1.0)
    finite = f.times[np.isfinite(f.times)]
    assert np.all(finite >= 0)
    assert f.time_at([0.0, 0.0]) == 0.0


def test_mild_balls_are_nested():
    wd = const([0.5, 0.0])
    rep = ball_inclusion_report(ball(wd, [0, 0], 0.5), ball(wd, [0, 0], 1.0))
    assert rep.ok and rep.monotone_violations == 0


def test_strong_wind_balls_are_not_nested():
    # the object cannot stand still, so the exact-time ball drifts off its own centre
    wd = const([2.0, 0.0])
    rep = ball_inclusion_report(ball(wd, [0, 0], 0.5), ball(wd, [0, 0], 1.0))
    assert rep.open_in_closed
    assert not rep.monotone and rep.monotone_violations > 0


def test_inclusion_report_argument_checks():
    wd = const([0.5, 0.0])
    a, b = ball(wd, [0, 0], 0.5), ball(wd, [0, 0], 1.0, res=33)
    with pytest.raises(ValueError):
        ball_inclusion_report(a, b)
    with pytest.raises(ValueError):
        ball_inclusion_report(ball(wd, [0, 0], 1.0), a)


def test_punctured_plane_closed_exceeds_open():
    f = ball(make_model("punctured_plane"), [0.0, 0.0], 2.0, res=101)
    rep_counts = int(np.sum(f.closed_ball() & ~f.open_ball()))
    assert rep_counts > 0
    assert not np.any(f.open_ball() & ~f.closed_ball())
    assert not np.any(f.closed_ball() & ~f.mask)


def test_backward_ball_is_reflected_forward_ball():
    wd = make_model("strong_constant")
    fwd = ball(wd, [0.0, 0.0], 1.0)
    bwd = ball(wd, [0.0, 0.0], 1.0, backward=True)
    assert bwd.backward
    assert np.array_equal(bwd.closed_ball(), fwd.closed_ball()[::-1, ::-1])


def test_translation_equivariance():
    wd = const([0.5, 0.0])
    a = ball(wd, [0.0, 0.0], 0.8)
    shift = 5
    offset = shift * float(a.grid.cell[0])
    b = ball(wd, [offset, 0.0], 0.8)
    assert np.array_equal(np.roll(a.closed_ball(), shift, axis=0), b.closed_ball())


def test_resolution_refinement_moves_front_by_at_most_two_cells():
    wd = const([0.5, 0.0])
    coarse = ball(wd, [0.0, 0.0], 1.0, res=49)
    fine = ball(wd, [0.0, 0.0], 1.0, res=97)
    assert hausdorff(front(coarse), front(fine)) < 2 * float(coarse.grid.cell[0])


def test_consistent_with_navigation():
    wd = const([0.5, 0.0])
    f = ball(wd, [0.0, 0.0], 1.2)
    slack = 2 * f.grid.dt + 2 * float(np.linalg.norm(f.grid.cell)) / 0.5
    rng = np.random.default_rng(7)
    cand = f.grid.nodes()[f.open_ball() & (f.times > 0.3)]
    for q in cand[rng.choice(len(cand), 5, replace=False)]:
        res = navigate(wd, [0.0, 0.0], q)
        assert res.status == "Optimal"
        assert abs(res.time - f.time_at(q)) <= slack


def test_figure3_ball_never_crosses_left_barrier():
    # at x = -3 the wind is critical and points right: no wind curve goes further left
    wd = figure3()
    f = forward_ball(wd, [4.0, 0.0], 6.0, GridSpec.auto(wd, ((-7, -2), (7, 2)), (141, 41)))
    reached = f.points("ever")
    assert reached[:, 0].min() > -3.0
    # the wind between 0 and 3 blows leftward, so x = 3 is crossed freely
    assert reached[:, 0].min() < 2.0


def test_precompactness_probe_examples():
    sphere = make_model("sphere_killing")
    probe = precompactness_probe(sphere, [0.0, 0.0], 1.0, GridSpec.auto(sphere, BOX, 49))
    assert probe.bounded_inside and probe.margin > 0
    ex1 = example_ex1()
    probe = precompactness_probe(ex1, [1.0], 3.0, GridSpec.auto(ex1, ((1e-3,), (4.0,)), 2000))
    assert probe.bounded_inside and probe.margin > 0
    punct = make_model("flat_homothetic", {"punctured": True})
    probe = precompactness_probe(punct, [1.0, 0.0], 1.5, GridSpec.auto(punct, BOX, 49))
    assert math.isfinite(probe.margin)


def test_one_dimensional_interval_endpoints():
    wd = flat_wind(lambda p: [0.5], n=1)
    f = forward_ball(wd, [0.0], 1.0, GridSpec.auto(wd, ((-2.0,), (2.0,)), 401))
    pts = f.points("closed")[:, 0]
    assert pts.min() == pytest.approx(-0.5, abs=0.011)
    assert pts.max() == pytest.approx(1.5, abs=0.011)


def test_csv_output(tmp_path):
    f = ball(const([0.5, 0.0]), [0.0, 0.0], 0.5, res=9)
    path = tmp_path / "ball.csv"
    f.to_csv(path)
    raw = path.read_bytes()
    lines = raw.split(b"\r\n")
    assert lines[0] == b"x,y,time"
    assert len([ln for ln in lines if ln]) == 82
    assert b"inf" in raw


def test_three_dimensional_constant_wind_ball():
    wd = make_model("euclidean_parallel", {"n": 3, "c": [0.5, 0.0, 0.0]})
    grid = GridSpec.auto(wd, ((-2, -2, -2), (2, 2, 2)), 33)
    f = forward_ball(wd, [0.0, 0.0, 0.0], 1.0, grid)
    dist = np.linalg.norm(f.points("closed") - [0.5, 0.0, 0.0], axis=1)
    assert dist.max() <= 1.0 + 2 * grid.cell[0]
    volume = f.closed_ball().sum() * grid.cell[0] ** 3
    assert volume == pytest.approx(4 / 3 * math.pi, rel=0.1)
