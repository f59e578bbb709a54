"""Tests for periodic shadowing of nearly closed orbit segments."""

import math

import numpy as np
import pytest

from hypcert.errors import (
    ConvergenceError,
    PreconditionError,
    UnsupportedModelError,
)
from hypcert.maps import CustomTorusMap, OrbitSegment, make_model
from hypcert.orbits import find_periodic_points
from hypcert.shadowing import (
    ShadowingResult,
    shadow_periodic,
    shadowing_constants,
)


@pytest.fixture(scope="module")
def doubling():
    return make_model("doubling")


@pytest.fixture(scope="module")
def cat_model():
    return make_model("cat_map")


def test_exactly_periodic_segment_is_its_own_shadow(doubling):
    seg = OrbitSegment(model=doubling,
                       points=np.array([[0.2], [0.4], [0.8], [0.6], [0.2]]))
    res = shadow_periodic(doubling, seg, 1e-3)
    assert res.closing_gap == 0.0
    assert res.epsilon == 0.0
    assert res.ratio == 0.0
    assert res.orbit.period == 4
    assert np.array_equal(res.orbit.points,
                          np.array([[0.2], [0.4], [0.8], [0.6]]))


def test_offset_start_lands_on_the_nearby_orbit(doubling):
    # gap of 0.2 + h after four steps is (2^4 - 1) h = 15e-4
    seg = doubling.iterate(0.2 + 1e-4, 4)
    res = shadow_periodic(doubling, seg, 16e-4)
    assert res.closing_gap == pytest.approx(15e-4, rel=1e-10)
    assert abs(float(res.orbit.points[0][0]) - 0.2) < 1e-11
    assert res.orbit.period == 4
    assert res.epsilon <= 2.0 * res.closing_gap
    assert res.epsilon == pytest.approx(16e-4, rel=1e-9)


def test_segment_closing_across_the_wrap(doubling):
    # start just above 0 so the endpoint returns just below 1: the local
    # inverse branches must follow the segment through the wrap
    p = 1.0 / 255.0
    seg = doubling.iterate(p - 2e-6, 8)
    res = shadow_periodic(doubling, seg, 1e-3)
    assert abs(float(res.orbit.points[0][0]) - p) < 1e-10
    assert res.epsilon <= 2.0 * res.closing_gap


def test_double_loop_reduces_to_least_period(doubling):
    third = 1.0 / 3.0
    seg = OrbitSegment(model=doubling,
                       points=np.array([[third], [2 * third], [third],
                                        [2 * third], [third]]))
    res = shadow_periodic(doubling, seg, 1e-6)
    assert res.orbit.period == 2
    assert res.epsilon == 0.0


def test_cat_segment_closes_onto_source_orbit(cat_model):
    orbit = find_periodic_points(cat_model, 3)[-1]
    rng = np.random.default_rng(5)
    v = rng.standard_normal(2)
    v /= np.linalg.norm(v)
    u = np.linalg.solve(orbit.period_map - np.eye(2), 1e-3 * v)
    seg = cat_model.iterate(orbit.points[0] + u, 3)
    res = shadow_periodic(cat_model, seg, 2e-3)
    assert res.orbit.period == 3
    assert np.max(np.abs(res.orbit.points - orbit.points)) < 1e-12
    assert res.epsilon <= res.model_bound * res.closing_gap


def test_model_bounds(doubling, cat_model):
    seg = doubling.iterate(0.2 + 1e-6, 4)
    assert shadow_periodic(doubling, seg, 1e-4).model_bound == 2.0
    orbit = find_periodic_points(cat_model, 1)[0]
    seg2 = cat_model.iterate(orbit.points[0] + np.array([1e-4, 0.0]), 1)
    res = shadow_periodic(cat_model, seg2, 1e-2)
    assert res.model_bound == pytest.approx(1.0 + math.sqrt(5.0), rel=1e-12)
    pd15 = make_model("perturbed_doubling", 1.5)
    seg3 = pd15.iterate(1e-5, 1)
    assert shadow_periodic(pd15, seg3, 1e-3).model_bound == math.inf


def test_gap_precondition(doubling):
    seg = doubling.iterate(0.3, 3)
    with pytest.raises(PreconditionError, match="closing gap"):
        shadow_periodic(doubling, seg, 1e-9)


def test_empty_segment_precondition(doubling):
    seg = OrbitSegment(model=doubling, points=np.array([[0.2]]))
    with pytest.raises(PreconditionError, match="one step"):
        shadow_periodic(doubling, seg, 1e-3)


def test_unsupported_models(cat_model):
    rng = np.random.default_rng(3)
    pts = rng.random((5, 2))
    pts[4] = pts[0] + 1e-5
    no_inverse = CustomTorusMap(fn=cat_model.eval_point, jac=cat_model.jacobian)
    seg = OrbitSegment(model=no_inverse, points=pts)
    with pytest.raises(UnsupportedModelError, match="shadowing"):
        shadow_periodic(no_inverse, seg, 1e-3)


def test_flat_derivative_region_detected_as_noncontraction():
    model = make_model("perturbed_doubling", 1.99)
    seg = OrbitSegment(model=model,
                       points=np.array([[0.48], [0.485], [0.49], [0.4905]]))
    with pytest.raises(ConvergenceError):
        shadow_periodic(model, seg, 0.02)


def test_torus_newton_rejects_garbage_interior(cat_model):
    rng = np.random.default_rng(3)
    pts = rng.random((5, 2))
    pts[4] = pts[0] + 1e-4
    seg = OrbitSegment(model=cat_model, points=pts)
    with pytest.raises(ConvergenceError, match="diverged"):
        shadow_periodic(cat_model, seg, 1e-3)


def test_doubling_table_obeys_geometric_bound(doubling):
    table = shadowing_constants(doubling, 100, [0.0, 1e-2, 1e-3, 1e-4], seed=11)
    assert table.eps_max[0] == 0.0
    assert np.all(table.failures == 0)
    ratios = table.ratios
    assert ratios[0] == 0.0
    assert np.all(ratios[1:] <= 2.0)
    assert np.all(ratios[1:] == pytest.approx(1.2, rel=1e-3))


def test_cat_table_constant_is_stable(cat_model):
    table = shadowing_constants(cat_model, 100, [1e-2, 1e-3, 1e-4], seed=11)
    assert np.all(table.failures == 0)
    ratios = table.ratios
    assert np.all(np.abs(ratios / np.mean(ratios) - 1.0) < 0.2)
    assert ratios[0] == pytest.approx(0.9174253554901612, rel=1e-9)
    assert np.all(ratios <= 1.0 + math.sqrt(5.0))


def test_perturbed_doubling_table():
    model = make_model("perturbed_doubling", 0.5)
    table = shadowing_constants(model, 100, [1e-2, 1e-3, 1e-4], seed=11)
    assert np.all(table.failures == 0)
    expected = [1.2924774033864384, 1.2894883961842574, 1.2891901525291516]
    assert table.ratios == pytest.approx(expected, rel=1e-9)
    # uniformly expanding at s=0.5: the geometric-series constant caps it
    assert np.all(table.ratios <= 3.0)


def test_nonuniform_family_still_shadows():
    # min |g'| = 0.5 < 1 in the flat metric, yet every trial closes
    model = make_model("perturbed_doubling", 1.5)
    table = shadowing_constants(model, 40, [1e-3], seed=11)
    assert table.failures[0] == 0
    assert table.ratios[0] == pytest.approx(1.8040669076478388, rel=1e-9)


def test_table_is_deterministic(doubling):
    a = shadowing_constants(doubling, 30, [1e-2, 1e-3], seed=4)
    b = shadowing_constants(doubling, 30, [1e-2, 1e-3], seed=4)
    assert np.array_equal(a.eps_max, b.eps_max)
    assert np.array_equal(a.failures, b.failures)
    c = shadowing_constants(doubling, 30, [1e-2, 1e-3], seed=5)
    assert not np.array_equal(a.eps_max, c.eps_max)


def test_table_preconditions(doubling):
    with pytest.raises(PreconditionError, match="trials"):
        shadowing_constants(doubling, 0, [1e-3])
    with pytest.raises(PreconditionError, match="at least one"):
        shadowing_constants(doubling, 5, [])
    with pytest.raises(PreconditionError, match=">= 0"):
        shadowing_constants(doubling, 5, [-1e-3])


def test_table_csv_round_trip(doubling, tmp_path):
    import csv

    table = shadowing_constants(doubling, 20, [1e-2, 1e-3], seed=2)
    path = tmp_path / "table.csv"
    table.write_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["alpha", "eps_max", "ratio", "trials", "failures"]
    assert len(rows) == 3
    assert float(rows[1][0]) == 1e-2
    assert float(rows[1][1]) == table.eps_max[0]
    assert int(rows[1][3]) == 20


def test_result_period_divides_segment_length(doubling):
    # shadowing a k-fold loop of any short orbit keeps the least period
    for reps in (2, 3):
        orbit = find_periodic_points(doubling, 2)[-1]
        pts = np.vstack([np.tile(orbit.points, (reps, 1)), orbit.points[:1]])
        seg = OrbitSegment(model=doubling, points=pts)
        res = shadow_periodic(doubling, seg, 1e-6)
        assert seg.length % res.orbit.period == 0
        assert isinstance(res, ShadowingResult)
