"""Tests for the itinerary conjugacy table and its quantitative checks."""

import math
from dataclasses import replace

import numpy as np
import pytest

from hypcert.conjugacy import (
    VERDICT_INAPPLICABLE,
    VERDICT_PASS,
    VERDICT_VIOLATED,
    ConjugacyModel,
    HolderEstimate,
    build_conjugacy,
    conjugacy_defect,
    contraction_decay_check,
    eigenvalue_bound_check,
    holder_estimate,
    load_conjugacy,
)
from hypcert.errors import (
    ConjugacyError,
    PreconditionError,
    UnsupportedModelError,
)
from hypcert.maps import CustomCircleMap, CustomTorusMap, make_model
from hypcert.orbits import PeriodicOrbit, find_periodic_points


@pytest.fixture(scope="module")
def dbl():
    return make_model("doubling")


@pytest.fixture(scope="module")
def pd05():
    return make_model("perturbed_doubling", 0.5)


@pytest.fixture(scope="module")
def pd20():
    return make_model("perturbed_doubling", 2.0)


@pytest.fixture(scope="module")
def h_id(dbl):
    return build_conjugacy(dbl, dbl, 2 ** 10)


@pytest.fixture(scope="module")
def h05(pd05, dbl):
    return build_conjugacy(pd05, dbl, 2 ** 14)


@pytest.fixture(scope="module")
def h20(pd20, dbl):
    return build_conjugacy(pd20, dbl, 2 ** 14)


def test_identity_pair_table_is_exact(h_id):
    assert h_id.resolution == 1024
    assert h_id.digits == 30
    assert np.array_equal(h_id.values, np.arange(1024) / 1024)
    assert h_id.measured_defect == 0.0
    assert h_id.defect_bound == 2.0 ** -29


def test_identity_defect_zero_on_dyadic_grid(h_id, dbl):
    assert conjugacy_defect(h_id, dbl, dbl, 4096) == 0.0


def test_perturbed_build_constants(h05):
    assert h05.resolution == 2 ** 14
    assert h05.digits == 34
    # grid defect is exactly one truncated digit
    assert h05.measured_defect == 2.0 ** -34
    assert h05.defect_bound == 2.0 ** -33
    assert h05.measured_defect < 1e-8
    assert np.all(np.diff(h05.values) > 0.0)


def test_defect_not_larger_under_refinement(pd05, dbl):
    coarse = build_conjugacy(pd05, dbl, 2 ** 10)
    fine = build_conjugacy(pd05, dbl, 2 ** 11)
    assert coarse.measured_defect == 2.0 ** -30
    assert fine.measured_defect == 2.0 ** -31
    assert fine.measured_defect <= coarse.measured_defect


def test_flat_family_still_builds_monotone(h20):
    # s = 2 has a critical point, yet itineraries still separate the grid
    assert np.all(np.diff(h20.values) > 0.0)
    assert h20.measured_defect == 2.0 ** -34


def test_spot_defect_stays_below_stored_bound(h05, pd05, dbl):
    d = conjugacy_defect(h05, pd05, dbl, 4096)
    assert d <= h05.defect_bound
    assert d < 1e-8


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_periodic_points_map_to_linear_periodic_points(s, h05, h20, dbl):
    h = h05 if s == 0.5 else h20
    model = h.source
    worst = 0.0
    for orbit in find_periodic_points(model, 8):
        t = orbit.period
        targets = np.arange(2 ** t) / (2 ** t - 1)
        for p in orbit.points:
            y = h.evaluate(float(p[0]))
            gaps = np.abs(y - targets)
            worst = max(worst, float(np.min(np.minimum(gaps, 1.0 - gaps))))
    assert worst < 1e-9
    assert worst < 1e-6


def test_evaluate_lookup_and_bracketing(h05):
    res = h05.resolution
    for k in (0, 97, 5000, res - 1):
        assert h05.evaluate(k / res) == h05.values[k]
    rng = np.random.default_rng(7)
    for _ in range(50):
        k = int(rng.integers(0, res - 1))
        x = (k + float(rng.uniform(0.1, 0.9))) / res
        y = h05.evaluate(x)
        assert h05.values[k] <= y <= h05.values[k + 1]


def test_write_load_round_trip(h_id, dbl, tmp_path):
    path = tmp_path / "table.txt"
    h_id.write_table(path)
    loaded = load_conjugacy(path, dbl, dbl)
    assert np.array_equal(loaded.values, h_id.values)
    assert loaded.digits == h_id.digits
    assert loaded.measured_defect == 0.0
    assert loaded.defect_bound == 2.0 ** -29


def test_corrupted_table_defect_is_reported(h_id, dbl, tmp_path):
    bad = h_id.values.copy()
    bad[100] += 1e-4
    corrupted = replace(h_id, values=bad)
    d = conjugacy_defect(corrupted, dbl, dbl, 1024)
    assert d == pytest.approx(2e-4, rel=1e-9)

    path = tmp_path / "table.txt"
    corrupted.write_table(path)
    loaded = load_conjugacy(path, dbl, dbl)
    assert loaded.measured_defect == pytest.approx(2e-4, rel=1e-9)
    assert loaded.defect_bound >= loaded.measured_defect


def test_nonmonotone_table_rejected(h_id):
    bad = h_id.values.copy()
    bad[100] += 5e-3
    with pytest.raises(ConjugacyError, match="monotone"):
        replace(h_id, values=bad)


def test_defect_requires_matching_pair(h05, dbl):
    with pytest.raises(PreconditionError, match="different model pair"):
        conjugacy_defect(h05, dbl, dbl, 64)


def test_build_preconditions(dbl, pd05):
    cat = make_model("cat_map")
    with pytest.raises(UnsupportedModelError, match="circle"):
        build_conjugacy(cat, cat, 256)
    with pytest.raises(PreconditionError, match="power of two"):
        build_conjugacy(pd05, dbl, 1000)
    with pytest.raises(PreconditionError, match="tolerance"):
        build_conjugacy(pd05, dbl, 256, defect_tol=0.0)


def test_nonlinear_target_refuses_to_conjugate(pd05):
    with pytest.raises(ConjugacyError, match="linear model"):
        build_conjugacy(pd05, pd05, 64)


def test_degree_three_linear_model_conjugates_to_itself():
    tripling = CustomCircleMap(lift=lambda x: 3.0 * x,
                               deriv=lambda x: 3.0, degree=3)
    h = build_conjugacy(tripling, tripling, 64)
    assert h.measured_defect < 1e-8
    for k in range(64):
        assert abs(h.evaluate(k / 64) - k / 64) < 1e-10


def test_degree_mismatch_rejected(dbl):
    tripling = CustomCircleMap(lift=lambda x: 3.0 * x,
                               deriv=lambda x: 3.0, degree=3)
    with pytest.raises(PreconditionError, match="degree"):
        build_conjugacy(tripling, dbl, 256)


def test_holder_identity_is_exact(h_id):
    est = holder_estimate(h_id, 500, seed=0)
    assert est.holder_constant == 1.0
    assert est.holder_exponent == 1.0
    assert est.residual == 0.0
    assert est.pairs == 500


def test_holder_perturbed_values(h05, h20):
    est = holder_estimate(h05, 500, seed=0)
    assert est.holder_constant == pytest.approx(3.808986186981201, rel=1e-9)
    assert est.holder_exponent == 1.0
    assert est.residual == pytest.approx(0.3717589400584941, rel=1e-9)
    est20 = holder_estimate(h20, 500, seed=0)
    assert est20.holder_constant == pytest.approx(14.643310308456421, rel=1e-9)
    assert 0.0 < est20.holder_exponent <= 1.0
    assert est20.residual == pytest.approx(0.7846800404498778, rel=1e-9)


def test_holder_bound_holds_on_fresh_pairs(h05):
    est = holder_estimate(h05, 500, seed=0)
    res = h05.resolution
    m = res.bit_length() - 1
    rng = np.random.default_rng(123)
    for _ in range(200):
        e = int(rng.integers(2, m + 1))
        i = int(rng.integers(0, res))
        j = (i + (res >> e)) % res
        dy = abs(float(h05.values[j]) - float(h05.values[i]))
        dy = min(dy, 1.0 - dy)
        dx = 2.0 ** -e
        assert dy <= est.holder_constant * dx ** est.holder_exponent * (1 + 1e-12)


def test_holder_preconditions(h_id, dbl):
    with pytest.raises(PreconditionError, match="100"):
        holder_estimate(h_id, 99)
    tiny = build_conjugacy(dbl, dbl, 4)
    with pytest.raises(ConjugacyError, match="coarse"):
        holder_estimate(tiny, 100)


def test_holder_estimate_field_validation():
    with pytest.raises(PreconditionError, match="exponent"):
        HolderEstimate(holder_constant=1.0, holder_exponent=0.0,
                       residual=0.0, pairs=10)
    with pytest.raises(PreconditionError, match="constant"):
        HolderEstimate(holder_constant=-1.0, holder_exponent=0.5,
                       residual=0.0, pairs=10)


def test_decay_linear_model_passes_with_tight_margin(dbl, h_id):
    est = holder_estimate(h_id, 500, seed=0)
    r = contraction_decay_check(dbl, est, 0.5, 200, seed=0)
    assert r.passed
    assert r.violations == 0
    assert r.worst_margin == pytest.approx(0.9321717661805451, rel=1e-9)
    assert r.worst_margin < 1.0


def test_decay_perturbed_families_pass(pd05, h05, pd20, h20):
    r = contraction_decay_check(pd05, holder_estimate(h05, 500, seed=0),
                                0.5, 200, seed=0)
    assert r.passed
    assert r.worst_margin == pytest.approx(0.3943265885507513, rel=1e-9)
    r20 = contraction_decay_check(pd20, holder_estimate(h20, 500, seed=0),
                                  0.5, 200, seed=0)
    assert r20.passed
    assert r20.worst_margin == pytest.approx(0.1094250879144035, rel=1e-9)


def test_decay_small_rate_fails_demonstrably(dbl, h_id):
    est = holder_estimate(h_id, 500, seed=0)
    r = contraction_decay_check(dbl, est, 0.3, 200, seed=0)
    assert not r.passed
    assert r.violations == 3525
    assert r.worst_margin == pytest.approx(25495.934639104136, rel=1e-9)
    assert r.worst_case[2] == 20


def test_decay_is_deterministic(dbl, h_id):
    est = holder_estimate(h_id, 500, seed=0)
    a = contraction_decay_check(dbl, est, 0.5, 50, seed=3)
    b = contraction_decay_check(dbl, est, 0.5, 50, seed=3)
    assert a.worst_margin == b.worst_margin
    assert a.worst_case == b.worst_case


def test_decay_preconditions(dbl, h_id):
    est = holder_estimate(h_id, 500, seed=0)
    cat = make_model("cat_map")
    with pytest.raises(UnsupportedModelError, match="circle"):
        contraction_decay_check(cat, est, 0.5, 10)
    with pytest.raises(PreconditionError, match="lambda_hat"):
        contraction_decay_check(dbl, est, 1.0, 10)
    with pytest.raises(PreconditionError, match="trials"):
        contraction_decay_check(dbl, est, 0.5, 0)
    with pytest.raises(PreconditionError, match="ball"):
        contraction_decay_check(dbl, est, 0.5, 10, ball=0.2)


def test_eigenvalue_doubling_fixed_point(dbl):
    fp = find_periodic_points(dbl, 1)[0]
    r = eigenvalue_bound_check(fp, 0.5, 1.0, seed=0)
    assert r.verdict == VERDICT_PASS
    assert r.eigenvalue_moduli == (0.5,)
    assert r.eigenvalue_ok == (True,)
    assert r.hypothesis_margin == pytest.approx(1.0000000011809298, rel=1e-6)
    assert r.hypothesis_margin <= 1.0 + 1e-8


def test_eigenvalue_perturbed_orbits_pass(pd05):
    for orbit in find_periodic_points(pd05, 3):
        mult = abs(float(orbit.period_map[0, 0]))
        lam = min(0.95, 1.1 / mult)
        r = eigenvalue_bound_check(orbit, lam, 1.0, seed=0)
        assert r.verdict == VERDICT_PASS
        assert r.eigenvalue_moduli[0] == pytest.approx(1.0 / mult, rel=1e-12)


def test_eigenvalue_small_rate_is_inapplicable(pd05):
    fp = find_periodic_points(pd05, 1)[0]
    r = eigenvalue_bound_check(fp, 0.35, 1.0, seed=0)
    assert r.verdict == VERDICT_INAPPLICABLE
    assert r.hypothesis_margin == pytest.approx(3.80118973737596, rel=1e-6)
    # the eigenvalue really does exceed lam; only the failed hypothesis
    # keeps this from being a counterexample
    assert r.eigenvalue_ok == (False,)


def test_eigenvalue_cat_fixed_point():
    cat = make_model("cat_map")
    fp = find_periodic_points(cat, 1)[0]
    r = eigenvalue_bound_check(fp, 0.382, 1.0, seed=0)
    assert r.verdict == VERDICT_PASS
    assert r.eigenvalue_moduli[0] == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0,
                                                   rel=1e-12)
    assert r.hypothesis_margin < 1.0


def test_eigenvalue_perturbed_cat_hypothesis_fails():
    # off the invariant line the inverse expands quadratic leakage, so the
    # sampled hypothesis fails and the check declines to conclude
    pcat = make_model("perturbed_cat", 0.3)
    fp = find_periodic_points(pcat, 1)[0]
    r = eigenvalue_bound_check(fp, 0.3713154776752644, 1.0, seed=0)
    assert r.verdict == VERDICT_INAPPLICABLE
    assert r.hypothesis_margin == pytest.approx(1.5453100359505803, rel=1e-6)


def test_eigenvalue_never_violated_on_builtin_orbits(dbl, pd05):
    models = [dbl, pd05, make_model("perturbed_doubling", 1.5),
              make_model("cat_map"), make_model("perturbed_cat", 0.3)]
    for model in models:
        for orbit in find_periodic_points(model, 3):
            if model.dim == 1:
                rate = 1.0 / abs(float(orbit.period_map[0, 0]))
            else:
                evals = np.abs(orbit.eigenvalues)
                rate = 1.0 / float(np.max(evals))
            lam = min(0.95, 1.1 * rate)
            r = eigenvalue_bound_check(orbit, lam, 1.0, seed=0, pairs=40)
            assert r.verdict != VERDICT_VIOLATED


def test_eigenvalue_preconditions():
    cat = make_model("cat_map")
    fp = find_periodic_points(cat, 1)[0]
    with pytest.raises(PreconditionError, match="lam"):
        eigenvalue_bound_check(fp, 1.0, 1.0)
    with pytest.raises(PreconditionError, match="beta"):
        eigenvalue_bound_check(fp, 0.5, 0.0)
    with pytest.raises(PreconditionError, match="pairs"):
        eigenvalue_bound_check(fp, 0.5, 1.0, pairs=201)
    with pytest.raises(PreconditionError, match="depth"):
        eigenvalue_bound_check(fp, 0.5, 1.0, depth=11)
    no_inverse = CustomTorusMap(fn=cat.eval_point, jac=cat.jacobian)
    orbit = PeriodicOrbit(model=no_inverse, points=np.zeros((1, 2)), period=1)
    with pytest.raises(UnsupportedModelError, match="invertible"):
        eigenvalue_bound_check(orbit, 0.5, 1.0)
