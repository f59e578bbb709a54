"""Map-family unit tests: evaluation, derivatives, inverse branches, scans."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypcert.errors import (
    MissingDerivativeError,
    ModelError,
    UnsupportedModelError,
    ZeroDerivativeError,
)
from hypcert.maps import (
    CAT_MATRIX,
    CustomCircleMap,
    CustomTorusMap,
    conorm,
    flat_distance,
    iterate_orbit,
    make_model,
    min_conorm_scan,
    spectral_norm,
    wrap_diff,
    wrap_point,
)

RNG = np.random.default_rng(1234)


# ---------------------------------------------------------------- geometry


@given(st.floats(-50.0, 50.0, allow_nan=False))
def test_wrap_point_range(x):
    w = wrap_point([x])[0]
    assert 0.0 <= w < 1.0


@given(st.floats(-50.0, 50.0), st.floats(-50.0, 50.0))
def test_wrap_diff_range_and_antisymmetry(a, b):
    d = wrap_diff([a], [b])[0]
    assert -0.5 <= d < 0.5
    # antisymmetric up to the representative of +-1/2
    back = wrap_diff([b], [a])[0]
    assert abs((d + back) % 1.0) < 1e-12 or abs((d + back) % 1.0 - 1.0) < 1e-12


def test_flat_distance_examples():
    # wrapped gap crossing zero
    assert flat_distance([0.95], [0.05]) == pytest.approx(0.1, abs=1e-15)
    assert flat_distance([0.25, 0.0], [0.25, 0.5]) == pytest.approx(0.5, abs=1e-15)
    assert flat_distance([0.9, 0.9], [0.1, 0.1]) == pytest.approx(
        math.hypot(0.2, 0.2), abs=1e-15
    )


def test_singular_values_match_numpy():
    # closed-form sigma_max / sigma_min against LAPACK svd
    for _ in range(200):
        m = RNG.normal(size=(2, 2)) * RNG.choice([1e-3, 1.0, 1e3])
        sv = np.linalg.svd(m, compute_uv=False)
        assert spectral_norm(m) == pytest.approx(sv[0], rel=1e-12, abs=1e-300)
        assert conorm(m) == pytest.approx(sv[1], rel=1e-9, abs=1e-12)


# ---------------------------------------------------------------- evaluation


def test_doubling_orbit_exact():
    # 0.2 -> 0.4 -> 0.8 -> 0.6 -> 0.2 is a 4-cycle of x -> 2x mod 1
    seg = iterate_orbit(make_model("doubling"), [0.2], 4)
    want = np.array([[0.2], [0.4], [0.8], [0.6], [0.2]])
    assert np.max(np.abs(seg.points - want)) < 1e-12
    seg.validate(1e-12)


def test_perturbed_doubling_fixed_values():
    m = make_model("perturbed_doubling", 1.5)
    # sin vanishes at 0 and 1/2: g(0) = 0 and g(1/2) = 1 mod 1 = 0
    assert m.eval_point([0.0])[0] == 0.0
    assert m.eval_point([0.5])[0] == 0.0
    # g(1/4) = 1/2 + s/2pi
    assert m.eval_point([0.25])[0] == pytest.approx(0.5 + 1.5 / (2 * math.pi), abs=1e-15)
    assert m.deriv(0.5) == pytest.approx(0.5, abs=1e-15)
    assert m.deriv(0.0) == pytest.approx(3.5, abs=1e-15)


def test_cat_map_integer_action():
    m = make_model("cat_map")
    # (0.2, 0.7) -> (2*0.2 + 0.7, 0.2 + 0.7) mod 1 = (0.1, 0.9)
    out = m.eval_point([0.2, 0.7])
    assert np.allclose(out, [0.1, 0.9], atol=1e-12)
    assert np.array_equal(m.jacobian([0.3, 0.4]), CAT_MATRIX)


def test_orbit_segment_validate_rejects_corruption():
    seg = iterate_orbit(make_model("doubling"), [0.2], 4)
    seg.points[2, 0] += 1e-6
    with pytest.raises(ModelError, match="step"):
        seg.validate(1e-12)


# ---------------------------------------------------------------- derivatives


def _fd_column(model, p, j, h=1e-6):
    e = np.zeros(model.dim)
    e[j] = h
    return wrap_diff(model.eval_point(p + e), model.eval_point(p - e)) / (2 * h)


@pytest.mark.parametrize(
    "model",
    [
        make_model("doubling"),
        make_model("perturbed_doubling", 0.5),
        make_model("perturbed_doubling", 1.5),
        make_model("perturbed_doubling", 2.0),
    ],
    ids=["doubling", "s05", "s15", "s20"],
)
def test_circle_jacobian_matches_finite_differences(model):
    # central differences, step 1e-6, on 1000 seeded points
    rng = np.random.default_rng(99)
    for x in rng.random(1000):
        jac = model.jacobian([x])[0, 0]
        fd = _fd_column(model, np.array([x]), 0)[0]
        assert jac == pytest.approx(fd, abs=1e-5)


@pytest.mark.parametrize(
    "model",
    [make_model("cat_map"), make_model("perturbed_cat", 0.7), make_model("perturbed_cat", 1.5)],
    ids=["cat", "s07", "s15"],
)
def test_torus_jacobian_matches_finite_differences(model):
    rng = np.random.default_rng(98)
    for p in rng.random((300, 2)):
        jac = model.jacobian(p)
        fd = np.column_stack([_fd_column(model, p, 0), _fd_column(model, p, 1)])
        assert np.max(np.abs(jac - fd)) < 1e-5


def test_perturbed_cat_is_area_preserving():
    # det Dg = det A * det(shear) = 1 for every s, y
    m = make_model("perturbed_cat", 1.3)
    for y in np.linspace(0.0, 1.0, 37):
        assert np.linalg.det(m.jacobian([0.0, y])) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- inverses


@pytest.mark.parametrize("s", [0.0, 0.5, 1.5, 1.99])
def test_circle_inverse_branches_round_trip(s):
    m = make_model("perturbed_doubling", s) if s else make_model("doubling")
    rng = np.random.default_rng(7)
    for y in rng.random(400):
        branches = m.inverse_branches([y])
        assert len(branches) == 2
        for k, br in enumerate(branches):
            assert flat_distance(m.eval_point(br.point), [y]) < 1e-10
            cuts = m.branch_cuts()
            lo = cuts[k]
            hi = cuts[k + 1] if k + 1 < len(cuts) else 1.0
            assert lo - 1e-12 <= br.point[0] <= hi + 1e-12
            d = m.jacobian(br.point)[0, 0]
            assert br.inverse_jacobian[0, 0] == pytest.approx(1.0 / d, rel=1e-12)


def test_circle_branches_are_distinct_and_ordered():
    m = make_model("perturbed_doubling", 1.5)
    b = m.inverse_branches([0.3])
    assert b[0].point[0] < 0.5 <= b[1].point[0]


@pytest.mark.parametrize("s", [0.0, 0.7, 1.5])
def test_torus_inverse_round_trip(s):
    m = make_model("perturbed_cat", s) if s else make_model("cat_map")
    rng = np.random.default_rng(11)
    for p in rng.random((200, 2)):
        q = m.inverse_point(p)
        assert flat_distance(m.eval_point(q), p) < 1e-10
        (br,) = m.inverse_branches(p)
        assert flat_distance(br.point, q) == 0.0
        # inverse Jacobian consistency
        assert np.max(np.abs(br.inverse_jacobian @ m.jacobian(q) - np.eye(2))) < 1e-10


def test_critical_parameter_inverse_branch_fails_at_zero():
    # s = 2: g'(1/2) = 0 and g(1/2) = 0, so y = 0 hits the critical point
    m = make_model("perturbed_doubling", 2.0)
    with pytest.raises(ZeroDerivativeError):
        m.inverse_branches([0.0])
    # away from the critical value both branches still work
    for br in m.inverse_branches([0.37]):
        assert flat_distance(m.eval_point(br.point), [0.37]) < 1e-10


# ---------------------------------------------------------------- conorm scan


def test_min_conorm_scan_doubling():
    scan = min_conorm_scan(make_model("doubling"), 1024)
    assert scan.value == pytest.approx(2.0, abs=1e-15)


def test_min_conorm_scan_perturbed():
    # even grid contains x = 1/2 where g' = 2 - s
    scan = min_conorm_scan(make_model("perturbed_doubling", 1.5), 4096)
    assert scan.value == pytest.approx(0.5, abs=1e-12)
    assert scan.argmin[0] == pytest.approx(0.5, abs=1e-15)
    crit = min_conorm_scan(make_model("perturbed_doubling", 2.0), 4096)
    assert crit.value == pytest.approx(0.0, abs=1e-15)


def test_min_conorm_scan_cat():
    # sigma_min(A) = 1 / sigma_max(A) = (3 - sqrt 5) / 2
    scan = min_conorm_scan(make_model("cat_map"), 16)
    assert scan.value == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0, abs=1e-12)


# ---------------------------------------------------------------- custom maps


def _triple_lift(x):
    return 3.0 * x + 0.1 * math.sin(2.0 * math.pi * x)


def _triple_deriv(x):
    return 3.0 + 0.2 * math.pi * math.cos(2.0 * math.pi * x)


def test_custom_circle_map_branches():
    m = CustomCircleMap(_triple_lift, _triple_deriv, degree=3)
    cuts = m.branch_cuts()
    assert len(cuts) == 3 and cuts[0] == 0.0
    rng = np.random.default_rng(5)
    for y in rng.random(100):
        for br in m.inverse_branches([y]):
            assert flat_distance(m.eval_point(br.point), [y]) < 1e-9


def test_custom_circle_map_missing_derivative():
    m = CustomCircleMap(_triple_lift, None, degree=3)
    with pytest.raises(MissingDerivativeError):
        m.jacobian([0.3])
    # evaluation itself needs no derivative
    assert 0.0 <= m.eval_point([0.3])[0] < 1.0


def test_custom_torus_map_missing_pieces():
    fn = lambda p: (p[0] + p[1], p[1])
    m = CustomTorusMap(fn, None)
    with pytest.raises(MissingDerivativeError):
        m.jacobian([0.1, 0.2])
    with pytest.raises(UnsupportedModelError):
        m.inverse_point([0.1, 0.2])
    m2 = CustomTorusMap(fn, lambda p: np.array([[1.0, 1.0], [0.0, 1.0]]),
                        inverse=lambda p: (p[0] - p[1], p[1]))
    p = np.array([0.3, 0.8])
    assert flat_distance(m2.eval_point(m2.inverse_point(p)), p) < 1e-12


def test_make_model_rejects_bad_requests():
    with pytest.raises(ModelError):
        make_model("doubling", 0.5)
    with pytest.raises(ModelError):
        make_model("perturbed_doubling")
    with pytest.raises(ModelError):
        make_model("horseshoe")
    with pytest.raises(ModelError):
        make_model("perturbed_doubling", -1.0)


# ---------------------------------------------------------------- itineraries


def test_doubling_itinerary_is_binary_expansion():
    # for x -> 2x mod 1 the branch digits are the binary digits
    m = make_model("doubling")
    x = 0.40625  # 0.01101 in binary
    assert list(m.itinerary(x, 5)) == [0, 1, 1, 0, 1]


@settings(max_examples=50)
@given(st.floats(0.0, 0.999999, allow_nan=False), st.floats(0.0, 1.9))
def test_itinerary_digits_select_correct_branch(x, s):
    m = make_model("perturbed_doubling", s) if s else make_model("doubling")
    seg = iterate_orbit(m, [x], 3)
    digs = m.itinerary(x, 3)
    for j in range(3):
        assert digs[j] == (1 if seg.points[j, 0] >= 0.5 else 0)
