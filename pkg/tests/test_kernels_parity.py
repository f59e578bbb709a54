"""Backend parity: the compiled kernels must match the pure-Python twin.

Circle kernels, the hyperbolic-time scan, and plain torus stepping must
agree bitwise: both backends issue the same libm calls in the same order
and the build disables fp contraction.  The QR cocycle is the exception;
its hypot call is allowed to round differently in the last ulp.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from hypcert import _kernels_py as py

cy = pytest.importorskip("hypcert._kernels_cy",
                         reason="compiled kernel extension not built")

S_VALUES = [0.0, 0.5, 1.5, 2.0]


def test_backend_names_differ():
    assert py.BACKEND_NAME == "pure-python"
    assert cy.BACKEND_NAME == "cython"
    assert cy.TWO_PI == py.TWO_PI


@pytest.mark.parametrize("s", S_VALUES)
def test_circle_scalar_kernels_bitwise(s):
    rng = np.random.default_rng(17)
    for _ in range(200):
        x = float(rng.uniform(-2.0, 3.0))
        assert cy.wrap1(x) == py.wrap1(x)
        assert cy.wrap_signed(x) == py.wrap_signed(x)
        u = cy.wrap1(x)
        assert cy.circle_lift(u, s) == py.circle_lift(u, s)
        assert cy.circle_eval(u, s) == py.circle_eval(u, s)
        assert cy.circle_deriv(u, s) == py.circle_deriv(u, s)


@pytest.mark.parametrize("s", S_VALUES)
def test_circle_orbit_kernels_bitwise(s):
    rng = np.random.default_rng(23)
    for _ in range(40):
        x = float(rng.random())
        n = int(rng.integers(1, 60))
        assert np.array_equal(cy.circle_orbit(x, s, n), py.circle_orbit(x, s, n))
        assert np.array_equal(cy.circle_log_deriv_orbit(x, s, n),
                              py.circle_log_deriv_orbit(x, s, n))
        got = cy.circle_itinerary(x, s, n)
        assert got.dtype == np.int8
        assert np.array_equal(got, py.circle_itinerary(x, s, n))


@pytest.mark.parametrize("s", S_VALUES)
def test_inverse_branch_kernels_bitwise(s):
    rng = np.random.default_rng(29)
    for _ in range(60):
        y = float(rng.random())
        branch = int(rng.integers(0, 2))
        assert (cy.circle_branch_preimage(y, branch, s)
                == py.circle_branch_preimage(y, branch, s))
    for _ in range(20):
        word = rng.integers(0, 2, size=int(rng.integers(1, 9))).astype(np.int8)
        x0 = float(rng.random())
        s_safe = min(s, 1.9)  # plain iteration needs the expanding regime
        assert (cy.circle_word_fixed_point(word, s_safe, x0)
                == py.circle_word_fixed_point(word, s_safe, x0))


def test_newton_periodic_bitwise():
    rng = np.random.default_rng(31)
    for s in [0.0, 0.5, 1.5]:
        for _ in range(30):
            x0 = float(rng.random())
            n = int(rng.integers(1, 7))
            assert (cy.circle_newton_periodic(x0, s, n)
                    == py.circle_newton_periodic(x0, s, n))


def test_min_abs_deriv_scan_bitwise():
    for s in S_VALUES:
        for grid in [7, 96, 4096]:
            assert cy.min_abs_deriv_scan(s, grid) == py.min_abs_deriv_scan(s, grid)


def test_hyp_time_indices_bitwise():
    rng = np.random.default_rng(37)
    for _ in range(100):
        n = int(rng.integers(1, 200))
        a = rng.normal(-0.2, 0.7, n)
        level = float(rng.uniform(-0.4, 0.0))
        got = cy.hyp_time_indices(a, level)
        assert got.dtype == np.int64
        assert np.array_equal(got, py.hyp_time_indices(a, level))
    assert np.array_equal(cy.hyp_time_indices(np.array([1.0]), -0.1),
                          py.hyp_time_indices(np.array([1.0]), -0.1))


def test_torus_kernels_bitwise():
    rng = np.random.default_rng(41)
    for s in [0.0, 0.3, 0.8]:
        for _ in range(40):
            x, y = float(rng.random()), float(rng.random())
            n = int(rng.integers(1, 50))
            assert cy.torus_step(x, y, s) == py.torus_step(x, y, s)
            assert cy.torus_jacobian_entries(y, s) == py.torus_jacobian_entries(y, s)
            assert np.array_equal(cy.torus_orbit(x, y, s, n),
                                  py.torus_orbit(x, y, s, n))


def test_torus_qr_logs_last_ulp():
    rng = np.random.default_rng(43)
    for s in [0.0, 0.3, 0.8]:
        for _ in range(20):
            x, y = float(rng.random()), float(rng.random())
            n = int(rng.integers(1, 400))
            qc = cy.torus_qr_logs(x, y, s, n)
            qp = py.torus_qr_logs(x, y, s, n)
            assert qc.shape == qp.shape == (n, 2)
            np.testing.assert_allclose(qc, qp, rtol=0.0, atol=1e-13)


def test_pure_env_var_forces_fallback():
    code = "import hypcert; print(hypcert.BACKEND)"
    env = dict(os.environ, HYPCERT_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "pure-python"
    env.pop("HYPCERT_PURE")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"
