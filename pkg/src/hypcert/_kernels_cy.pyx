# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel twin.

Mirrors every signature and the exact operation order of ``_kernels_py``;
the parity tests hold both backends to bitwise agreement on the circle
kernels and last-ulp agreement on the QR cocycle (the lone hypot call is
the only place the two runtimes may round differently).
"""

import math

import numpy as np

from libc.math cimport cos, fabs, floor, hypot, log, sin

TWO_PI = 2.0 * math.pi

BACKEND_NAME = "cython"

cdef double C_TWO_PI = TWO_PI
cdef double C_INF = float("inf")


cdef inline double _wrap1(double x) nogil:
    cdef double w = x - floor(x)
    if w >= 1.0:
        w -= 1.0
    return w


cdef inline double _wrap_signed(double d) nogil:
    return d - floor(d + 0.5)


cdef inline double _lift(double x, double s) nogil:
    return 2.0 * x + (s / C_TWO_PI) * sin(C_TWO_PI * x)


cdef inline double _deriv(double x, double s) nogil:
    return 2.0 + s * cos(C_TWO_PI * x)


def wrap1(double x):
    """Reduce to the canonical representative in [0, 1)."""
    return _wrap1(x)


def wrap_signed(double d):
    """Signed circle difference, reduced to [-0.5, 0.5)."""
    return _wrap_signed(d)


def circle_lift(double x, double s):
    return _lift(x, s)


def circle_eval(double x, double s):
    return _wrap1(_lift(x, s))


def circle_deriv(double x, double s):
    return _deriv(x, s)


def circle_orbit(double x, double s, int n):
    out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] v = out
    cdef int j
    v[0] = x
    for j in range(n):
        x = _wrap1(_lift(x, s))
        v[j + 1] = x
    return out


def circle_log_deriv_orbit(double x, double s, int n):
    """log|g'| along the orbit of x; length n (one entry per step taken)."""
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] v = out
    cdef int j
    for j in range(n):
        v[j] = log(fabs(_deriv(x, s)))
        x = _wrap1(_lift(x, s))
    return out


def circle_itinerary(double x, double s, int n):
    """Branch index of g^j(x) for j = 0..n-1 (cuts at 0 and 1/2, left-closed)."""
    out = np.empty(n, dtype=np.int8)
    cdef signed char[::1] v = out
    cdef int j
    for j in range(n):
        v[j] = 1 if x >= 0.5 else 0
        x = _wrap1(_lift(x, s))
    return out


cdef double _branch_preimage(double y, int branch, double s,
                             double tol, int maxit) nogil:
    cdef double target = y + branch
    cdef double a, b, x, f, d, xn
    cdef int it
    cdef bint moved
    if branch == 0:
        a = 0.0
        b = 0.5
    else:
        a = 0.5
        b = 1.0
    x = 0.5 * (a + b)
    for it in range(maxit):
        f = _lift(x, s) - target
        if f > 0.0:
            b = x
        elif f < 0.0:
            a = x
        else:
            return x
        d = _deriv(x, s)
        moved = False
        if d > 0.0:
            xn = x - f / d
            if a < xn < b:
                if fabs(xn - x) <= tol:
                    return xn
                x = xn
                moved = True
        if not moved:
            x = 0.5 * (a + b)
        if b - a <= tol:
            break
    return x


def circle_branch_preimage(double y, int branch, double s,
                           double tol=1e-14, int maxit=200):
    """Solve F(x) = y + branch inside the branch interval.

    Safeguarded Newton: keeps a bisection bracket at all times, so the root
    is found even where the derivative degenerates (s = 2 at x = 1/2).
    """
    return _branch_preimage(y, branch, s, tol, maxit)


def circle_word_fixed_point(word, double s, double x0,
                            double tol=1e-14, int maxit=400):
    """Fixed point of the composed inverse branch selected by an itinerary word.

    The composed map is monotone on [0,1], so plain iteration converges; a
    few dozen sweeps are enough in the uniformly expanding regime.
    """
    cdef signed char[::1] w = np.ascontiguousarray(word, dtype=np.int8)
    cdef double x = x0
    cdef double y
    cdef int m = w.shape[0]
    cdef int it, j
    for it in range(maxit):
        y = x
        for j in range(m - 1, -1, -1):
            y = _branch_preimage(y, w[j], s, 1e-14, 200)
        if fabs(y - x) <= tol:
            return y
        x = y
    return x


def circle_newton_periodic(double x0, double s, int n,
                           double tol=1e-13, int maxit=50):
    """Newton for fixed points of g^n on the circle.

    Returns (x, residual, iterations, converged).  Residual is the signed
    wrapped gap g^n(x) - x.
    """
    cdef double x = x0
    cdef double res = C_INF
    cdef double y, dprod, denom, step
    cdef int it, j
    for it in range(1, maxit + 1):
        y = x
        dprod = 1.0
        for j in range(n):
            dprod *= _deriv(y, s)
            y = _wrap1(_lift(y, s))
        res = _wrap_signed(y - x)
        denom = dprod - 1.0
        if denom == 0.0:
            return x, res, it, False
        step = res / denom
        x = _wrap1(x - step)
        if fabs(step) <= tol:
            y = x
            for j in range(n):
                y = _wrap1(_lift(y, s))
            res = _wrap_signed(y - x)
            return x, res, it, True
    return x, res, maxit, False


def min_abs_deriv_scan(double s, long grid):
    """Minimum of |g'| over the uniform grid i/grid; returns (value, argmin)."""
    cdef double best = C_INF
    cdef double arg = 0.0
    cdef double x, d
    cdef long i
    for i in range(grid):
        x = (<double> i) / (<double> grid)
        d = fabs(_deriv(x, s))
        if d < best:
            best = d
            arg = x
    return best, arg


def hyp_time_indices(a, double log_level):
    """All indices k (1-based) whose backward partial sums stay under k*log_level.

    k qualifies iff sum_{j=1..i} a[k-j] <= i*log_level for every i = 1..k.
    Equivalent running-minimum form: with U_k = sum_{j<k}(a_j - log_level),
    k qualifies iff U_k <= min(U_0, ..., U_{k-1}).  O(n), no tolerance slack.
    """
    cdef double[::1] v = np.ascontiguousarray(a, dtype=np.float64)
    cdef long n = v.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef long[::1] o = out
    cdef double u = 0.0
    cdef double lo = 0.0
    cdef long k, m = 0
    for k in range(1, n + 1):
        u += v[k - 1] - log_level
        if u <= lo:
            o[m] = k
            m += 1
        if u < lo:
            lo = u
    return out[:m].copy()


cdef inline void _torus_step(double* x, double* y, double s) nogil:
    cdef double xs = x[0]
    cdef double xn, yn
    if s != 0.0:
        xs = xs + (s / C_TWO_PI) * sin(C_TWO_PI * y[0])
    xn = _wrap1(2.0 * xs + y[0])
    yn = _wrap1(xs + y[0])
    x[0] = xn
    y[0] = yn


def torus_step(double x, double y, double s):
    """One step of the (possibly sheared) toral map; returns the new point."""
    _torus_step(&x, &y, s)
    return x, y


def torus_jacobian_entries(double y, double s):
    """Jacobian at (x, y) as (a, b, c, d) for [[a, b], [c, d]]; x-independent."""
    cdef double p
    if s != 0.0:
        p = s * cos(C_TWO_PI * y)
        return 2.0, 2.0 * p + 1.0, 1.0, p + 1.0
    return 2.0, 1.0, 1.0, 1.0


def torus_orbit(double x, double y, double s, int n):
    out = np.empty((n + 1, 2), dtype=np.float64)
    cdef double[:, ::1] v = out
    cdef int j
    v[0, 0] = x
    v[0, 1] = y
    for j in range(n):
        _torus_step(&x, &y, s)
        v[j + 1, 0] = x
        v[j + 1, 1] = y
    return out


def torus_qr_logs(double x, double y, double s, int n):
    """Per-step log |diag R| of the QR-orthogonalized Jacobian cocycle.

    Shape (n, 2): column 0 tracks the leading direction, column 1 the
    complementary one.  Mean over rows gives the exponent estimates.
    """
    out = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] v = out
    cdef double q00 = 1.0, q01 = 0.0, q10 = 0.0, q11 = 1.0
    cdef double a, b, c, d, m00, m01, m10, m11, r0, r1, co, si, p
    cdef int j
    for j in range(n):
        if s != 0.0:
            p = s * cos(C_TWO_PI * y)
            a = 2.0
            b = 2.0 * p + 1.0
            c = 1.0
            d = p + 1.0
        else:
            a = 2.0
            b = 1.0
            c = 1.0
            d = 1.0
        m00 = a * q00 + b * q10
        m01 = a * q01 + b * q11
        m10 = c * q00 + d * q10
        m11 = c * q01 + d * q11
        r0 = hypot(m00, m10)
        co = m00 / r0
        si = m10 / r0
        r1 = co * m11 - si * m01
        v[j, 0] = log(r0)
        v[j, 1] = log(fabs(r1))
        q00 = co
        q10 = si
        q01 = -si
        q11 = co
        _torus_step(&x, &y, s)
    return out
