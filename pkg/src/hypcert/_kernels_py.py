"""Pure-Python kernel twin.

Scalar hot loops shared by the whole package: circle family evaluation and
iteration, itineraries, safeguarded branch inversion, periodic Newton steps,
torus orbit/QR stepping and the hyperbolic-time prefix scan.  The compiled
module ``_kernels_cy`` mirrors every signature and keeps the operation order
identical so both backends agree to the last few ulps; ``hypcert.kernels``
selects whichever is importable.

The circle family here is g_s(x) = 2x + (s/2pi) sin(2pi x) mod 1 with lift
fixed by F(0) = 0; the torus family is the integer matrix [[2,1],[1,1]]
optionally precomposed with the shear (x,y) -> (x + (s/2pi) sin(2pi y), y).
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi

BACKEND_NAME = "pure-python"


def wrap1(x: float) -> float:
    """Reduce to the canonical representative in [0, 1)."""
    w = x - math.floor(x)
    if w >= 1.0:
        w -= 1.0
    return w


def wrap_signed(d: float) -> float:
    """Signed circle difference, reduced to [-0.5, 0.5)."""
    return d - math.floor(d + 0.5)


def circle_lift(x: float, s: float) -> float:
    return 2.0 * x + (s / TWO_PI) * math.sin(TWO_PI * x)


def circle_eval(x: float, s: float) -> float:
    return wrap1(circle_lift(x, s))


def circle_deriv(x: float, s: float) -> float:
    return 2.0 + s * math.cos(TWO_PI * x)


def circle_orbit(x: float, s: float, n: int) -> np.ndarray:
    out = np.empty(n + 1, dtype=np.float64)
    out[0] = x
    for j in range(n):
        x = circle_eval(x, s)
        out[j + 1] = x
    return out


def circle_log_deriv_orbit(x: float, s: float, n: int) -> np.ndarray:
    """log|g'| along the orbit of x; length n (one entry per step taken)."""
    out = np.empty(n, dtype=np.float64)
    for j in range(n):
        out[j] = math.log(abs(circle_deriv(x, s)))
        x = circle_eval(x, s)
    return out


def circle_itinerary(x: float, s: float, n: int) -> np.ndarray:
    """Branch index of g^j(x) for j = 0..n-1 (cuts at 0 and 1/2, left-closed)."""
    out = np.empty(n, dtype=np.int8)
    for j in range(n):
        out[j] = 1 if x >= 0.5 else 0
        x = circle_eval(x, s)
    return out


def circle_branch_preimage(y: float, branch: int, s: float,
                           tol: float = 1e-14, maxit: int = 200) -> float:
    """Solve F(x) = y + branch inside the branch interval.

    Safeguarded Newton: keeps a bisection bracket at all times, so the root
    is found even where the derivative degenerates (s = 2 at x = 1/2).
    """
    target = y + branch
    if branch == 0:
        a, b = 0.0, 0.5
    else:
        a, b = 0.5, 1.0
    x = 0.5 * (a + b)
    for _ in range(maxit):
        f = circle_lift(x, s) - target
        if f > 0.0:
            b = x
        elif f < 0.0:
            a = x
        else:
            return x
        d = circle_deriv(x, s)
        moved = False
        if d > 0.0:
            xn = x - f / d
            if a < xn < b:
                if abs(xn - x) <= tol:
                    return xn
                x = xn
                moved = True
        if not moved:
            x = 0.5 * (a + b)
        if b - a <= tol:
            break
    return x


def circle_word_fixed_point(word: np.ndarray, s: float, x0: float,
                            tol: float = 1e-14, maxit: int = 400) -> float:
    """Fixed point of the composed inverse branch selected by an itinerary word.

    The composed map is monotone on [0,1], so plain iteration converges; a
    few dozen sweeps are enough in the uniformly expanding regime.
    """
    x = x0
    m = len(word)
    for _ in range(maxit):
        y = x
        for j in range(m - 1, -1, -1):
            y = circle_branch_preimage(y, int(word[j]), s)
        if abs(y - x) <= tol:
            return y
        x = y
    return x


def circle_newton_periodic(x0: float, s: float, n: int,
                           tol: float = 1e-13, maxit: int = 50):
    """Newton for fixed points of g^n on the circle.

    Returns (x, residual, iterations, converged).  Residual is the signed
    wrapped gap g^n(x) - x.
    """
    x = x0
    res = math.inf
    for it in range(1, maxit + 1):
        y = x
        dprod = 1.0
        for _ in range(n):
            dprod *= circle_deriv(y, s)
            y = circle_eval(y, s)
        res = wrap_signed(y - x)
        denom = dprod - 1.0
        if denom == 0.0:
            return x, res, it, False
        step = res / denom
        x = wrap1(x - step)
        if abs(step) <= tol:
            y = x
            for _ in range(n):
                y = circle_eval(y, s)
            res = wrap_signed(y - x)
            return x, res, it, True
    return x, res, maxit, False


def min_abs_deriv_scan(s: float, grid: int):
    """Minimum of |g'| over the uniform grid i/grid; returns (value, argmin)."""
    best = math.inf
    arg = 0.0
    for i in range(grid):
        x = i / grid
        d = abs(circle_deriv(x, s))
        if d < best:
            best = d
            arg = x
    return best, arg


def hyp_time_indices(a: np.ndarray, log_level: float) -> np.ndarray:
    """All indices k (1-based) whose backward partial sums stay under k*log_level.

    k qualifies iff sum_{j=1..i} a[k-j] <= i*log_level for every i = 1..k.
    Equivalent running-minimum form: with U_k = sum_{j<k}(a_j - log_level),
    k qualifies iff U_k <= min(U_0, ..., U_{k-1}).  O(n), no tolerance slack.
    """
    out = []
    u = 0.0
    lo = 0.0
    for k in range(1, len(a) + 1):
        u += a[k - 1] - log_level
        if u <= lo:
            out.append(k)
        if u < lo:
            lo = u
    return np.asarray(out, dtype=np.int64)


def torus_step(x: float, y: float, s: float):
    """One step of the (possibly sheared) toral map; returns the new point."""
    if s != 0.0:
        x = x + (s / TWO_PI) * math.sin(TWO_PI * y)
    xn = wrap1(2.0 * x + y)
    yn = wrap1(x + y)
    return xn, yn


def torus_jacobian_entries(y: float, s: float):
    """Jacobian at (x, y) as (a, b, c, d) for [[a, b], [c, d]]; x-independent."""
    if s != 0.0:
        p = s * math.cos(TWO_PI * y)
        return 2.0, 2.0 * p + 1.0, 1.0, p + 1.0
    return 2.0, 1.0, 1.0, 1.0


def torus_orbit(x: float, y: float, s: float, n: int) -> np.ndarray:
    out = np.empty((n + 1, 2), dtype=np.float64)
    out[0, 0] = x
    out[0, 1] = y
    for j in range(n):
        x, y = torus_step(x, y, s)
        out[j + 1, 0] = x
        out[j + 1, 1] = y
    return out


def torus_qr_logs(x: float, y: float, s: float, n: int) -> np.ndarray:
    """Per-step log |diag R| of the QR-orthogonalized Jacobian cocycle.

    Shape (n, 2): column 0 tracks the leading direction, column 1 the
    complementary one.  Mean over rows gives the exponent estimates.
    """
    out = np.empty((n, 2), dtype=np.float64)
    q00, q01, q10, q11 = 1.0, 0.0, 0.0, 1.0
    for j in range(n):
        a, b, c, d = torus_jacobian_entries(y, s)
        m00 = a * q00 + b * q10
        m01 = a * q01 + b * q11
        m10 = c * q00 + d * q10
        m11 = c * q01 + d * q11
        r0 = math.hypot(m00, m10)
        co = m00 / r0
        si = m10 / r0
        r1 = co * m11 - si * m01
        out[j, 0] = math.log(r0)
        out[j, 1] = math.log(abs(r1))
        q00, q10 = co, si
        q01, q11 = -si, co
        x, y = torus_step(x, y, s)
    return out
