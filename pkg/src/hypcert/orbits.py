"""Periodic-orbit enumeration, Newton refinement, and multiplier products.

Enumeration strategies, chosen per model:

* expanding circle families (all inverse branches uniform contractions,
  i.e. min |g'| > 1): one fixed point of g^n per length-n branch-index
  word, found by iterating the composed inverse branch; Lyndon words
  give one representative per orbit,
* the linear torus map: fixed points of the n-th power are the rational
  lattice points v with (A^n - I) v integral, enumerated exactly through
  an integer Smith normal form,
* perturbed families outside those regimes: Newton continuation in the
  parameter starting from the unperturbed orbits, step 0.05, halved on
  failure; unresolved tracks are reported as gaps, never dropped silently.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from math import gcd

import numpy as np

from hypcert import kernels
from hypcert.errors import (
    ContinuationGapError,
    ConvergenceError,
    ModelError,
    SplittingError,
    UnsupportedModelError,
)
from hypcert.maps import (
    CircleFamily,
    CustomCircleMap,
    MapModel,
    TorusFamily,
    flat_distance,
    spectral_norm,
    wrap_diff,
    wrap_point,
)

CLOSURE_TOL = 1e-10
LEAST_PERIOD_TOL = 1e-6
PRODUCT_TOL = 1e-12

# Continuation in the family parameter.
CONTINUATION_STEP = 0.05
CONTINUATION_MIN_STEP = 1e-4
CONTINUATION_MAX_MOVE = 0.02


@dataclass
class PeriodicOrbit:
    """A least-period-t orbit with its derivative cocycle along the cycle.

    ``points[j]`` is the j-th iterate of the base point; the base point is
    the lexicographically smallest point on the cycle.
    """

    model: MapModel
    points: np.ndarray
    period: int

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if self.points.shape[0] != self.period:
            raise ModelError(
                f"period {self.period} does not match {self.points.shape[0]} stored points"
            )

    @property
    def base_point(self) -> np.ndarray:
        return self.points[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def cocycle(self) -> np.ndarray:
        """Jacobians along the cycle: cocycle[j] = Dg(points[j])."""
        return np.stack([self.model.jacobian(p) for p in self.points])

    @cached_property
    def period_map(self) -> np.ndarray:
        """Ordered product Dg(points[t-1]) ... Dg(points[0])."""
        prod = np.eye(self.dim)
        for j in range(self.period):
            prod = self.cocycle[j] @ prod
        return prod

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.period_map)

    def closure_residual(self) -> float:
        return flat_distance(self.model.eval_point(self.points[-1]), self.points[0])

    def validate(self) -> None:
        for j in range(self.period - 1):
            gap = flat_distance(self.model.eval_point(self.points[j]), self.points[j + 1])
            if gap > CLOSURE_TOL:
                raise ModelError(f"orbit breaks the map relation at step {j}: gap {gap:.3e}")
        res = self.closure_residual()
        if res > CLOSURE_TOL:
            raise ModelError(f"orbit does not close: residual {res:.3e} > {CLOSURE_TOL:.1e}")
        for j in range(1, self.period):
            if flat_distance(self.points[j], self.points[0]) <= LEAST_PERIOD_TOL:
                raise ModelError(
                    f"period {self.period} is not least: point {j} returns to the base"
                )
        prod = np.eye(self.dim)
        for j in range(self.period):
            prod = self.cocycle[j] @ prod
        scale = max(spectral_norm(self.period_map), 1.0)
        if spectral_norm(prod - self.period_map) > PRODUCT_TOL * scale:
            raise ModelError("stored period map disagrees with the cocycle product")

    def sort_key(self):
        return (self.period, *(float(c) for c in self.points[0]))


@dataclass(frozen=True)
class OrbitMultipliers:
    """Derivative products along one cycle.

    ``inverse_norm_product`` multiplies the full inverse-Jacobian norms; the
    restricted fields multiply norms along the stable and unstable lines of
    the period map transported by the cocycle, and telescope to the moduli
    of the period-map eigenvalues.  ``unstable_inverse_norm_product`` is the
    product of inverse norms restricted to the unstable line, so its
    reciprocal is the net expansion across the cycle.
    """

    inverse_norm_product: float
    stable_norm_product: float | None
    unstable_inverse_norm_product: float | None


def lyndon_words(alphabet: int, max_len: int) -> list[tuple[int, ...]]:
    """All Lyndon words over {0..alphabet-1} of length <= max_len (Duval)."""
    if alphabet < 2 or max_len < 1:
        raise ModelError("alphabet must be >= 2 and max_len >= 1")
    w = [0]
    out = []
    while w:
        out.append(tuple(w))
        w = (w * (max_len // len(w) + 1))[: max_len]
        while w and w[-1] == alphabet - 1:
            w.pop()
        if w:
            w[-1] += 1
    return out


# ------------------------------------------------------------------ Newton


def refine_newton(model: MapModel, x0, n: int, tol: float = 1e-12,
                  max_iter: int = 50, record: list | None = None) -> np.ndarray:
    """Newton refinement of a fixed point of the n-th iterate.

    Checks the residual before stepping, so an exact fixed point is
    returned unchanged.  ``record``, if given, collects the residual after
    each evaluation for convergence diagnostics.
    """
    if n < 1:
        raise ModelError(f"iterate count must be >= 1, got {n}")
    p = wrap_point(x0)
    d = model.dim
    res_norm = math.inf
    for it in range(max_iter):
        q = p.copy()
        jac = np.eye(d)
        for _ in range(n):
            jac = model.jacobian(q) @ jac
            q = model.eval_point(q)
        r = wrap_diff(q, p)
        res_norm = flat_distance(q, p)
        if record is not None:
            record.append(res_norm)
        if res_norm < tol:
            return p
        a = jac - np.eye(d)
        det = float(np.linalg.det(a))
        if det == 0.0 or not math.isfinite(det):
            raise ConvergenceError(
                "singular Newton matrix: the fixed point is degenerate",
                residual=res_norm, iterations=it,
            )
        delta = np.linalg.solve(a, -r)
        p = wrap_point(p + delta)
    raise ConvergenceError(
        f"Newton did not reach tol {tol:.1e} in {max_iter} iterations",
        residual=res_norm, iterations=max_iter,
    )


# ------------------------------------------------ symbolic circle enumeration


def _word_orbit(model, word: tuple[int, ...]):
    """Orbit of the periodic point whose branch itinerary repeats ``word``."""
    n = len(word)
    if isinstance(model, CircleFamily):
        x = kernels.circle_word_fixed_point(
            np.asarray(word, dtype=np.int64), model.s, 0.3, 1e-15, 600
        )
        x, res, _, ok = kernels.circle_newton_periodic(x, model.s, n, 1e-13, 50)
        if not ok or abs(res) > CLOSURE_TOL:
            raise ConvergenceError(
                f"no convergence for itinerary word {word}", residual=abs(res)
            )
    else:
        x = 0.3
        for _ in range(600):
            y = x
            for j in range(n - 1, -1, -1):
                y = model.branch_preimage(y, word[j])
            if abs(y - x) <= 1e-15:
                x = y
                break
            x = y
    pts = np.empty((n, 1))
    pts[0, 0] = x
    for j in range(1, n):
        pts[j, 0] = model.eval_point(pts[j - 1])[0]
    return pts


def _rotate_to_base(pts: np.ndarray) -> np.ndarray:
    """Rotate a cycle so the lexicographically smallest point comes first."""
    keys = [tuple(p) for p in pts]
    k = keys.index(min(keys))
    return np.roll(pts, -k, axis=0)


def _symbolic_circle_orbits(model, max_period: int) -> list[PeriodicOrbit]:
    deg = model.degree
    orbits = []
    for word in lyndon_words(deg, max_period):
        if word == (deg - 1,):
            # the top branch fixes the cut point x = 1 = 0, which is the
            # same point produced by the all-zeros word
            continue
        pts = _rotate_to_base(_word_orbit(model, word))
        orbits.append(PeriodicOrbit(model=model, points=pts, period=len(word)))
    orbits.sort(key=PeriodicOrbit.sort_key)
    return orbits


# ----------------------------------------------------- lattice enumeration


def smith_normal_form_2x2(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer decomposition U @ m @ V = diag(d1, d2), U, V unimodular.

    d1, d2 > 0 and d1 divides d2.  Raises on a singular input.
    """
    a = [[int(m[0][0]), int(m[0][1])], [int(m[1][0]), int(m[1][1])]]
    u = [[1, 0], [0, 1]]
    v = [[1, 0], [0, 1]]
    if a[0][0] * a[1][1] - a[0][1] * a[1][0] == 0:
        raise ModelError("matrix is singular over the integers")

    def swap_rows():
        a[0], a[1] = a[1], a[0]
        u[0], u[1] = u[1], u[0]

    def swap_cols():
        for row in (a, v):
            row[0][0], row[0][1] = row[0][1], row[0][0]
            row[1][0], row[1][1] = row[1][1], row[1][0]

    def row_op(q):  # row1 <- row1 - q * row0
        a[1][0] -= q * a[0][0]
        a[1][1] -= q * a[0][1]
        u[1][0] -= q * u[0][0]
        u[1][1] -= q * u[0][1]

    def col_op(q):  # col1 <- col1 - q * col0
        a[0][1] -= q * a[0][0]
        a[1][1] -= q * a[1][0]
        v[0][1] -= q * v[0][0]
        v[1][1] -= q * v[1][0]

    for _ in range(256):
        if a[0][0] == 0:
            if a[1][0] != 0:
                swap_rows()
            elif a[0][1] != 0:
                swap_cols()
        if a[1][0] != 0:
            row_op(a[1][0] // a[0][0])
            if a[1][0] != 0:
                swap_rows()
            continue
        if a[0][1] != 0:
            col_op(a[0][1] // a[0][0])
            if a[0][1] != 0:
                swap_cols()
            continue
        if a[1][1] % a[0][0] != 0:
            # merge the second column into the first and re-reduce
            a[0][0] += a[0][1]
            a[1][0] += a[1][1]
            v[0][0] += v[0][1]
            v[1][0] += v[1][1]
            continue
        break
    else:  # pragma: no cover
        raise ModelError("Smith reduction did not terminate")

    if a[0][0] < 0:
        a[0][0], u[0][0], u[0][1] = -a[0][0], -u[0][0], -u[0][1]
    if a[1][1] < 0:
        a[1][1], u[1][0], u[1][1] = -a[1][1], -u[1][0], -u[1][1]
    un = np.array(u, dtype=object)
    vn = np.array(v, dtype=object)
    dn = np.array(a, dtype=object)
    assert dn[0][1] == 0 and dn[1][0] == 0
    assert (un @ np.array([[int(m[0][0]), int(m[0][1])],
                           [int(m[1][0]), int(m[1][1])]], dtype=object) @ vn == dn).all()
    return un, dn, vn


def _int_mat_pow(m: list[list[int]], n: int) -> list[list[int]]:
    out = [[1, 0], [0, 1]]
    base = [list(r) for r in m]
    k = n
    while k:
        if k & 1:
            out = [[out[0][0] * base[0][0] + out[0][1] * base[1][0],
                    out[0][0] * base[0][1] + out[0][1] * base[1][1]],
                   [out[1][0] * base[0][0] + out[1][1] * base[1][0],
                    out[1][0] * base[0][1] + out[1][1] * base[1][1]]]
        base = [[base[0][0] * base[0][0] + base[0][1] * base[1][0],
                 base[0][0] * base[0][1] + base[0][1] * base[1][1]],
                [base[1][0] * base[0][0] + base[1][1] * base[1][0],
                 base[1][0] * base[0][1] + base[1][1] * base[1][1]]]
        k >>= 1
    return out


def lattice_fixed_points(n: int) -> tuple[int, list[tuple[int, int, int]]]:
    """Exact fixed points of the n-th power of the linear torus map.

    Returns (count, points) with each point as integer numerators (a, b)
    over a common denominator L: the point is (a/L, b/L).
    """
    an = _int_mat_pow([[2, 1], [1, 1]], n)
    m = [[an[0][0] - 1, an[0][1]], [an[1][0], an[1][1] - 1]]
    _, d, v = smith_normal_form_2x2(m)
    d1, d2 = int(d[0][0]), int(d[1][1])
    lden = d1 * d2
    pts = []
    for i in range(d1):
        for j in range(d2):
            a = (int(v[0][0]) * i * d2 + int(v[0][1]) * j * d1) % lden
            b = (int(v[1][0]) * i * d2 + int(v[1][1]) * j * d1) % lden
            pts.append((a, b, lden))
    count = lden
    assert len(set((a, b) for a, b, _ in pts)) == count
    return count, pts


def _reduced_key(a: int, b: int, lden: int):
    g1 = gcd(a, lden) or lden
    g2 = gcd(b, lden) or lden
    return (a // g1, lden // g1, b // g2, lden // g2)


def _lattice_orbits(model, max_period: int) -> list[PeriodicOrbit]:
    seen: set = set()
    orbits = []
    for n in range(1, max_period + 1):
        _, pts = lattice_fixed_points(n)
        for a0, b0, lden in pts:
            key0 = _reduced_key(a0, b0, lden)
            if key0 in seen:
                continue
            cycle = []
            a, b = a0, b0
            while True:
                cycle.append((a, b))
                seen.add(_reduced_key(a, b, lden))
                a, b = (2 * a + b) % lden, (a + b) % lden
                if (a, b) == (a0, b0):
                    break
            t = len(cycle)
            if t != n:
                # least period divides n; already enumerated at its own n
                continue
            fpts = np.array([[ai / lden, bi / lden] for ai, bi in cycle])
            orbits.append(PeriodicOrbit(model=model, points=_rotate_to_base(fpts), period=t))
    orbits.sort(key=PeriodicOrbit.sort_key)
    return orbits


# ----------------------------------------------------------- continuation


@dataclass(frozen=True)
class ContinuationGap:
    """One orbit track that could not be carried to the target parameter."""

    period: int
    base_point: np.ndarray
    parameter: float
    reason: str


def _torus_tol(n: int) -> float:
    # forward-evaluation noise grows with the top multiplier; keep Newton's
    # target above the attainable floor but inside the closure budget
    return min(max(1e-13, (2.7 ** n) * 5e-16), 5e-11)


def _continue_orbit(make_model, pts: np.ndarray, t: int, s_target: float):
    """Carry one orbit track from parameter 0 to s_target. Returns points.

    For the circle family the branch cuts {0, 1/2} never move with the
    parameter, and no periodic orbit can touch them (1/2 falls onto the
    fixed point 0), so the branch itinerary is constant along a track and
    serves as its identity: a Newton step that changes the itinerary has
    jumped to a different orbit and is rejected.
    """
    s_cur = 0.0
    step = CONTINUATION_STEP
    base = pts[0].copy()
    dim = base.size
    word_ref = kernels.circle_itinerary(float(base[0]), 0.0, t) if dim == 1 else None
    s_prev = None
    base_prev = None
    while True:
        s_next = min(s_cur + step, s_target) if s_cur < s_target else s_target
        model = make_model(s_next)
        guess = base
        if s_prev is not None and s_cur > s_prev:
            # secant predictor along the track
            factor = (s_next - s_cur) / (s_cur - s_prev)
            guess = wrap_point(base + wrap_diff(base, base_prev) * factor)
        try:
            if dim == 1:
                x, res, _, conv = kernels.circle_newton_periodic(
                    float(guess[0]), model.s, t, 1e-13, 16
                )
                if not conv or abs(res) > CLOSURE_TOL:
                    raise ConvergenceError("scalar Newton stalled", residual=abs(res))
                new = np.array([x])
                ok = bool(
                    np.array_equal(kernels.circle_itinerary(x, model.s, t), word_ref)
                )
            else:
                new = refine_newton(model, guess, t, tol=_torus_tol(t), max_iter=16)
                ok = flat_distance(new, base) <= CONTINUATION_MAX_MOVE or s_next == 0.0
                if ok:
                    q = new.copy()
                    for _ in range(1, t):
                        q = model.eval_point(q)
                        if flat_distance(q, new) <= LEAST_PERIOD_TOL:
                            ok = False
                            break
        except ConvergenceError:
            ok = False
        if ok:
            s_prev, base_prev = s_cur, base
            base = new
            s_cur = s_next
            if s_cur >= s_target:
                break
            step = min(step * 2.0, CONTINUATION_STEP)
            continue
        step *= 0.5
        if step < CONTINUATION_MIN_STEP:
            raise ConvergenceError(
                f"continuation stalled at parameter {s_cur:.6g} (period {t})",
                residual=None,
            )
    model = make_model(s_target)
    out = np.empty((t, dim))
    out[0] = base
    for j in range(1, t):
        out[j] = model.eval_point(out[j - 1])
    return out


def refined_orbit_point(model, base: np.ndarray, j: int) -> np.ndarray:
    p = base.copy()
    for _ in range(j):
        p = model.eval_point(p)
    return p


def _continued_orbits(model, max_period: int) -> list[PeriodicOrbit]:
    if isinstance(model, CircleFamily):
        base_model = CircleFamily(0.0)
        base_orbits = _symbolic_circle_orbits(base_model, max_period)
        make = lambda s: CircleFamily(s, family=model.family)
    else:
        base_model = TorusFamily(0.0)
        base_orbits = _lattice_orbits(base_model, max_period)
        make = lambda s: TorusFamily(s, family=model.family)
    orbits = []
    gaps = []
    for ob in base_orbits:
        try:
            pts = _continue_orbit(make, ob.points, ob.period, model.s)
            cont = PeriodicOrbit(model=model, points=_rotate_to_base(pts), period=ob.period)
            # strong clustering near a critical point can push two points of
            # a genuine orbit inside the least-period tolerance; such an
            # orbit cannot be represented within the invariants, so it is
            # surfaced as a gap instead of returned
            cont.validate()
            orbits.append(cont)
        except (ConvergenceError, ModelError) as exc:
            gaps.append(
                ContinuationGap(
                    period=ob.period,
                    base_point=ob.points[0].copy(),
                    parameter=model.s,
                    reason=str(exc),
                )
            )
    # two tracks collapsing onto one orbit means a lost orbit, not a dupe;
    # collided tracks carry identical point lists and sort adjacently,
    # while distinct orbits may still have very close base points
    orbits.sort(key=PeriodicOrbit.sort_key)
    kept = []
    for ob in orbits:
        collided = False
        for prev in reversed(kept):
            if prev.period != ob.period:
                break
            if flat_distance(prev.points[0], ob.points[0]) > 1e-6:
                break
            gapmax = max(
                flat_distance(prev.points[j], ob.points[j]) for j in range(ob.period)
            )
            if gapmax <= 1e-9:
                collided = True
                break
        if collided:
            gaps.append(
                ContinuationGap(
                    period=ob.period,
                    base_point=ob.points[0].copy(),
                    parameter=model.s,
                    reason="track collided with another orbit",
                )
            )
        else:
            kept.append(ob)
    if gaps:
        raise ContinuationGapError(
            f"{len(gaps)} orbit track(s) lost during continuation to s={model.s:g}",
            found=kept,
            gaps=gaps,
        )
    return kept


# ------------------------------------------------------------- public API


def find_periodic_points(model: MapModel, max_period: int) -> list[PeriodicOrbit]:
    """All periodic orbits of least period <= max_period, sorted.

    Sorted by (period, base point); each orbit appears once (no cyclic
    rotations, no divisor-period duplicates).  Raises ContinuationGapError
    (carrying everything found) if a continuation track is lost.
    """
    if max_period < 1:
        raise ModelError(f"max_period must be >= 1, got {max_period}")
    if isinstance(model, CircleFamily):
        if model.s < 1.0:
            return _symbolic_circle_orbits(model, max_period)
        return _continued_orbits(model, max_period)
    if isinstance(model, TorusFamily):
        if model.s == 0.0:
            return _lattice_orbits(model, max_period)
        return _continued_orbits(model, max_period)
    if isinstance(model, CustomCircleMap):
        from hypcert.maps import min_conorm_scan

        if min_conorm_scan(model, 4096).value > 1.0:
            return _symbolic_circle_orbits(model, max_period)
        raise UnsupportedModelError(
            "custom circle map is not uniformly expanding; no continuation path"
        )
    raise UnsupportedModelError(
        f"no enumeration strategy for model family {model.family!r}"
    )


def count_fixed_points(orbits: list[PeriodicOrbit], n: int) -> int:
    """Number of fixed points of the n-th iterate covered by the orbit list."""
    return sum(ob.period for ob in orbits if n % ob.period == 0)


def orbit_multipliers(orbit: PeriodicOrbit) -> OrbitMultipliers:
    """Products of (restricted) derivative norms along one cycle."""
    cocycle = orbit.cocycle
    if orbit.dim == 1:
        inv = 1.0
        for j in range(orbit.period):
            d = cocycle[j][0, 0]
            inv *= 1.0 / abs(d)
        return OrbitMultipliers(inv, None, None)
    inv = 1.0
    for j in range(orbit.period):
        inv *= spectral_norm(np.linalg.inv(cocycle[j]))
    vs, vu = period_map_splitting(orbit.period_map)
    stab = 1.0
    unst_inv = 1.0
    ws, wu = vs.copy(), vu.copy()
    for j in range(orbit.period):
        nws = cocycle[j] @ ws
        nwu = cocycle[j] @ wu
        rs = float(np.linalg.norm(nws)) / float(np.linalg.norm(ws))
        ru = float(np.linalg.norm(nwu)) / float(np.linalg.norm(wu))
        stab *= rs
        unst_inv *= 1.0 / ru
        ws, wu = nws / np.linalg.norm(nws), nwu / np.linalg.norm(nwu)
    return OrbitMultipliers(inv, stab, unst_inv)


def period_map_splitting(pm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable and unstable unit eigendirections of a 2x2 period map.

    A scalar multiple of the identity leaves every line invariant, so a
    coordinate pair is returned; a complex or defective spectrum has no
    real eigenline splitting and raises.
    """
    pm = np.asarray(pm, dtype=np.float64)
    tr = float(pm[0, 0] + pm[1, 1])
    det = float(pm[0, 0] * pm[1, 1] - pm[0, 1] * pm[1, 0])
    disc = tr * tr - 4.0 * det
    off = abs(float(pm[0, 1])) + abs(float(pm[1, 0]))
    scale = max(spectral_norm(pm), 1.0)
    if off <= 1e-14 * scale and abs(float(pm[0, 0]) - float(pm[1, 1])) <= 1e-14 * scale:
        return np.array([1.0, 0.0]), np.array([0.0, 1.0])
    if disc <= 0.0:
        raise SplittingError(
            "period-map spectrum is complex or defective: no stable/unstable lines"
        )
    lam1 = (tr + math.copysign(math.sqrt(disc), tr)) / 2.0
    lam2 = det / lam1 if lam1 != 0.0 else (tr - math.copysign(math.sqrt(disc), tr)) / 2.0
    lams, lamu = (lam1, lam2) if abs(lam1) <= abs(lam2) else (lam2, lam1)
    if abs(abs(lams) - abs(lamu)) <= 1e-14 * max(abs(lamu), 1.0):
        raise SplittingError(
            "period-map eigenvalue moduli coincide: splitting undefined"
        )
    return _eigvec_2x2(pm, lams), _eigvec_2x2(pm, lamu)


def _eigvec_2x2(m: np.ndarray, lam: float) -> np.ndarray:
    a, b = float(m[0, 0]) - lam, float(m[0, 1])
    c, d = float(m[1, 0]), float(m[1, 1]) - lam
    # pick the better-conditioned row of (m - lam I)
    if math.hypot(a, b) >= math.hypot(c, d):
        v = np.array([-b, a])
    else:
        v = np.array([-d, c])
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise SplittingError("defective period map: eigenvector is not determined")
    return v / nv


def export_orbits_csv(orbits: list[PeriodicOrbit], path) -> None:
    """One row per orbit point; multiplier data repeated at orbit level."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["orbit_id", "family", "period", "point_index", "x", "y",
             "inverse_norm_product", "eig_real_1", "eig_imag_1",
             "eig_real_2", "eig_imag_2"]
        )
        for oid, ob in enumerate(orbits):
            mult = orbit_multipliers(ob)
            eigs = np.atleast_1d(ob.eigenvalues)
            row_eigs = []
            for k in range(2):
                if k < eigs.size:
                    row_eigs += [f"{eigs[k].real:.17g}", f"{eigs[k].imag:.17g}"]
                else:
                    row_eigs += ["", ""]
            for idx, p in enumerate(ob.points):
                w.writerow(
                    [oid, ob.model.family, ob.period, idx,
                     f"{p[0]:.17g}", f"{p[1]:.17g}" if p.size > 1 else "",
                     f"{mult.inverse_norm_product:.17g}", *row_eigs]
                )
