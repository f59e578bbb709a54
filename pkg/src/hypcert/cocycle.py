"""Derivative-cocycle analysis along orbits.

The objects here consume log-norm sequences a_j attached to an orbit or
segment and produce:

* expansion certificates over periodic data (a single rate common to all
  orbits, valid when it stays below 1),
* hyperbolic-time detection (indices whose backward partial sums stay
  under every linear budget, with no tolerance slack),
* Pliss-type density lower bounds for those times,
* finite-horizon Lyapunov exponent estimates via QR orthogonalization,
* an explicitly verified adapted metric that turns an averaged expansion
  certificate into a one-step expansion factor above 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from hypcert import kernels
from hypcert.errors import (
    AdaptedMetricError,
    PreconditionError,
    SplittingError,
    ZeroDerivativeError,
)
from hypcert.maps import (
    CircleFamily,
    MapModel,
    OrbitSegment,
    TorusFamily,
    conorm,
    flat_distance,
)
from hypcert.orbits import PeriodicOrbit, orbit_multipliers, period_map_splitting

KIND_INVERSE_NORM = "inverse_norm"
KIND_STABLE_NORM = "stable_norm"
KIND_UNSTABLE_INVERSE_NORM = "unstable_inverse_norm"
KINDS = (KIND_INVERSE_NORM, KIND_STABLE_NORM, KIND_UNSTABLE_INVERSE_NORM)


@dataclass
class CocycleSequence:
    """Log-norm values a_j along an orbit segment."""

    values: np.ndarray
    kind: str
    source: str = ""

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown cocycle kind {self.kind!r}")
        if self.values.size < 1:
            raise PreconditionError("cocycle sequence must have at least one entry")
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("cocycle sequence entries must be finite")

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class MarginRecord:
    """Geometric-mean growth factor of one orbit's product."""

    orbit_index: int
    period: int
    margin: float


@dataclass(frozen=True)
class NUECertificate:
    """Common expansion rate over a periodic-orbit family.

    ``varsigma`` is the largest per-orbit geometric mean of the inverse
    derivative-norm product; the certificate passes when it is below 1,
    and then every listed orbit contracts backwards at that uniform rate.
    """

    max_period: int
    varsigma: float
    eta: float
    margins: tuple[MarginRecord, ...]
    passed: bool

    @property
    def violations(self) -> tuple[MarginRecord, ...]:
        return tuple(m for m in self.margins if not m.margin < 1.0)


@dataclass(frozen=True)
class NUHCertificate:
    """Joint contraction/expansion rate over a periodic-orbit family."""

    max_period: int
    varsigma: float
    eta: float
    stable_margins: tuple[MarginRecord, ...]
    unstable_margins: tuple[MarginRecord, ...]
    splittings: tuple[tuple[int, np.ndarray, np.ndarray], ...]
    passed: bool
    reason: str | None = None

    @property
    def violations(self) -> tuple[MarginRecord, ...]:
        bad = [m for m in self.stable_margins if not m.margin < 1.0]
        bad += [m for m in self.unstable_margins if not m.margin < 1.0]
        return tuple(bad)


@dataclass(frozen=True)
class AdaptedMetric:
    """Conformal weight making expansion visible in a single step."""

    horizon: int
    varsigma: float
    sigma: float
    grid: int
    weight: Callable[[float], float]
    argmin: float


@dataclass(frozen=True)
class ShadowedTimeCheck:
    passed: bool
    failing_prefix: int | None
    level: float


# ------------------------------------------------------------- sequences


def log_conorm_sequence(model: MapModel, segment: OrbitSegment, kind: str,
                        directions: np.ndarray | None = None,
                        source: str = "") -> CocycleSequence:
    """Per-step log norms along a segment.

    ``inverse_norm`` takes the full inverse-Jacobian norm.  The restricted
    kinds need ``directions``: one line per segment step, transported by
    the caller; the restricted norm of a 1-dimensional restriction equals
    the stretch of that direction vector.
    """
    n = segment.length
    if n < 1:
        raise PreconditionError("segment must contain at least one step")
    vals = np.empty(n)
    if kind == KIND_INVERSE_NORM:
        for j in range(n):
            c = conorm(model.jacobian(segment.points[j]))
            if c <= 0.0:
                raise ZeroDerivativeError(
                    f"singular Jacobian at step {j}: no inverse norm"
                )
            vals[j] = -math.log(c)
    else:
        if directions is None:
            raise PreconditionError(
                f"kind {kind!r} requires a transported direction per step"
            )
        directions = np.asarray(directions, dtype=np.float64)
        if directions.shape != (n, segment.points.shape[1]):
            raise PreconditionError(
                f"directions shape {directions.shape} does not match segment"
            )
        for j in range(n):
            v = directions[j]
            nv = float(np.linalg.norm(v))
            if nv == 0.0:
                raise PreconditionError(f"zero direction vector at step {j}")
            w = model.jacobian(segment.points[j]) @ v
            nw = float(np.linalg.norm(w))
            if kind == KIND_STABLE_NORM:
                vals[j] = math.log(nw / nv)
            else:
                if nw == 0.0:
                    raise ZeroDerivativeError(
                        f"direction collapses at step {j}: no inverse norm"
                    )
                vals[j] = math.log(nv / nw)
    return CocycleSequence(values=vals, kind=kind, source=source)


def transport_directions(model: MapModel, segment: OrbitSegment,
                         v0) -> np.ndarray:
    """Push a line along a segment: v_{j+1} = Dg(x_j) v_j, renormalized."""
    n = segment.length
    v = np.asarray(v0, dtype=np.float64)
    v = v / np.linalg.norm(v)
    out = np.empty((n, v.size))
    for j in range(n):
        out[j] = v
        w = model.jacobian(segment.points[j]) @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            raise ZeroDerivativeError(f"direction collapses at step {j}")
        v = w / nw
    return out


# ----------------------------------------------------------- certificates


def _geometric_margin(product: float, t: int) -> float:
    # base-2 form keeps dyadic products exact: log2 of a power of two is
    # an integer, so constant-derivative families certify with no rounding
    return 2.0 ** (math.log2(product) / t)


def nue_certificate(orbits: list[PeriodicOrbit]) -> NUECertificate:
    """Uniform backward-contraction rate over the orbit family."""
    if not orbits:
        raise PreconditionError("certificate needs at least one orbit")
    margins = []
    for idx, ob in enumerate(orbits):
        prod = orbit_multipliers(ob).inverse_norm_product
        margins.append(MarginRecord(idx, ob.period, _geometric_margin(prod, ob.period)))
    varsigma = max(m.margin for m in margins)
    return NUECertificate(
        max_period=max(ob.period for ob in orbits),
        varsigma=varsigma,
        eta=math.log(varsigma),
        margins=tuple(margins),
        passed=varsigma < 1.0,
    )


def nuh_certificate(orbits: list[PeriodicOrbit]) -> NUHCertificate:
    """Common rate for stable contraction and unstable backward contraction."""
    if not orbits:
        raise PreconditionError("certificate needs at least one orbit")
    stable = []
    unstable = []
    splittings = []
    for idx, ob in enumerate(orbits):
        if ob.dim != 2:
            return NUHCertificate(
                max_period=max(o.period for o in orbits), varsigma=math.inf,
                eta=math.inf, stable_margins=(), unstable_margins=(),
                splittings=(), passed=False,
                reason="stable/unstable splitting needs a two-dimensional model",
            )
        try:
            vs, vu = period_map_splitting(ob.period_map)
            mult = orbit_multipliers(ob)
        except SplittingError as exc:
            return NUHCertificate(
                max_period=max(o.period for o in orbits), varsigma=math.inf,
                eta=math.inf, stable_margins=(), unstable_margins=(),
                splittings=(), passed=False,
                reason=f"orbit {idx}: {exc}",
            )
        stable.append(
            MarginRecord(idx, ob.period, _geometric_margin(mult.stable_norm_product, ob.period))
        )
        unstable.append(
            MarginRecord(
                idx, ob.period,
                _geometric_margin(mult.unstable_inverse_norm_product, ob.period),
            )
        )
        splittings.append((idx, vs, vu))
    varsigma = max(m.margin for m in stable + unstable)
    return NUHCertificate(
        max_period=max(ob.period for ob in orbits),
        varsigma=varsigma,
        eta=math.log(varsigma),
        stable_margins=tuple(stable),
        unstable_margins=tuple(unstable),
        splittings=tuple(splittings),
        passed=varsigma < 1.0,
    )


# -------------------------------------------------------- hyperbolic times


def hyperbolic_times(seq: CocycleSequence, varsigma: float) -> np.ndarray:
    """1-based indices k whose backward sums beat every linear budget.

    k is returned iff sum_{j=1..i} a_{k-j} <= i log(varsigma) for every
    i = 1..k.  Exact definition, no slack.
    """
    if not 0.0 < varsigma < 1.0:
        raise PreconditionError(f"rate must lie in (0, 1), got {varsigma}")
    return kernels.hyp_time_indices(seq.values, math.log(varsigma))


def pliss_density(seq: CocycleSequence, varsigma: float,
                  varsigma_prime: float | None = None) -> tuple[int, int]:
    """(guaranteed_count, actual_count) of hyperbolic times at the weaker rate.

    The guarantee is the standard density bound
    ceil(n (log s' - log s) / (log s' - a_min)) for rates s < s' < 1; it
    needs mean(a) <= log s and refuses to answer otherwise.  The actual
    count uses the exact backward-sum test at level s'.
    """
    if varsigma_prime is None:
        varsigma_prime = math.sqrt(varsigma)
    if not 0.0 < varsigma < varsigma_prime < 1.0:
        raise PreconditionError(
            f"need 0 < rate {varsigma} < weaker rate {varsigma_prime} < 1"
        )
    a = seq.values
    n = a.size
    log_s = math.log(varsigma)
    log_sp = math.log(varsigma_prime)
    mean = float(np.mean(a))
    if mean > log_s:
        raise PreconditionError(
            f"mean log norm {mean:.6g} exceeds log rate {log_s:.6g}: "
            "the density bound does not apply"
        )
    a_min = float(np.min(a))
    theta = (log_sp - log_s) / (log_sp - a_min)
    guaranteed = math.ceil(n * theta)
    actual = int(hyperbolic_times(seq, varsigma_prime).size)
    return guaranteed, actual


def verify_shadowed_hyperbolic_time(p_orbit: OrbitSegment, x_orbit: OrbitSegment,
                                    n_prime: int, varsigma_prime: float,
                                    delta_prime: float = 1e-3) -> ShadowedTimeCheck:
    """Carry a hyperbolic time from a periodic segment to a nearby one.

    ``n_prime`` must be a varsigma_prime-hyperbolic time of ``p_orbit``;
    the check asserts it is a sqrt(varsigma_prime)-hyperbolic time of
    ``x_orbit``'s sequence, reporting the first failing prefix otherwise.
    """
    if p_orbit.length != x_orbit.length:
        raise PreconditionError("segments of mismatched length")
    if not 1 <= n_prime <= p_orbit.length:
        raise PreconditionError(f"index {n_prime} outside segment of length {p_orbit.length}")
    gap = max(
        flat_distance(p_orbit.points[j], x_orbit.points[j])
        for j in range(p_orbit.length + 1)
    )
    if gap > delta_prime:
        raise PreconditionError(
            f"segments are {gap:.3e} apart, beyond the shadowing width {delta_prime:.1e}"
        )
    p_seq = log_conorm_sequence(p_orbit.model, p_orbit, KIND_INVERSE_NORM)
    if n_prime not in set(int(k) for k in hyperbolic_times(p_seq, varsigma_prime)):
        raise PreconditionError(
            f"{n_prime} is not a hyperbolic time of the periodic segment"
        )
    x_seq = log_conorm_sequence(x_orbit.model, x_orbit, KIND_INVERSE_NORM)
    level = math.log(math.sqrt(varsigma_prime))
    run = 0.0
    for i in range(1, n_prime + 1):
        run += float(x_seq.values[n_prime - i])
        if run > i * level:
            return ShadowedTimeCheck(passed=False, failing_prefix=i,
                                     level=math.sqrt(varsigma_prime))
    return ShadowedTimeCheck(passed=True, failing_prefix=None,
                             level=math.sqrt(varsigma_prime))


# ------------------------------------------------------- lyapunov spectrum


def lyapunov_spectrum(model: MapModel, x, n: int) -> np.ndarray:
    """Finite-horizon exponent estimates, sorted descending.

    QR re-orthogonalization per step; exponents are the averaged logs of
    the diagonal stretch factors.  Estimates only: no convergence rate is
    claimed for generic points.
    """
    if n < 1:
        raise PreconditionError(f"horizon must be >= 1, got {n}")
    p = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if isinstance(model, CircleFamily):
        logs = kernels.circle_log_deriv_orbit(float(p[0]), model.s, n)
        return np.array([float(np.sum(logs) / n)])
    if isinstance(model, TorusFamily):
        logs = kernels.torus_qr_logs(float(p[0]), float(p[1]), model.s, n)
        ex = np.sum(logs, axis=0) / n
        return np.sort(ex)[::-1]
    if model.dim == 1:
        total = 0.0
        q = p.copy()
        for _ in range(n):
            total += math.log(abs(float(model.jacobian(q)[0, 0])))
            q = model.eval_point(q)
        return np.array([total / n])
    sums = np.zeros(model.dim)
    q_mat = np.eye(model.dim)
    q = p.copy()
    for _ in range(n):
        m = model.jacobian(q) @ q_mat
        q_mat, r = np.linalg.qr(m)
        diag = np.diag(r).copy()
        # fix QR sign ambiguity so the diagonal reads as stretch factors
        signs = np.sign(diag)
        signs[signs == 0.0] = 1.0
        q_mat = q_mat * signs
        sums += np.log(np.abs(diag))
        q = model.eval_point(q)
    return np.sort(sums / n)[::-1]


# --------------------------------------------------------- adapted metric


def _circle_weight_data(model: CircleFamily, xs: np.ndarray, sigma0: float,
                        horizon: int):
    """Vectorized weight W and first-step derivative over an array of points."""
    s = model.s
    two_pi = 2.0 * math.pi
    w = np.ones_like(xs)
    u = np.ones_like(xs)
    x = xs.copy()
    first_deriv = None
    for j in range(horizon - 1):
        d = 2.0 + s * np.cos(two_pi * x)
        if j == 0:
            first_deriv = d.copy()
        bad = np.abs(d) < 1e-300
        if np.any(bad):
            k = int(np.argmax(bad))
            raise AdaptedMetricError(
                f"derivative vanishes along the horizon sums at x={float(xs[k])!r}",
                point=float(xs[k]),
            )
        u = u / np.abs(d)
        w = w + (sigma0 ** (j + 1)) * u
        x = 2.0 * x + (s / two_pi) * np.sin(two_pi * x)
        x -= np.floor(x)
    if first_deriv is None:
        first_deriv = 2.0 + s * np.cos(two_pi * xs)
    return w, first_deriv


def adapted_metric(model: MapModel, cert: NUECertificate, horizon: int = 8,
                   grid: int = 2 ** 14) -> AdaptedMetric:
    """Grid-verified conformal metric with one-step expansion above 1.

    The weight is the horizon-truncated sum
    W(x) = sum_{j<N} sigma0^j ||[Dg^j(x)]^{-1}|| with sigma0 the inverse
    square root of the certified rate; measuring vectors as |v| / W(x)
    makes every step expand by sigma(x) = |g'(x)| W(x) / W(g(x)), whose
    grid minimum is the returned factor.
    """
    if not cert.passed:
        raise PreconditionError("adapted metric needs a passing expansion certificate")
    if model.dim != 1:
        raise PreconditionError("adapted metric is built for circle models only")
    if horizon < 1 or grid < 2:
        raise PreconditionError("horizon must be >= 1 and grid >= 2")
    if not isinstance(model, CircleFamily):
        raise PreconditionError("adapted metric needs the closed-form circle family")
    sigma0 = cert.varsigma ** -0.5
    xs = np.arange(grid, dtype=np.float64) / grid
    w_here, deriv = _circle_weight_data(model, xs, sigma0, horizon)
    if np.any(np.abs(deriv) < 1e-300):
        k = int(np.argmax(np.abs(deriv) < 1e-300))
        raise AdaptedMetricError(
            f"derivative vanishes on the grid at x={float(xs[k])!r}: "
            "no horizon can certify expansion",
            sigma=0.0, point=float(xs[k]),
        )
    gx = xs * 2.0 + (model.s / (2.0 * math.pi)) * np.sin(2.0 * math.pi * xs)
    gx -= np.floor(gx)
    w_next, _ = _circle_weight_data(model, gx, sigma0, horizon)
    sigma_all = np.abs(deriv) * w_here / w_next
    k = int(np.argmin(sigma_all))
    sigma = float(sigma_all[k])
    if not sigma > 1.0:
        raise AdaptedMetricError(
            f"expansion factor {sigma:.6g} at x={float(xs[k])!r} does not exceed 1 "
            f"at horizon {horizon}: increase the horizon",
            sigma=sigma, point=float(xs[k]),
        )

    def weight(x: float) -> float:
        arr = np.array([x - math.floor(x)])
        wv, _ = _circle_weight_data(model, arr, sigma0, horizon)
        return float(wv[0])

    return AdaptedMetric(horizon=horizon, varsigma=cert.varsigma, sigma=sigma,
                         grid=grid, weight=weight, argmin=float(xs[k]))


# ------------------------------------------------------------------- csv


def write_cocycle_csv(seq: CocycleSequence, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", seq.kind, "source", seq.source])
        w.writerow(["index", "value"])
        for j, v in enumerate(seq.values):
            w.writerow([j, f"{v:.17g}"])


def read_cocycle_csv(path) -> CocycleSequence:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0][0] != "kind" or rows[1] != ["index", "value"]:
        raise PreconditionError(f"{path}: not a cocycle CSV")
    kind = rows[0][1]
    source = rows[0][3] if len(rows[0]) > 3 else ""
    vals = np.array([float(r[1]) for r in rows[2:]])
    return CocycleSequence(values=vals, kind=kind, source=source)
