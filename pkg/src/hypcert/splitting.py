"""Invariant splittings: cone fields, domination, extension, certificates.

A splitting assigns to each sampled point a pair of subspaces exchanged
by the derivative.  Periodic orbits provide exact splittings (period-map
eigenspaces transported by the cocycle); cone iteration produces them on
any map-closed sample set; the Gram-Schmidt extension carries a field to
nearby targets.  Certificates quantify domination and uniform
hyperbolicity over the sampled data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from hypcert.errors import (
    ConeInvarianceError,
    ExtensionError,
    PreconditionError,
    SplittingError,
    UnsupportedModelError,
)
from hypcert.maps import MapModel
from hypcert.orbits import PeriodicOrbit, period_map_splitting

ORTHONORMAL_TOL = 1e-12
INVARIANCE_TOL = 1e-8
MATCH_TOL = 1e-9
MODULUS_CAP = 0.1


def gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    """Orthonormalize columns, keeping their span and order.

    Deterministic orientation: each output column has its largest-modulus
    entry positive.  Dependent input raises.
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    d, k = v.shape
    out = np.empty((d, k))
    for j in range(k):
        w = v[:, j].copy()
        for q in range(j):
            w -= (out[:, q] @ w) * out[:, q]
        nw = float(np.linalg.norm(w))
        if nw <= 1e-12 * max(1.0, float(np.linalg.norm(v[:, j]))):
            raise PreconditionError(
                f"column {j} is linearly dependent on the previous ones"
            )
        w /= nw
        if w[int(np.argmax(np.abs(w)))] < 0.0:
            w = -w
        out[:, j] = w
    return out


def principal_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between two subspaces, in radians.

    Inputs are basis matrices with one column per vector; they are
    orthonormalized internally.  Zero-dimensional subspaces compare equal.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise PreconditionError(
            f"subspace dimensions differ: {a.shape} vs {b.shape}"
        )
    if a.shape[1] == 0:
        return 0.0
    qa = gram_schmidt(a)
    qb = gram_schmidt(b)
    sig = np.linalg.svd(qa.T @ qb, compute_uv=False)
    cmin = min(1.0, max(-1.0, float(np.min(sig))))
    if cmin * cmin <= 0.5:
        return math.acos(cmin)
    # small angles: arccos loses half the digits near 1, the sine form does not
    resid = qa - qb @ (qb.T @ qa)
    smax = float(np.max(np.linalg.svd(resid, compute_uv=False)))
    return math.asin(min(1.0, smax))


def _line_angle(v: np.ndarray, w: np.ndarray) -> float:
    nv = float(np.linalg.norm(v))
    nw = float(np.linalg.norm(w))
    if nv == 0.0 or nw == 0.0:
        raise PreconditionError("zero vector has no direction")
    c = abs(float(v @ w)) / (nv * nw)
    return math.acos(min(1.0, c))


def _check_orthonormal(basis: np.ndarray, label: str) -> None:
    k = basis.shape[1]
    if k == 0:
        return
    gram = basis.T @ basis
    if float(np.max(np.abs(gram - np.eye(k)))) > ORTHONORMAL_TOL:
        raise PreconditionError(f"{label} basis is not orthonormal")


def _wrapped_diffs(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    # pairwise displacement on the flat torus/circle, shape (q, m, d)
    diff = queries[:, None, :] - points[None, :, :]
    return diff - np.round(diff)


def _match_indices(points: np.ndarray, queries: np.ndarray,
                   tol: float = MATCH_TOL) -> np.ndarray:
    dist = np.linalg.norm(_wrapped_diffs(points, queries), axis=2)
    idx = np.argmin(dist, axis=1)
    best = dist[np.arange(queries.shape[0]), idx]
    idx[best > tol] = -1
    return idx


@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis of a tangent subspace at a point."""

    basis: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis",
                           np.atleast_2d(np.asarray(self.basis, dtype=np.float64)))
        object.__setattr__(self, "point",
                           np.atleast_1d(np.asarray(self.point, dtype=np.float64)))
        _check_orthonormal(self.basis, "subspace")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class ConeSpec:
    """Cone pair about a reference stable/unstable frame at one point.

    The unstable cone of width a holds the vectors v = v_s + v_u with
    a |v_s| < |v_u| in the frame decomposition; the stable cone is the
    mirror image.  Smaller width means a wider cone.
    """

    point: np.ndarray
    stable_axis: np.ndarray
    unstable_axis: np.ndarray
    width: float

    def __post_init__(self):
        object.__setattr__(self, "point",
                           np.atleast_1d(np.asarray(self.point, dtype=np.float64)))
        s = np.asarray(self.stable_axis, dtype=np.float64)
        u = np.asarray(self.unstable_axis, dtype=np.float64)
        ns, nu = float(np.linalg.norm(s)), float(np.linalg.norm(u))
        if ns == 0.0 or nu == 0.0:
            raise PreconditionError("cone axes must be nonzero")
        object.__setattr__(self, "stable_axis", s / ns)
        object.__setattr__(self, "unstable_axis", u / nu)
        if not 0.0 < self.width < 1.0:
            raise PreconditionError(f"cone width must lie in (0, 1), got {self.width}")
        frame = np.column_stack([self.stable_axis, self.unstable_axis])
        if abs(float(np.linalg.det(frame))) < 1e-12:
            raise PreconditionError("cone axes are parallel")
        object.__setattr__(self, "_frame", frame)

    def decompose(self, v: np.ndarray) -> tuple[float, float]:
        alpha, beta = np.linalg.solve(self._frame, np.asarray(v, dtype=np.float64))
        return float(alpha), float(beta)

    def in_unstable_cone(self, v: np.ndarray) -> bool:
        alpha, beta = self.decompose(v)
        return self.width * abs(alpha) < abs(beta)

    def in_stable_cone(self, v: np.ndarray) -> bool:
        alpha, beta = self.decompose(v)
        return self.width * abs(beta) < abs(alpha)


@dataclass(frozen=True)
class ContinuityTable:
    """Empirical modulus of continuity: max angle within each distance."""

    edges: np.ndarray
    angles: np.ndarray

    def radius_for(self, cap: float = MODULUS_CAP) -> float:
        """Largest tabulated distance whose modulus stays below cap."""
        below = self.angles < cap
        if not np.any(below):
            return 0.0
        return float(self.edges[int(np.max(np.nonzero(below)[0]))])


@dataclass
class SplittingField:
    """Per-point subspace pairs over a sample set.

    ``stable[i]`` and ``unstable[i]`` are orthonormal basis matrices at
    ``points[i]`` with constant dimensions summing to the ambient one.
    ``convergence`` records the last inter-step angle change when the
    field came from cone iteration.
    """

    points: np.ndarray
    stable: tuple
    unstable: tuple
    convergence: float | None = None
    modulus: ContinuityTable | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.stable = tuple(
            np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in self.stable
        )
        self.unstable = tuple(
            np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in self.unstable
        )
        m, d = self.points.shape
        if len(self.stable) != m or len(self.unstable) != m:
            raise PreconditionError(
                f"{m} points but {len(self.stable)} stable and "
                f"{len(self.unstable)} unstable subspaces"
            )
        s_dims = {b.shape for b in self.stable}
        u_dims = {b.shape for b in self.unstable}
        if len(s_dims) > 1 or len(u_dims) > 1:
            raise PreconditionError("subspace dimensions vary across the sample")
        if self.stable[0].shape[0] != d or self.unstable[0].shape[0] != d:
            raise PreconditionError("subspace ambient dimension does not match points")
        if self.stable_dim + self.unstable_dim != d:
            raise PreconditionError(
                f"dimensions {self.stable_dim} + {self.unstable_dim} "
                f"do not fill ambient dimension {d}"
            )
        for i in range(m):
            _check_orthonormal(self.stable[i], f"stable[{i}]")
            _check_orthonormal(self.unstable[i], f"unstable[{i}]")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def ambient(self) -> int:
        return self.points.shape[1]

    @property
    def stable_dim(self) -> int:
        return self.stable[0].shape[1]

    @property
    def unstable_dim(self) -> int:
        return self.unstable[0].shape[1]

    def subspaces_at(self, i: int) -> tuple[Subspace, Subspace]:
        return (Subspace(self.stable[i], self.points[i]),
                Subspace(self.unstable[i], self.points[i]))

    def image_indices(self, model: MapModel, tol: float = MATCH_TOL) -> np.ndarray:
        images = np.array([model.eval_point(p) for p in self.points])
        return _match_indices(self.points, images, tol)

    def invariance_residual(self, model: MapModel) -> float:
        """Worst principal angle between pushed and stored subspaces.

        Only points whose image is itself sampled contribute; an orbit-
        closed sample set is checked everywhere.
        """
        fwd = self.image_indices(model)
        worst = 0.0
        for i in range(self.size):
            j = int(fwd[i])
            if j < 0:
                continue
            jac = model.jacobian(self.points[i])
            if self.stable_dim > 0:
                worst = max(worst, principal_angle(jac @ self.stable[i],
                                                   self.stable[j]))
            if self.unstable_dim > 0:
                worst = max(worst, principal_angle(jac @ self.unstable[i],
                                                   self.unstable[j]))
        return worst

    def validate(self, model: MapModel, tol: float = INVARIANCE_TOL) -> None:
        res = self.invariance_residual(model)
        if res > tol:
            raise SplittingError(
                f"field is not invariant: residual {res:.3e} > {tol:.1e}"
            )


@dataclass(frozen=True)
class DominationCertificate:
    """Worst ratio of stable stretch to unstable stretch over l steps."""

    iterate: int
    lam: float
    ratios: np.ndarray
    points: np.ndarray
    passed: bool


@dataclass(frozen=True)
class HyperbolicCertificate:
    """Uniform constants c, lam for both derivative inequality families."""

    c: float
    lam: float
    n_checked: int
    points: np.ndarray
    stable_margins: np.ndarray
    unstable_margins: np.ndarray
    passed: bool


# ------------------------------------------------------ periodic splitting


def periodic_splitting(orbit: PeriodicOrbit) -> SplittingField:
    """Eigen-splitting of the period map, transported along the cycle.

    The base-point stable/unstable lines are the period-map eigenvectors;
    each step pushes them by the Jacobian and renormalizes, so invariance
    holds by construction.  Non-hyperbolic spectra raise.
    """
    if orbit.dim == 1:
        pm = abs(float(orbit.period_map[0, 0]))
        if abs(pm - 1.0) <= 1e-14:
            raise SplittingError("period map has a unit multiplier: not hyperbolic")
        line = np.array([[1.0]])
        trivial = np.zeros((1, 0))
        if pm > 1.0:
            stable, unstable = trivial, line
        else:
            stable, unstable = line, trivial
        return SplittingField(
            points=orbit.points,
            stable=tuple(stable for _ in range(orbit.period)),
            unstable=tuple(unstable for _ in range(orbit.period)),
        )
    if orbit.dim != 2:
        raise UnsupportedModelError("periodic splittings are built for dim <= 2")
    vs, vu = period_map_splitting(orbit.period_map)
    for v in (vs, vu):
        mod = float(np.linalg.norm(orbit.period_map @ v))
        if abs(mod - 1.0) <= 1e-14:
            raise SplittingError(
                "period map has a unit-modulus eigenvalue: not hyperbolic"
            )
    stable = [vs]
    unstable = [vu]
    for j in range(orbit.period - 1):
        jac = orbit.cocycle[j]
        stable.append(jac @ stable[-1])
        unstable.append(jac @ unstable[-1])
        stable[-1] = stable[-1] / np.linalg.norm(stable[-1])
        unstable[-1] = unstable[-1] / np.linalg.norm(unstable[-1])
    return SplittingField(
        points=orbit.points,
        stable=tuple(v.reshape(2, 1) for v in stable),
        unstable=tuple(v.reshape(2, 1) for v in unstable),
    )


def periodic_splitting_field(orbits: list[PeriodicOrbit]) -> SplittingField:
    """Union of per-orbit splittings as one field over all orbit points."""
    if not orbits:
        raise PreconditionError("need at least one orbit")
    fields = [periodic_splitting(ob) for ob in orbits]
    return SplittingField(
        points=np.vstack([f.points for f in fields]),
        stable=tuple(b for f in fields for b in f.stable),
        unstable=tuple(b for f in fields for b in f.unstable),
    )


# ----------------------------------------------------------- cone fields


def initial_cone_field(model: MapModel, samples, width: float,
                       warm_start: bool = True) -> list[ConeSpec]:
    """Cone specs at each sample, about the coordinate axes.

    With ``warm_start`` the axes are steered one derivative step (the
    unstable axis pushed forward from the preimage, the stable axis pulled
    back from the image), which makes moderate widths strictly invariant
    for mildly sheared maps; raw axes often fail the strict check.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if model.dim != 2:
        raise UnsupportedModelError("cone fields need a two-dimensional model")
    if warm_start and not model.invertible:
        raise UnsupportedModelError("warm-started cones need an invertible model")
    e_s = np.array([0.0, 1.0])
    e_u = np.array([1.0, 0.0])
    specs = []
    for p in samples:
        if warm_start:
            back = model.inverse_point(p)
            u = model.jacobian(back) @ e_u
            s = np.linalg.solve(model.jacobian(p), e_s)
        else:
            u, s = e_u, e_s
        specs.append(ConeSpec(point=p, stable_axis=s, unstable_axis=u,
                              width=width))
    return specs


def _cone_rays(spec: ConeSpec, unstable: bool) -> list[np.ndarray]:
    # center plus both boundary rays of the requested cone
    a = spec.width
    if unstable:
        return [spec.unstable_axis,
                spec.stable_axis + a * spec.unstable_axis,
                spec.stable_axis - a * spec.unstable_axis]
    return [spec.stable_axis,
            spec.unstable_axis + a * spec.stable_axis,
            spec.unstable_axis - a * spec.stable_axis]


def cone_field_iterate(model: MapModel, samples, initial: list[ConeSpec],
                       steps: int) -> SplittingField:
    """Contract cone pairs to the invariant splitting over a closed sample.

    Each step pushes unstable directions forward and pulls stable
    directions back through the permutation the map induces on the
    samples.  The initial cones must be strictly invariant under one step;
    this is verified ray by ray before iterating.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if model.dim != 2:
        raise UnsupportedModelError("cone iteration needs a two-dimensional model")
    if not model.invertible:
        raise UnsupportedModelError("cone iteration needs an invertible model")
    if steps < 1:
        raise PreconditionError(f"steps must be >= 1, got {steps}")
    m = samples.shape[0]
    if len(initial) != m:
        raise PreconditionError(
            f"{m} samples but {len(initial)} initial cones"
        )
    images = np.array([model.eval_point(p) for p in samples])
    fwd = _match_indices(samples, images)
    for i in range(m):
        if fwd[i] < 0:
            raise PreconditionError(
                f"sample set is not closed under the map: "
                f"image of sample {i} is not sampled"
            )
    if len(set(int(j) for j in fwd)) != m:
        raise PreconditionError("map does not permute the sample set")

    jacs = [model.jacobian(p) for p in samples]
    invs = [np.linalg.inv(j) for j in jacs]

    for i in range(m):
        j = int(fwd[i])
        for ray in _cone_rays(initial[i], unstable=True):
            if not initial[j].in_unstable_cone(jacs[i] @ ray):
                raise ConeInvarianceError(
                    f"unstable cone is not strictly invariant at sample {i}",
                    point=samples[i],
                )
        for ray in _cone_rays(initial[j], unstable=False):
            if not initial[i].in_stable_cone(invs[i] @ ray):
                raise ConeInvarianceError(
                    f"stable cone is not strictly invariant at sample {j}",
                    point=samples[j],
                )

    u = np.array([c.unstable_axis for c in initial])
    s = np.array([c.stable_axis for c in initial])
    change = 0.0
    for _ in range(steps):
        nu = np.empty_like(u)
        ns = np.empty_like(s)
        for i in range(m):
            j = int(fwd[i])
            w = jacs[i] @ u[i]
            nu[j] = w / np.linalg.norm(w)
            w = invs[i] @ s[j]
            ns[i] = w / np.linalg.norm(w)
        change = max(
            max(_line_angle(nu[i], u[i]) for i in range(m)),
            max(_line_angle(ns[i], s[i]) for i in range(m)),
        )
        u, s = nu, ns
    return SplittingField(
        points=samples,
        stable=tuple(gram_schmidt(s[i].reshape(2, 1)) for i in range(m)),
        unstable=tuple(gram_schmidt(u[i].reshape(2, 1)) for i in range(m)),
        convergence=change,
    )


# ------------------------------------------------------------- domination


def domination_check(model: MapModel, field: SplittingField, l: int = 1,
                     invariance_tol: float = 1e-6) -> DominationCertificate:
    """Worst stable-over-unstable stretch ratio of the l-step derivative.

    The certificate passes when the ratio stays below 1 at every sampled
    point.  A field with an empty side dominates vacuously (ratio 0).
    """
    if l < 1:
        raise PreconditionError(f"iterate must be >= 1, got {l}")
    field.validate(model, tol=invariance_tol)
    m = field.size
    if field.stable_dim == 0 or field.unstable_dim == 0:
        ratios = np.zeros(m)
        return DominationCertificate(iterate=l, lam=0.0, ratios=ratios,
                                     points=field.points, passed=True)
    ratios = np.empty(m)
    for i in range(m):
        seg = model.iterate(field.points[i], l)
        deriv = np.eye(field.ambient)
        for q in range(l):
            deriv = model.jacobian(seg.points[q]) @ deriv
        sup_s = float(np.max(np.linalg.svd(deriv @ field.stable[i],
                                           compute_uv=False)))
        inf_u = float(np.min(np.linalg.svd(deriv @ field.unstable[i],
                                           compute_uv=False)))
        ratios[i] = sup_s / inf_u if inf_u > 0.0 else math.inf
    lam = float(np.max(ratios))
    return DominationCertificate(iterate=l, lam=lam, ratios=ratios,
                                 points=field.points, passed=lam < 1.0)


# ------------------------------------------------------------- continuity


def _pairwise_distance_angle(field: SplittingField) -> tuple[np.ndarray, np.ndarray]:
    # flat distance and worst subspace angle for every unordered sample pair
    m = field.size
    dist = np.linalg.norm(_wrapped_diffs(field.points, field.points), axis=2)
    iu = np.triu_indices(m, k=1)
    dvals = dist[iu]
    avals = np.zeros_like(dvals)
    for bases, dim in ((field.stable, field.stable_dim),
                       (field.unstable, field.unstable_dim)):
        if dim != 1:
            # 0-dim spaces agree everywhere; full spaces likewise
            continue
        vecs = np.array([b[:, 0] for b in bases])
        dots = np.clip(np.abs(vecs @ vecs.T), 0.0, 1.0)
        avals = np.maximum(avals, np.arccos(dots)[iu])
    return dvals, avals


def splitting_continuity_modulus(field: SplittingField,
                                 bins: int = 8) -> ContinuityTable:
    """Max subspace angle as a function of point distance, cumulatively binned."""
    if field.size < 2:
        raise PreconditionError("continuity modulus needs at least two samples")
    if bins < 1:
        raise PreconditionError(f"bins must be >= 1, got {bins}")
    dvals, avals = _pairwise_distance_angle(field)
    order = np.argsort(dvals, kind="stable")
    running = np.maximum.accumulate(avals[order])
    edges = np.linspace(0.0, float(np.max(dvals)), bins + 1)[1:]
    pos = np.searchsorted(dvals[order], edges, side="right")
    angles = np.array([float(running[p - 1]) if p > 0 else 0.0 for p in pos])
    return ContinuityTable(edges=edges, angles=angles)


def _locality_radius(field: SplittingField, cap: float = MODULUS_CAP) -> float:
    """Largest pair distance below which every subspace angle stays under cap."""
    dvals, avals = _pairwise_distance_angle(field)
    order = np.argsort(dvals, kind="stable")
    d_sorted = dvals[order]
    running = np.maximum.accumulate(avals[order])
    bad = np.nonzero(running >= cap)[0]
    if bad.size == 0:
        return float(d_sorted[-1])
    first = float(d_sorted[int(bad[0])])
    below = d_sorted[d_sorted < first]
    return float(below[-1]) if below.size else 0.0


# -------------------------------------------------------------- extension


def gram_schmidt_extend(field: SplittingField, targets, rho: float | None = None,
                        max_candidates: int = 8) -> tuple[SplittingField, float]:
    """Extend a field to new targets from their nearest samples.

    Each target takes the orthonormalized basis of its nearest source
    sample; the returned disagreement is the largest principal angle
    among the candidate extensions (up to ``max_candidates`` samples
    within ``rho``), witnessing uniqueness of the continuous extension.
    ``rho`` defaults to the largest pair distance at which the field's
    own empirical continuity modulus stays below 0.1 rad (taken from the
    attached table when one is stored, else computed exactly).
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if targets.shape[1] != field.ambient:
        raise PreconditionError("target dimension does not match the field")
    if rho is None:
        if field.modulus is not None:
            rho = field.modulus.radius_for()
        else:
            rho = _locality_radius(field)
    dist = np.linalg.norm(_wrapped_diffs(field.points, targets), axis=2)
    stable = []
    unstable = []
    disagreement = 0.0
    for t in range(targets.shape[0]):
        order = np.argsort(dist[t], kind="stable")
        near = [int(i) for i in order[:max_candidates] if dist[t, i] <= rho]
        if not near:
            raise ExtensionError(
                f"target {targets[t]} is isolated: no sample within {rho:.6g}"
            )
        cand_s = [gram_schmidt(field.stable[i]) if field.stable_dim else
                  field.stable[i] for i in near]
        cand_u = [gram_schmidt(field.unstable[i]) if field.unstable_dim else
                  field.unstable[i] for i in near]
        stable.append(cand_s[0])
        unstable.append(cand_u[0])
        for a in range(len(near)):
            for b in range(a + 1, len(near)):
                disagreement = max(disagreement,
                                   principal_angle(cand_s[a], cand_s[b]),
                                   principal_angle(cand_u[a], cand_u[b]))
    new_field = SplittingField(points=targets, stable=tuple(stable),
                               unstable=tuple(unstable))
    return new_field, disagreement


# ---------------------------------------------------- hyperbolic certificate


def hyperbolic_set_certificate(model: MapModel, field: SplittingField,
                               n_check: int,
                               invariance_tol: float = INVARIANCE_TOL
                               ) -> HyperbolicCertificate:
    """Fit uniform constants to both derivative inequality families.

    Over every sample and every horizon n <= n_check the stable restriction
    norm must stay below c lam^n and the inverse unstable restriction norm
    likewise.  lam is the worst per-step rate observed at the deepest
    horizon; c is then the smallest constant covering every shorter one.
    Passes iff lam < 1.  The sample set must be closed under the map.
    """
    if n_check < 1:
        raise PreconditionError(f"n_check must be >= 1, got {n_check}")
    field.validate(model, tol=invariance_tol)
    fwd = field.image_indices(model)
    if np.any(fwd < 0):
        bad = int(np.argmax(fwd < 0))
        raise PreconditionError(
            f"sample set not orbit-closed: image of sample {bad} is missing"
        )
    m = field.size
    jacs = [model.jacobian(p) for p in field.points]
    ratio_s = np.zeros((m, n_check)) if field.stable_dim > 0 else None
    ratio_u = np.zeros((m, n_check)) if field.unstable_dim > 0 else None
    for i in range(m):
        deriv = np.eye(field.ambient)
        k = i
        for n in range(n_check):
            deriv = jacs[k] @ deriv
            k = int(fwd[k])
            if ratio_s is not None:
                ratio_s[i, n] = float(np.max(np.linalg.svd(
                    deriv @ field.stable[i], compute_uv=False)))
            if ratio_u is not None:
                sig = float(np.min(np.linalg.svd(
                    deriv @ field.unstable[i], compute_uv=False)))
                ratio_u[i, n] = math.inf if sig == 0.0 else 1.0 / sig
    # base-2 root keeps dyadic products exact (doubling fits lam = 1/2)
    rates = []
    for ratios in (ratio_s, ratio_u):
        if ratios is not None:
            rates.extend(
                2.0 ** (math.log2(float(r)) / n_check) for r in ratios[:, -1]
            )
    lam = max(rates)
    c = 0.0
    for ratios in (ratio_s, ratio_u):
        if ratios is not None:
            for n in range(1, n_check + 1):
                c = max(c, float(np.max(ratios[:, n - 1])) / lam ** n)
    powers = lam ** np.arange(1, n_check + 1)
    margin_s = (np.max(ratio_s / (c * powers), axis=1)
                if ratio_s is not None else np.zeros(m))
    margin_u = (np.max(ratio_u / (c * powers), axis=1)
                if ratio_u is not None else np.zeros(m))
    return HyperbolicCertificate(
        c=c, lam=lam, n_checked=n_check, points=field.points,
        stable_margins=margin_s, unstable_margins=margin_u,
        passed=lam < 1.0,
    )


# ------------------------------------------------------------------- csv


def export_splitting_csv(field: SplittingField, path,
                         stable_margins=None, unstable_margins=None) -> None:
    """One row per sampled point: coordinates, basis vectors, margins."""
    d = field.ambient
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["point_index", "x", "y"]
        for j in range(field.stable_dim):
            head += [f"stable_{j}_{ax}" for ax in ("x", "y")[:d]]
        for j in range(field.unstable_dim):
            head += [f"unstable_{j}_{ax}" for ax in ("x", "y")[:d]]
        head += ["stable_margin", "unstable_margin"]
        w.writerow(head)
        for i in range(field.size):
            row = [i, f"{field.points[i][0]:.17g}",
                   f"{field.points[i][1]:.17g}" if d > 1 else ""]
            for j in range(field.stable_dim):
                row += [f"{v:.17g}" for v in field.stable[i][:, j]]
            for j in range(field.unstable_dim):
                row += [f"{v:.17g}" for v in field.unstable[i][:, j]]
            row.append("" if stable_margins is None
                       else f"{stable_margins[i]:.17g}")
            row.append("" if unstable_margins is None
                       else f"{unstable_margins[i]:.17g}")
            w.writerow(row)
