"""Conjugacies to the linear circle model and their quantitative fallout.

The homeomorphism h with h(g(x)) = f(h(x)) is built from itineraries: the
j-th base-d digit of h(x) is the branch index of the j-th iterate of x, so
applying g shifts the digit stream exactly like the linear model f shifts
expansions.  Truncating at a finite depth makes h computable; the truncation
error is the conjugation defect and is tracked explicitly.

On top of the table this module samples Holder constants for h, checks the
backward-contraction decay inequality those constants imply near periodic
points, and tests the eigenvalue bound for contracting return maps fixing a
periodic point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hypcert.errors import (
    ConjugacyError,
    PreconditionError,
    UnsupportedModelError,
)
from hypcert.maps import MapModel, flat_distance, wrap_point
from hypcert.orbits import (
    PeriodicOrbit,
    find_periodic_points,
    period_map_splitting,
)
from hypcert.shadowing import _local_preimage

DEFECT_TOL = 1e-8
MAX_DIGITS = 50
EIGENVALUE_SLACK = 1e-8
# Relative slack when testing the sampled contraction hypothesis; absorbs the
# 1e-14 halting tolerance of the anchored Newton pullback.
HYPOTHESIS_SLACK = 1e-8

VERDICT_PASS = "pass"
VERDICT_INAPPLICABLE = "inapplicable"
VERDICT_VIOLATED = "conclusion violated"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0

def _same_model(a: MapModel, b: MapModel) -> bool:
    if a is b:
        return True
    return a.family == b.family and a.params == b.params and a.dim == b.dim


def _digit_depth(m: int, tol: float, degree: int) -> int:
    """Depth so the truncation defect degree^(1-D) sits below tol.

    The m + 20 floor ties depth to the grid so refining the table refines
    the defect; 50 keeps base-2 digit sums exactly representable.
    """
    need = math.ceil(1.0 + math.log(1.0 / tol) / math.log(degree))
    return min(MAX_DIGITS, max(m + 20, need))


@dataclass
class ConjugacyModel:
    """Tabulated conjugacy h with h(g(x)) = f(h(x)), g = source, f = target.

    ``values[k]`` is h(k / resolution) on the dyadic grid; off-grid points
    are evaluated from a fresh itinerary at the stored digit depth.  The
    stored ``defect_bound`` dominates sup |h(g(x)) - f(h(x))|;
    ``measured_defect`` is the grid maximum observed when the table was
    built or loaded.
    """

    source: MapModel
    target: MapModel
    values: np.ndarray
    digits: int
    defect_bound: float
    measured_defect: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.source.dim != 1 or self.target.dim != 1:
            raise PreconditionError("conjugacy tables are built for circle maps")
        if self.source.degree != self.target.degree:
            raise PreconditionError(
                f"degree mismatch: source {self.source.degree}, "
                f"target {self.target.degree}"
            )
        if self.values.ndim != 1 or not _is_power_of_two(len(self.values)) \
                or len(self.values) < 4:
            raise PreconditionError(
                "table length must be a power of two >= 4, "
                f"got shape {self.values.shape}"
            )
        if np.any(self.values < 0.0) or np.any(self.values >= 1.0):
            raise ConjugacyError("table values must lie in [0, 1)")
        if not np.all(np.diff(self.values) > 0.0):
            raise ConjugacyError(
                "table is not strictly monotone: not a circle homeomorphism"
            )
        if not 1 <= self.digits <= 60:
            raise PreconditionError(f"digit depth {self.digits} out of range")
        if not self.defect_bound > 0.0:
            raise PreconditionError("defect bound must be positive")
        if not self.measured_defect >= 0.0:
            raise PreconditionError("measured defect must be >= 0")
        d = float(self.source.degree)
        self._weights = d ** -np.arange(1, self.digits + 1, dtype=np.float64)

    @property
    def resolution(self) -> int:
        return len(self.values)

    def evaluate(self, x: float) -> float:
        """h(x): table lookup on the grid, itinerary expansion off it."""
        x = float(wrap_point(x)[0])
        scaled = x * self.resolution
        k = round(scaled)
        if scaled == k:
            return float(self.values[int(k) % self.resolution])
        digs = self.source.itinerary(x, self.digits)
        return float(np.dot(digs, self._weights))

    def write_table(self, path) -> None:
        """Flat text table, one grid value per line."""
        np.savetxt(path, self.values, fmt="%.17g")


def _itinerary_table(model: MapModel, resolution: int, digits: int) -> np.ndarray:
    d = float(model.degree)
    weights = d ** -np.arange(1, digits + 1, dtype=np.float64)
    vals = np.empty(resolution)
    for k in range(resolution):
        vals[k] = float(np.dot(model.itinerary(k / resolution, digits), weights))
    return vals


def build_conjugacy(model_g: MapModel, model_f: MapModel,
                    resolution: int, defect_tol: float = DEFECT_TOL) -> ConjugacyModel:
    """Tabulate the itinerary conjugacy from model_g to the linear model_f.

    The digit depth starts at the truncation estimate for defect_tol and is
    deepened until the measured grid defect drops below it; a target that is
    not actually the linear model of the shared degree leaves the defect
    stuck and raises instead of returning a false conjugacy.
    """
    for model, role in ((model_g, "source"), (model_f, "target")):
        if model.dim != 1:
            raise UnsupportedModelError(
                f"{role} model {model.family!r} is not a circle map: "
                "only circle conjugacies are constructed"
            )
    if model_g.degree != model_f.degree or model_g.degree < 2:
        raise PreconditionError(
            f"models must share a degree >= 2, got {model_g.degree} "
            f"and {model_f.degree}"
        )
    if not hasattr(model_g, "itinerary"):
        raise UnsupportedModelError(
            f"source model {model_g.family!r} does not expose itineraries"
        )
    if not (_is_power_of_two(resolution) and resolution >= 4):
        raise PreconditionError(
            f"resolution must be a power of two >= 4, got {resolution}"
        )
    if not 0.0 < defect_tol < 1.0:
        raise PreconditionError(f"defect tolerance {defect_tol} out of (0, 1)")

    m = resolution.bit_length() - 1
    degree = int(model_g.degree)
    digits = _digit_depth(m, defect_tol, degree)
    while True:
        values = _itinerary_table(model_g, resolution, digits)
        theory = float(degree) ** (1 - digits)
        h = ConjugacyModel(source=model_g, target=model_f, values=values,
                           digits=digits, defect_bound=theory,
                           measured_defect=0.0)
        measured = conjugacy_defect(h, model_g, model_f, resolution)
        if measured < defect_tol:
            return replace(h, measured_defect=measured,
                           defect_bound=max(theory, 2.0 * measured))
        if digits >= MAX_DIGITS:
            raise ConjugacyError(
                f"defect {measured:.3e} stays above {defect_tol:.1e} at digit "
                f"depth {MAX_DIGITS}; target is not conjugate to the source "
                "via digit shifts (is it the linear model?)"
            )
        digits = min(MAX_DIGITS, digits + 8)


def load_conjugacy(path, model_g: MapModel, model_f: MapModel,
                   defect_tol: float = DEFECT_TOL) -> ConjugacyModel:
    """Rebuild a ConjugacyModel from a flat table written by write_table.

    The defect is re-measured on a coarse subgrid, so a table that was
    edited on disk comes back with an honest (large) stored bound.
    """
    values = np.loadtxt(path, dtype=np.float64, ndmin=1)
    if not (_is_power_of_two(len(values)) and len(values) >= 4):
        raise ConjugacyError(
            f"table file holds {len(values)} lines; expected a power of two >= 4"
        )
    m = len(values).bit_length() - 1
    digits = _digit_depth(m, defect_tol, int(model_g.degree))
    theory = float(model_g.degree) ** (1 - digits)
    h = ConjugacyModel(source=model_g, target=model_f, values=values,
                       digits=digits, defect_bound=theory, measured_defect=0.0)
    measured = conjugacy_defect(h, model_g, model_f, min(256, len(values)))
    return replace(h, measured_defect=measured,
                   defect_bound=max(theory, 2.0 * measured))


def conjugacy_defect(h: ConjugacyModel, model_g: MapModel, model_f: MapModel,
                     grid: int) -> float:
    """max over the grid of d(h(g(x)), f(h(x))), the conjugation residual."""
    if not (_same_model(model_g, h.source) and _same_model(model_f, h.target)):
        raise PreconditionError("conjugacy was built for a different model pair")
    if grid < 1:
        raise PreconditionError(f"grid count must be >= 1, got {grid}")
    worst = 0.0
    for k in range(grid):
        x = k / grid
        gx = float(model_g.eval_point(x)[0])
        lhs = h.evaluate(gx)
        rhs = float(model_f.eval_point(h.evaluate(x))[0])
        worst = max(worst, flat_distance(lhs, rhs))
    return worst


@dataclass
class HolderEstimate:
    """Sampled bound d(h(x), h(y)) <= K d(x, y)^a; holds on every sampled pair."""

    holder_constant: float
    holder_exponent: float
    residual: float
    pairs: int

    def __post_init__(self):
        if not self.holder_constant > 0.0:
            raise PreconditionError("Holder constant must be positive")
        if not 0.0 < self.holder_exponent <= 1.0:
            raise PreconditionError(
                f"Holder exponent must be in (0, 1], got {self.holder_exponent}"
            )
        if not self.residual >= 0.0:
            raise PreconditionError("fit residual must be >= 0")
        if self.pairs < 1:
            raise PreconditionError("pair count must be >= 1")


def holder_estimate(h: ConjugacyModel, pair_count: int,
                    seed: int = 0) -> HolderEstimate:
    """Fit K, a on log-log grid pairs, then inflate K to cover every pair.

    Pairs live on the stored dyadic grid at exact offsets 2^-e for
    e = 2..m, so the identity table yields K = 1, a = 1 exactly.  The fit
    is least squares; the inflation step is what makes the result a
    certified sampled bound rather than a regression artifact.
    """
    if pair_count < 100:
        raise PreconditionError(f"need at least 100 pairs, got {pair_count}")
    res = h.resolution
    m = res.bit_length() - 1
    if m < 3:
        raise ConjugacyError(
            f"resolution {res} is too coarse to span two sampling scales"
        )
    dxs = np.empty(pair_count)
    dys = np.empty(pair_count)
    floor = float(h.source.degree) ** -h.digits
    for k in range(pair_count):
        rng = np.random.default_rng([seed, k])
        e = int(rng.integers(2, m + 1))
        i = int(rng.integers(0, res))
        j = (i + (res >> e)) % res
        dy = abs(float(h.values[j]) - float(h.values[i]))
        dxs[k] = 2.0 ** -e
        # table values are quantized at degree^-digits; floor dy there
        dys[k] = max(min(dy, 1.0 - dy), floor)
    logdx = np.log(dxs)
    logdy = np.log(dys)
    centered = logdx - logdx.mean()
    var = float(np.dot(centered, centered))
    if var == 0.0:
        raise ConjugacyError("sampled pairs collapsed onto a single scale")
    slope = float(np.dot(centered, logdy - logdy.mean())) / var
    if slope <= 0.0:
        raise ConjugacyError(
            f"sampled distances grow as scales shrink (slope {slope:.3g}); "
            "table is not a homeomorphism sample"
        )
    alpha = min(1.0, slope)
    intercept = float(np.mean(logdy - alpha * logdx))
    constant = max(math.exp(intercept), float(np.max(dys / dxs ** alpha)))
    residual = float(np.sqrt(np.mean((logdy - (alpha * logdx + intercept)) ** 2)))
    if np.any(dys > constant * dxs ** alpha * (1.0 + 1e-12)):
        raise ConjugacyError("inflated bound fails on a sampled pair")
    return HolderEstimate(holder_constant=constant, holder_exponent=alpha,
                          residual=residual, pairs=pair_count)


@dataclass
class DecayCheckResult:
    """Worst ratio of backward pair distance to its decay bound (<= 1 passes)."""

    passed: bool
    worst_margin: float
    worst_case: tuple[float, float, int]
    violations: int
    trials: int
    depth: int


def contraction_decay_check(model_g: MapModel, h: HolderEstimate,
                            lambda_hat: float, trials: int,
                            depth: int = 20, ball: float = 1e-3,
                            seed: int = 0,
                            max_period: int = 6) -> DecayCheckResult:
    """Test d(g^-j x, g^-j y) <= (lam^a)^j K^(1+a) ball^(a^2) near periodic points.

    Pairs are drawn with diameter <= ball around a periodic point and pulled
    back along the orbit's own anchors, branch selection by locality.  The
    right-hand side uses the sampled Holder constants; lambda_hat is the
    inverse-branch contraction rate of the linear model.  Violations are
    reported in the result, never raised.
    """
    if model_g.dim != 1:
        raise UnsupportedModelError(
            "decay check pulls back through circle branches; "
            f"model {model_g.family!r} is not a circle map"
        )
    if not 0.0 < lambda_hat < 1.0:
        raise PreconditionError(f"lambda_hat must be in (0, 1), got {lambda_hat}")
    if trials < 1:
        raise PreconditionError(f"trials must be >= 1, got {trials}")
    if depth < 1:
        raise PreconditionError(f"depth must be >= 1, got {depth}")
    if not 0.0 < ball <= 0.1:
        raise PreconditionError(f"ball radius {ball} out of (0, 0.1]")
    orbits = find_periodic_points(model_g, max_period)
    K = h.holder_constant
    a = h.holder_exponent
    amplitude = K ** (1.0 + a) * ball ** (a * a)
    rate = lambda_hat ** a
    worst = -math.inf
    worst_case = None
    violations = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        ob = orbits[int(rng.integers(0, len(orbits)))]
        phase = int(rng.integers(0, ob.period))
        p = float(ob.points[phase][0])
        x = float(wrap_point(p + 0.5 * ball * (2.0 * rng.random() - 1.0))[0])
        y = float(wrap_point(p + 0.5 * ball * (2.0 * rng.random() - 1.0))[0])
        xj, yj = x, y
        for j in range(1, depth + 1):
            anchor = float(ob.points[(phase - j) % ob.period][0])
            xj = _local_preimage(model_g, xj, anchor)
            yj = _local_preimage(model_g, yj, anchor)
            margin = flat_distance(xj, yj) / (rate ** j * amplitude)
            if margin > worst:
                worst = margin
                worst_case = (x, y, j)
            if margin > 1.0:
                violations += 1
    return DecayCheckResult(passed=violations == 0, worst_margin=worst,
                            worst_case=worst_case, violations=violations,
                            trials=trials, depth=depth)


@dataclass
class EigenvalueBoundResult:
    """Outcome of the contracting-return-map eigenvalue test at one orbit."""

    verdict: str
    eigenvalue_moduli: tuple
    eigenvalue_ok: tuple
    hypothesis_margin: float
    lam: float
    beta: float

    def __post_init__(self):
        if self.verdict not in (VERDICT_PASS, VERDICT_INAPPLICABLE,
                                VERDICT_VIOLATED):
            raise PreconditionError(f"unknown verdict {self.verdict!r}")


def eigenvalue_bound_check(orbit: PeriodicOrbit, lam: float, beta: float,
                           pairs: int = 200, depth: int = 10,
                           ball: float = 1e-3,
                           seed: int = 0) -> EigenvalueBoundResult:
    """If G^n contracts like lam^n d(x,y)^beta, DG eigenvalues stay <= lam.

    G is the return map fixing the orbit's base point: for circle models the
    composition of anchored inverse branches around the cycle, for invertible
    torus models the inverse period map restricted along the orbit's unstable
    eigendirection (the direction its inverse contracts).  The contraction
    hypothesis is sampled first; if it fails the verdict is "inapplicable",
    kept distinct from a genuine "conclusion violated".
    """
    if not 0.0 < lam < 1.0:
        raise PreconditionError(f"lam must be in (0, 1), got {lam}")
    if not 0.0 < beta <= 1.0:
        raise PreconditionError(f"beta must be in (0, 1], got {beta}")
    if not 1 <= pairs <= 200:
        raise PreconditionError(f"pairs must be in 1..200, got {pairs}")
    if not 1 <= depth <= 10:
        raise PreconditionError(f"depth must be in 1..10, got {depth}")
    if not 0.0 < ball <= 0.1:
        raise PreconditionError(f"ball radius {ball} out of (0, 0.1]")
    model = orbit.model
    t = orbit.period
    if model.dim == 1:
        moduli = (1.0 / abs(float(orbit.period_map[0, 0])),)

        def sample_pair(rng):
            p = float(orbit.points[0][0])
            x = float(wrap_point(p + 0.5 * ball * (2.0 * rng.random() - 1.0))[0])
            y = float(wrap_point(p + 0.5 * ball * (2.0 * rng.random() - 1.0))[0])
            return x, y

        def return_map(z):
            for j in range(1, t + 1):
                z = _local_preimage(model, z, float(orbit.points[(-j) % t][0]))
            return z

    elif model.invertible:
        _, vu = period_map_splitting(orbit.period_map)
        pm_inv_vu = np.linalg.solve(orbit.period_map, vu)
        moduli = (float(np.linalg.norm(pm_inv_vu)),)

        def sample_pair(rng):
            p = orbit.points[0]
            x = wrap_point(p + vu * 0.5 * ball * (2.0 * rng.random() - 1.0))
            y = wrap_point(p + vu * 0.5 * ball * (2.0 * rng.random() - 1.0))
            return x, y

        def return_map(z):
            for _ in range(t):
                z = model.inverse_branches(z)[0].point
            return z

    else:
        raise UnsupportedModelError(
            "eigenvalue bound needs a circle map or an invertible torus map, "
            f"got {model.family!r}"
        )

    hyp_worst = 0.0
    for k in range(pairs):
        rng = np.random.default_rng([seed, k])
        x, y = sample_pair(rng)
        d0 = flat_distance(x, y)
        if d0 == 0.0:
            continue
        xn, yn = x, y
        for n in range(1, depth + 1):
            xn = return_map(xn)
            yn = return_map(yn)
            hyp_worst = max(hyp_worst,
                            flat_distance(xn, yn) / (lam ** n * d0 ** beta))
    applicable = hyp_worst <= 1.0 + HYPOTHESIS_SLACK
    ok = tuple(bool(mod <= lam + EIGENVALUE_SLACK) for mod in moduli)
    if not applicable:
        verdict = VERDICT_INAPPLICABLE
    elif all(ok):
        verdict = VERDICT_PASS
    else:
        verdict = VERDICT_VIOLATED
    return EigenvalueBoundResult(verdict=verdict, eigenvalue_moduli=moduli,
                                 eigenvalue_ok=ok, hypothesis_margin=hyp_worst,
                                 lam=lam, beta=beta)
