"""Smooth maps on the circle and the flat 2-torus.

Points are numpy arrays with coordinates in [0, 1); distances use the flat
metric (per-component wrapped difference, Euclidean combination).  Built-in
families:

* ``doubling``            x -> 2x mod 1
* ``perturbed_doubling``  x -> 2x + (s/2pi) sin(2pi x) mod 1, degree 2;
  a local diffeomorphism for s < 2, critical at x = 1/2 when s = 2
* ``cat_map``             v -> [[2,1],[1,1]] v mod 1
* ``perturbed_cat``       cat_map composed with the shear
  (x, y) -> (x + (s/2pi) sin(2pi y), y), invertible for every s

Custom closed-form models carry user-supplied derivatives; there is no
automatic differentiation anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from hypcert import kernels
from hypcert.errors import (
    MissingDerivativeError,
    ModelError,
    UnsupportedModelError,
    ZeroDerivativeError,
)

TWO_PI = 2.0 * math.pi

# Below this |g'| a computed preimage is treated as a critical point.
DERIV_FLOOR = 1e-8

CAT_MATRIX = np.array([[2.0, 1.0], [1.0, 1.0]])
CAT_MATRIX_INV = np.array([[1.0, -1.0], [-1.0, 2.0]])


def wrap_point(p) -> np.ndarray:
    """Canonical representative in [0,1)^d."""
    q = np.atleast_1d(np.asarray(p, dtype=np.float64)).copy()
    q -= np.floor(q)
    q[q >= 1.0] -= 1.0
    return q


def wrap_diff(p, q) -> np.ndarray:
    """Signed componentwise difference p - q reduced to [-0.5, 0.5)."""
    d = np.atleast_1d(np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64))
    return d - np.floor(d + 0.5)


def flat_distance(p, q) -> float:
    """Flat-torus distance: wrapped per component, Euclidean across components."""
    d = wrap_diff(p, q)
    if d.size == 1:
        return abs(float(d[0]))
    return float(np.sqrt(np.sum(d * d)))


def spectral_norm(mat: np.ndarray) -> float:
    """Largest singular value (closed form for the sizes used here)."""
    a = np.asarray(mat, dtype=np.float64)
    if a.shape == (1, 1):
        return abs(float(a[0, 0]))
    t = float(np.sum(a * a))
    det = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    disc = max(t * t - 4.0 * det * det, 0.0)
    return math.sqrt(max((t + math.sqrt(disc)) / 2.0, 0.0))


def conorm(mat: np.ndarray) -> float:
    """Smallest singular value, i.e. 1 / ||A^{-1}||; 0 for a singular matrix."""
    a = np.asarray(mat, dtype=np.float64)
    if a.shape == (1, 1):
        return abs(float(a[0, 0]))
    det = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    big = spectral_norm(a)
    if big == 0.0:
        return 0.0
    return abs(det) / big


@dataclass(frozen=True)
class Branch:
    """One inverse branch value: the preimage point and the inverse Jacobian."""

    point: np.ndarray
    inverse_jacobian: np.ndarray


class MapModel:
    """Base class; concrete models implement eval/jacobian/inverse branches."""

    family: str = "abstract"
    dim: int = 0
    invertible: bool = False
    degree: int | None = None
    params: dict = {}

    def eval_point(self, p) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, p) -> np.ndarray:
        raise NotImplementedError

    def inverse_branches(self, p) -> list[Branch]:
        raise NotImplementedError

    def iterate(self, p, n: int) -> "OrbitSegment":
        if n < 0:
            raise ModelError(f"orbit length must be >= 0, got {n}")
        pts = np.empty((n + 1, self.dim))
        x = wrap_point(p)
        pts[0] = x
        for j in range(n):
            x = self.eval_point(x)
            pts[j + 1] = x
        return OrbitSegment(model=self, points=pts)

    def describe(self) -> dict:
        return {"family": self.family, "dim": self.dim, **self.params}

    def __repr__(self) -> str:  # pragma: no cover
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"


@dataclass
class OrbitSegment:
    """Finite orbit x, g(x), ..., g^n(x); n = len(points) - 1 steps."""

    model: MapModel
    points: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))

    @property
    def length(self) -> int:
        return self.points.shape[0] - 1

    def validate(self, tol: float = 1e-12) -> None:
        """Check each consecutive pair satisfies the map relation."""
        for j in range(self.length):
            gap = flat_distance(self.model.eval_point(self.points[j]), self.points[j + 1])
            if gap > tol:
                raise ModelError(
                    f"segment breaks the map relation at step {j}: gap {gap:.3e} > {tol:.1e}"
                )


class CircleFamily(MapModel):
    """Degree-2 circle family g_s(x) = 2x + (s/2pi) sin(2pi x) mod 1."""

    dim = 1
    invertible = False
    degree = 2

    def __init__(self, s: float = 0.0, family: str | None = None):
        if s < 0.0:
            raise ModelError(f"perturbation size must be >= 0, got {s}")
        self.s = float(s)
        self.family = family or ("doubling" if s == 0.0 else "perturbed_doubling")
        self.params = {"s": self.s} if self.family != "doubling" else {}

    def eval_point(self, p) -> np.ndarray:
        x = wrap_point(p)[0]
        return np.array([kernels.circle_eval(x, self.s)])

    def lift(self, x: float) -> float:
        return kernels.circle_lift(x, self.s)

    def deriv(self, x: float) -> float:
        return kernels.circle_deriv(float(x), self.s)

    def jacobian(self, p) -> np.ndarray:
        x = wrap_point(p)[0]
        return np.array([[kernels.circle_deriv(x, self.s)]])

    def branch_cuts(self) -> np.ndarray:
        """Partition points: preimages of 0; branch k is [cut_k, cut_{k+1})."""
        # F(0) = 0 and F(1/2) = 1 for every s, so the cuts are parameter-free.
        return np.array([0.0, 0.5])

    def inverse_branches(self, p) -> list[Branch]:
        y = wrap_point(p)[0]
        out = []
        for k in range(self.degree):
            x = kernels.circle_branch_preimage(y, k, self.s)
            d = kernels.circle_deriv(x, self.s)
            if abs(d) < DERIV_FLOOR:
                raise ZeroDerivativeError(
                    f"derivative {d:.3e} at preimage x={x!r} (branch {k}): "
                    "not a local diffeomorphism there"
                )
            out.append(Branch(point=np.array([x]), inverse_jacobian=np.array([[1.0 / d]])))
        return out

    def branch_preimage(self, y: float, branch: int) -> float:
        """Preimage through one branch, without the derivative-floor guard."""
        return kernels.circle_branch_preimage(float(y), int(branch), self.s)

    def itinerary(self, x: float, n: int) -> np.ndarray:
        return kernels.circle_itinerary(float(x), self.s, int(n))


class TorusFamily(MapModel):
    """Cat map, optionally precomposed with a sine shear in y."""

    dim = 2
    invertible = True
    degree = None

    def __init__(self, s: float = 0.0, family: str | None = None):
        if s < 0.0:
            raise ModelError(f"perturbation size must be >= 0, got {s}")
        self.s = float(s)
        self.family = family or ("cat_map" if s == 0.0 else "perturbed_cat")
        self.params = {"s": self.s} if self.family != "cat_map" else {}

    def eval_point(self, p) -> np.ndarray:
        q = wrap_point(p)
        x, y = kernels.torus_step(q[0], q[1], self.s)
        return np.array([x, y])

    def jacobian(self, p) -> np.ndarray:
        q = wrap_point(p)
        a, b, c, d = kernels.torus_jacobian_entries(q[1], self.s)
        return np.array([[a, b], [c, d]])

    def inverse_point(self, p) -> np.ndarray:
        q = wrap_point(p)
        u = CAT_MATRIX_INV @ q
        if self.s != 0.0:
            u[0] -= (self.s / TWO_PI) * math.sin(TWO_PI * u[1])
        return wrap_point(u)

    def inverse_branches(self, p) -> list[Branch]:
        pre = self.inverse_point(p)
        jac = self.jacobian(pre)
        return [Branch(point=pre, inverse_jacobian=np.linalg.inv(jac))]


class CustomCircleMap(MapModel):
    """Closed-form circle map given by its lift; derivative must be supplied."""

    dim = 1
    invertible = False
    family = "custom_closed_form"

    def __init__(self, lift: Callable[[float], float],
                 deriv: Callable[[float], float] | None,
                 degree: int):
        if degree < 1:
            raise ModelError(f"degree must be >= 1, got {degree}")
        self._lift = lift
        self._deriv = deriv
        self.degree = int(degree)
        self.params = {"degree": self.degree}
        self._cuts: np.ndarray | None = None

    def eval_point(self, p) -> np.ndarray:
        x = wrap_point(p)[0]
        return wrap_point(self._lift(x) - self._lift(0.0))

    def lift(self, x: float) -> float:
        return self._lift(x) - self._lift(0.0)

    def deriv(self, x: float) -> float:
        if self._deriv is None:
            raise MissingDerivativeError(
                "custom model has no derivative formula; supply deriv= at construction"
            )
        return float(self._deriv(float(x)))

    def jacobian(self, p) -> np.ndarray:
        x = wrap_point(p)[0]
        return np.array([[self.deriv(x)]])

    def branch_cuts(self) -> np.ndarray:
        if self._cuts is None:
            cuts = [0.0]
            for k in range(1, self.degree):
                cuts.append(self._bisect_lift(float(k)))
            self._cuts = np.asarray(cuts)
        return self._cuts

    def _bisect_lift(self, target: float) -> float:
        a, b = 0.0, 1.0
        for _ in range(200):
            m = 0.5 * (a + b)
            if self.lift(m) - target > 0.0:
                b = m
            else:
                a = m
            if b - a <= 1e-15:
                break
        return 0.5 * (a + b)

    def branch_preimage(self, y: float, branch: int) -> float:
        cuts = self.branch_cuts()
        a = cuts[branch]
        b = cuts[branch + 1] if branch + 1 < self.degree else 1.0
        target = y + branch
        for _ in range(200):
            m = 0.5 * (a + b)
            if self.lift(m) - target > 0.0:
                b = m
            else:
                a = m
            if b - a <= 1e-15:
                break
        return 0.5 * (a + b)

    def inverse_branches(self, p) -> list[Branch]:
        y = wrap_point(p)[0]
        out = []
        for k in range(self.degree):
            x = self.branch_preimage(y, k)
            d = self.deriv(x)
            if abs(d) < DERIV_FLOOR:
                raise ZeroDerivativeError(
                    f"derivative {d:.3e} at preimage x={x!r} (branch {k}): "
                    "not a local diffeomorphism there"
                )
            out.append(Branch(point=np.array([x]), inverse_jacobian=np.array([[1.0 / d]])))
        return out

    def itinerary(self, x: float, n: int) -> np.ndarray:
        cuts = self.branch_cuts()
        out = np.empty(n, dtype=np.int8)
        for j in range(n):
            out[j] = int(np.searchsorted(cuts, x, side="right") - 1)
            x = float(self.eval_point(np.array([x]))[0])
        return out


class CustomTorusMap(MapModel):
    """Closed-form torus map; Jacobian (and inverse, if any) user-supplied."""

    dim = 2
    family = "custom_closed_form"
    degree = None

    def __init__(self, fn: Callable[[np.ndarray], Sequence[float]],
                 jac: Callable[[np.ndarray], np.ndarray] | None,
                 inverse: Callable[[np.ndarray], Sequence[float]] | None = None):
        self._fn = fn
        self._jac = jac
        self._inv = inverse
        self.invertible = inverse is not None
        self.params = {}

    def eval_point(self, p) -> np.ndarray:
        return wrap_point(self._fn(wrap_point(p)))

    def jacobian(self, p) -> np.ndarray:
        if self._jac is None:
            raise MissingDerivativeError(
                "custom model has no derivative formula; supply jac= at construction"
            )
        return np.asarray(self._jac(wrap_point(p)), dtype=np.float64)

    def inverse_point(self, p) -> np.ndarray:
        if self._inv is None:
            raise UnsupportedModelError("custom torus model has no inverse formula")
        return wrap_point(self._inv(wrap_point(p)))

    def inverse_branches(self, p) -> list[Branch]:
        pre = self.inverse_point(p)
        return [Branch(point=pre, inverse_jacobian=np.linalg.inv(self.jacobian(pre)))]


def make_model(family: str, s: float | None = None) -> MapModel:
    """Construct a built-in model by family name."""
    if family == "doubling":
        if s not in (None, 0.0):
            raise ModelError("doubling takes no parameter; use perturbed_doubling")
        return CircleFamily(0.0, family="doubling")
    if family == "perturbed_doubling":
        if s is None:
            raise ModelError("perturbed_doubling requires parameter s")
        return CircleFamily(s, family="perturbed_doubling")
    if family == "cat_map":
        if s not in (None, 0.0):
            raise ModelError("cat_map takes no parameter; use perturbed_cat")
        return TorusFamily(0.0, family="cat_map")
    if family == "perturbed_cat":
        if s is None:
            raise ModelError("perturbed_cat requires parameter s")
        return TorusFamily(s, family="perturbed_cat")
    raise ModelError(f"unknown family {family!r}")


def eval_map(model: MapModel, p) -> np.ndarray:
    return model.eval_point(p)


def jacobian(model: MapModel, p) -> np.ndarray:
    return model.jacobian(p)


def inverse_branches(model: MapModel, p) -> list[Branch]:
    return model.inverse_branches(p)


def iterate_orbit(model: MapModel, p, n: int) -> OrbitSegment:
    return model.iterate(p, n)


@dataclass(frozen=True)
class ConormScan:
    value: float
    argmin: np.ndarray
    grid: int


def min_conorm_scan(model: MapModel, grid: int) -> ConormScan:
    """Deterministic scan of the Jacobian conorm over a uniform grid.

    The conorm lower bound is what the local-diffeomorphism check consumes;
    the argmin is reported so failures are attributable.
    """
    if grid < 2:
        raise ModelError(f"grid must be >= 2, got {grid}")
    if model.dim == 1:
        if isinstance(model, CircleFamily):
            val, arg = kernels.min_abs_deriv_scan(model.s, grid)
            return ConormScan(value=float(val), argmin=np.array([arg]), grid=grid)
        best, arg = math.inf, 0.0
        for i in range(grid):
            x = i / grid
            d = abs(model.jacobian(np.array([x]))[0, 0])
            if d < best:
                best, arg = d, x
        return ConormScan(value=float(best), argmin=np.array([arg]), grid=grid)
    best = math.inf
    argp = np.zeros(2)
    for i in range(grid):
        for j in range(grid):
            p = np.array([i / grid, j / grid])
            c = conorm(model.jacobian(p))
            if c < best:
                best = c
                argp = p
    return ConormScan(value=float(best), argmin=argp, grid=grid)
