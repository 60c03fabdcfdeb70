"""Phase-space models with a common interface.

Two flavours:

* exact one-dimensional models (angle coordinates for z^d on its circle,
  the tent map, the Chebyshev-type interval maps) where inverse branches,
  pullbacks of intervals and derivative integrals all have closed forms;
* a wrapper around :class:`RationalMapSpec` treating the full sphere,
  where preimages come from polynomial root finding.

The 1-d models deliberately use their natural coordinate metric (arc
length on the circle, Euclidean length on intervals); every benchmark
statement checked against them is scale-insensitive or is stated in the
same coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sphere
from .sphere import RationalMapSpec, SpherePoint


@dataclass(frozen=True)
class Interval:
    """Half-open interval [a, b) used for exact 1-d set arithmetic."""

    a: float
    b: float

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"empty interval [{self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def mid(self) -> float:
        return 0.5 * (self.a + self.b)

    def contains_point(self, x: float, tol: float = 0.0) -> bool:
        return self.a - tol <= x < self.b + tol

    def contains(self, other: "Interval", tol: float = 1e-12) -> bool:
        return other.a >= self.a - tol and other.b <= self.b + tol

    def disjoint(self, other: "Interval", tol: float = 1e-12) -> bool:
        return other.b <= self.a + tol or other.a >= self.b - tol

    def intersect(self, other: "Interval"):
        a = max(self.a, other.a)
        b = min(self.b, other.b)
        return Interval(a, b) if b > a else None


def union_length(intervals) -> float:
    ivs = sorted(intervals, key=lambda i: i.a)
    total = 0.0
    cur_a = cur_b = None
    for iv in ivs:
        if cur_b is None or iv.a > cur_b:
            if cur_b is not None:
                total += cur_b - cur_a
            cur_a, cur_b = iv.a, iv.b
        else:
            cur_b = max(cur_b, iv.b)
    if cur_b is not None:
        total += cur_b - cur_a
    return total


class Model1D:
    """Shared behaviour of the exact interval/circle models."""

    lo = 0.0
    hi = 1.0
    circle = False
    name = "model"
    degree = 2

    # -- dynamics ---------------------------------------------------------
    def apply(self, x):
        raise NotImplementedError

    def deriv(self, x):
        """Absolute derivative used for conformality (Euclidean/angle)."""
        raise NotImplementedError

    def log_deriv(self, x):
        return np.log(self.deriv(x))

    def branch_inverse(self, k: int, y):
        raise NotImplementedError

    def preimages(self, y):
        return [(self.branch_inverse(k, y), 1) for k in range(self.degree)]

    def pullback_interval(self, k: int, iv: Interval) -> Interval:
        """Exact image of an interval under the k-th inverse branch."""
        a = self.branch_inverse(k, iv.a)
        b = self.branch_inverse(k, iv.b)
        return Interval(min(a, b), max(a, b))

    # -- geometry ---------------------------------------------------------
    @property
    def domain(self) -> Interval:
        return Interval(self.lo, self.hi)

    @property
    def domain_length(self) -> float:
        return self.hi - self.lo

    def distance(self, x, y) -> float:
        d = abs(x - y)
        if self.circle:
            span = self.domain_length
            d = d % span
            return min(d, span - d)
        return d

    def lebesgue(self, iv: Interval) -> float:
        """Normalised Lebesgue mass of an interval of the domain."""
        return iv.length / self.domain_length

    # -- transfer-operator closed forms ------------------------------------
    def weight_primitive(self, t: float):
        """Antiderivative of |f'(u)|^(1-t); overridden where non-constant."""
        raise NotImplementedError


class CircleModel(Model1D):
    """z -> z^d on its invariant circle, in angle coordinates on [0, 1).

    The angle derivative d equals the spherical derivative of z^d on
    |z| = 1, so Lyapunov and pressure statements transfer verbatim.
    """

    circle = True

    def __init__(self, d: int = 2):
        if d < 2:
            raise ValueError("degree must be >= 2")
        self.degree = int(d)
        self.name = f"circle-z{d}"

    def apply(self, x):
        return (self.degree * np.asarray(x)) % 1.0

    def deriv(self, x):
        return np.broadcast_to(float(self.degree), np.shape(x)).copy() if np.ndim(x) else float(self.degree)

    def branch_inverse(self, k, y):
        return (np.asarray(y) + k) / self.degree

    def weight_primitive(self, t):
        c = float(self.degree) ** (1.0 - t)
        return lambda u: c * u


class TentModel(Model1D):
    """The full tent map u -> 1 - |1 - 2u| on [0, 1]; slope 2 everywhere."""

    name = "tent"
    degree = 2

    def apply(self, x):
        x = np.asarray(x)
        return 1.0 - np.abs(1.0 - 2.0 * x)

    def deriv(self, x):
        return np.broadcast_to(2.0, np.shape(x)).copy() if np.ndim(x) else 2.0

    def branch_inverse(self, k, y):
        y = np.asarray(y)
        return y / 2.0 if k == 0 else 1.0 - y / 2.0

    def weight_primitive(self, t):
        c = 2.0 ** (1.0 - t)
        return lambda u: c * u


class ChebyshevModel(Model1D):
    """x -> 4x(1-x) on [0, 1] in its own coordinates.

    Conjugate to the tent map via h(u) = sin^2(pi u / 2); `to_tent` /
    `from_tent` move data between the two charts.
    """

    name = "chebyshev"
    degree = 2

    def apply(self, x):
        x = np.asarray(x)
        return 4.0 * x * (1.0 - x)

    def deriv(self, x):
        return np.abs(4.0 - 8.0 * np.asarray(x))

    def branch_inverse(self, k, y):
        r = np.sqrt(np.maximum(1.0 - np.asarray(y, dtype=float), 0.0))
        return (1.0 - r) / 2.0 if k == 0 else (1.0 + r) / 2.0

    @staticmethod
    def to_tent(x):
        return (2.0 / np.pi) * np.arcsin(np.sqrt(np.clip(x, 0.0, 1.0)))

    @staticmethod
    def from_tent(u):
        return np.sin(np.pi * np.asarray(u) / 2.0) ** 2

    @staticmethod
    def acip_cdf(x):
        """Closed-form invariant distribution function (2/pi) asin sqrt(x)."""
        return (2.0 / np.pi) * np.arcsin(np.sqrt(np.clip(x, 0.0, 1.0)))

    def weight_primitive(self, t):
        if t >= 2.0:
            raise ValueError("|f'|^(1-t) is non-integrable across the critical point for t >= 2")

        def prim(u):
            s = 4.0 - 8.0 * np.asarray(u)
            return -np.sign(s) * np.abs(s) ** (2.0 - t) / (8.0 * (2.0 - t))

        return prim


class ShiftedSquareModel(Model1D):
    """x -> x^2 - 2 on its invariant segment [-2, 2]."""

    name = "zsq-minus-2"
    degree = 2
    lo = -2.0
    hi = 2.0

    def apply(self, x):
        x = np.asarray(x)
        return x * x - 2.0

    def deriv(self, x):
        return 2.0 * np.abs(np.asarray(x))

    def branch_inverse(self, k, y):
        r = np.sqrt(np.maximum(np.asarray(y, dtype=float) + 2.0, 0.0))
        return -r if k == 0 else r

    def weight_primitive(self, t):
        if t >= 2.0:
            raise ValueError("|f'|^(1-t) is non-integrable across the critical point for t >= 2")

        def prim(u):
            u = np.asarray(u)
            return np.sign(u) * np.abs(2.0 * u) ** (2.0 - t) / (2.0 * (2.0 - t))

        return prim


class SphereMapModel:
    """Rational map acting on SpherePoints with the chordal metric.

    Degree-1 maps are representable (some probe utilities use them);
    genuinely dynamical operations enforce degree >= 2 themselves.
    """

    def __init__(self, spec: RationalMapSpec, name: str | None = None):
        self.spec = spec
        self.degree = spec.degree
        self.name = name or f"rational-deg{spec.degree}"
        self._crit = None

    def apply(self, x: SpherePoint) -> SpherePoint:
        return sphere.eval_map(self.spec, x)

    def deriv(self, x: SpherePoint) -> float:
        return sphere.spherical_derivative(self.spec, x)

    def log_deriv(self, x: SpherePoint) -> float:
        return float(np.log(self.deriv(x)))

    def preimages(self, y: SpherePoint):
        return sphere.preimages(self.spec, y)

    def distance(self, x: SpherePoint, y: SpherePoint) -> float:
        return sphere.spherical_distance(x, y)

    @property
    def critical_set(self):
        if self._crit is None:
            self._crit = sphere.critical_points(self.spec)
        return self._crit

    def distance_to_critical(self, x: SpherePoint) -> float:
        return sphere.min_distance_to_critical(x, self.critical_set)


# -- ready-made map specs --------------------------------------------------

def power_map_spec(d: int = 2) -> RationalMapSpec:
    num = [0.0] * d + [1.0]
    return RationalMapSpec.build(num, [1.0])


def quadratic_spec(c: complex) -> RationalMapSpec:
    return RationalMapSpec.build([c, 0.0, 1.0], [1.0])


def chebyshev_quartic_spec() -> RationalMapSpec:
    """The logistic-form Chebyshev map z -> 4z(1-z)."""
    return RationalMapSpec.build([0.0, 4.0, -4.0], [1.0])


def lattes_degree2_spec() -> RationalMapSpec:
    """Degree-2 map z -> (i/2)(z - 1/z), covered by multiplication by
    (1+i) on the square torus; its Julia set is the whole sphere."""
    return RationalMapSpec.build([-0.5j, 0.0, 0.5j], [0.0, 1.0])
