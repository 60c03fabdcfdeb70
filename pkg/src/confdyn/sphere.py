"""Riemann-sphere geometry of rational maps.

Points live in normalised homogeneous coordinates [h0 : h1] (the affine
point is h0/h1, and [1 : 0] is the point at infinity), so poles and
infinity need no special casing anywhere.  Distances use the chordal
metric of diameter 2 and derivatives are spherical derivatives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import polys
from .errors import DegenerateEvaluation, RootFindingFailure

NORM_TOL = 1e-12
EQ_TOL = 1e-9
PREIMAGE_RESIDUAL_TOL = 1e-9
COPRIME_RESULTANT_TOL = 1e-10


class SpherePoint:
    """A point of the Riemann sphere as a unit homogeneous pair."""

    __slots__ = ("h0", "h1")

    def __init__(self, h0, h1):
        h0 = complex(h0)
        h1 = complex(h1)
        n = np.hypot(abs(h0), abs(h1))
        if n < NORM_TOL:
            raise ValueError("the zero pair (0, 0) does not represent a point")
        self.h0 = h0 / n
        self.h1 = h1 / n

    @classmethod
    def from_complex(cls, z) -> "SpherePoint":
        z = complex(z)
        if abs(z) <= 1.0:
            return cls(z, 1.0)
        # build from 1/z so neither coordinate overflows for huge |z|
        return cls(1.0, 1.0 / z)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(1.0, 0.0)

    def is_infinity(self, tol: float = EQ_TOL) -> bool:
        return abs(self.h1) < tol

    def to_complex(self) -> complex:
        """Affine coordinate; raises for points too close to infinity."""
        if self.is_infinity(1e-15):
            raise ZeroDivisionError("point at infinity has no affine coordinate")
        return self.h0 / self.h1

    def isclose(self, other: "SpherePoint", tol: float = EQ_TOL) -> bool:
        """Projective equality |h0*g1 - h1*g0| < tol."""
        return abs(self.h0 * other.h1 - self.h1 * other.h0) < tol

    def __repr__(self):
        if self.is_infinity():
            return "SpherePoint(inf)"
        z = self.to_complex()
        return f"SpherePoint({z.real:.6g}{z.imag:+.6g}j)"


def spherical_distance(x: SpherePoint, y: SpherePoint) -> float:
    """Chordal distance 2|z-w|/sqrt((1+|z|^2)(1+|w|^2)), range [0, 2].

    In unit homogeneous coordinates this is exactly 2|x0*y1 - x1*y0|,
    which is stable at poles and at infinity.
    """
    return 2.0 * abs(x.h0 * y.h1 - x.h1 * y.h0)


@dataclass(frozen=True)
class RationalMapSpec:
    """A rational map as ascending-degree coefficient tuples num/den."""

    num: tuple
    den: tuple
    degree: int

    @classmethod
    def build(cls, num, den) -> "RationalMapSpec":
        num = polys.trim(np.asarray(num, dtype=complex))
        den = polys.trim(np.asarray(den, dtype=complex))
        if np.allclose(num, 0) or np.allclose(den, 0):
            raise ValueError("numerator and denominator must be nonzero")
        scale = max(np.abs(num).max(), np.abs(den).max())
        num = num / scale
        den = den / scale
        d = max(len(num), len(den)) - 1
        if d >= 1:
            # reject non-reduced fractions: an approximate common root makes
            # the resultant of the scaled pair tiny
            res = abs(polys.sylvester_resultant(num, den))
            if res < COPRIME_RESULTANT_TOL:
                raise ValueError(
                    f"num and den share a root to tolerance (|resultant| = {res:.3e})"
                )
        return cls(tuple(num.tolist()), tuple(den.tolist()), d)

    @classmethod
    def from_json(cls, text: str) -> "RationalMapSpec":
        data = json.loads(text)
        num = [complex(re, im) for re, im in data["num"]]
        den = [complex(re, im) for re, im in data["den"]]
        return cls.build(num, den)

    def to_json(self) -> str:
        return json.dumps(
            {
                "num": [[z.real, z.imag] for z in self.num],
                "den": [[z.real, z.imag] for z in self.den],
            }
        )

    def num_array(self) -> np.ndarray:
        return np.asarray(self.num, dtype=complex)

    def den_array(self) -> np.ndarray:
        return np.asarray(self.den, dtype=complex)


def require_dynamical(f: RationalMapSpec):
    """Dynamical operations assume degree >= 2."""
    if f.degree < 2:
        raise ValueError(f"map degree {f.degree} < 2: not a dynamical system here")


@dataclass
class CriticalSet:
    points: list
    multiplicities: list

    def __post_init__(self):
        total = sum(self.multiplicities)
        self._expected = total  # set properly by critical_points

    def __iter__(self):
        return iter(zip(self.points, self.multiplicities))


def eval_map(f: RationalMapSpec, x: SpherePoint) -> SpherePoint:
    """Apply f in homogeneous coordinates; well-defined at poles and infinity."""
    d = f.degree
    n = polys.homogeneous_eval(f.num_array(), x.h0, x.h1, d)
    m = polys.homogeneous_eval(f.den_array(), x.h0, x.h1, d)
    if np.hypot(abs(n), abs(m)) < NORM_TOL:
        raise DegenerateEvaluation(
            "homogeneous image vanished; map appears to have a common factor"
        )
    return SpherePoint(n, m)


def _reversed_pair(f: RationalMapSpec):
    """Coefficients of the conjugate map 1/f(1/w) as (num~, den~)."""
    d = f.degree
    num = np.zeros(d + 1, dtype=complex)
    den = np.zeros(d + 1, dtype=complex)
    num[: len(f.num)] = f.num_array()
    den[: len(f.den)] = f.den_array()
    return den[::-1].copy(), num[::-1].copy()


def _affine_spherical_deriv(num, den, z: complex) -> float:
    nv = polys.peval(num, z)
    dv = polys.peval(den, z)
    wv = polys.peval(polys.pderiv(num), z) * dv - nv * polys.peval(polys.pderiv(den), z)
    return abs(wv) * (1.0 + abs(z) ** 2) / (abs(nv) ** 2 + abs(dv) ** 2)


def spherical_derivative(f: RationalMapSpec, x: SpherePoint) -> float:
    """|f'(z)| (1+|z|^2)/(1+|f(z)|^2), computed in whichever chart keeps
    |coordinate| <= 1.  Zero exactly on the critical set."""
    if abs(x.h1) >= abs(x.h0):
        return _affine_spherical_deriv(f.num_array(), f.den_array(), x.h0 / x.h1)
    # w = 1/z chart; z -> 1/z is a chordal isometry so the value is unchanged
    rnum, rden = _reversed_pair(f)
    return _affine_spherical_deriv(rnum, rden, x.h1 / x.h0)


def preimages(f: RationalMapSpec, z: SpherePoint, tol: float = 1e-12,
              max_sweeps: int = 200):
    """All d solutions of f(w) = z with multiplicity.

    Roots of zd*num(w) - zc*den(w); the degree deficiency of that
    polynomial is the multiplicity of the preimage at infinity.
    """
    d = f.degree
    num = np.zeros(d + 1, dtype=complex)
    den = np.zeros(d + 1, dtype=complex)
    num[: len(f.num)] = f.num_array()
    den[: len(f.den)] = f.den_array()
    coeffs = z.h1 * num - z.h0 * den
    # scale-aware trim of the leading coefficients that genuinely vanish
    mags = np.abs(coeffs)
    top = mags.max()
    if top == 0:
        raise DegenerateEvaluation("preimage polynomial vanished identically")
    keep = d
    while keep > 0 and mags[keep] < 1e-14 * top:
        keep -= 1
    poly = coeffs[: keep + 1]
    roots = polys.aberth_roots(poly, tol=tol, max_sweeps=max_sweeps)
    inf_mult = d - keep

    found = []
    for center, mult in polys.cluster_roots(roots, radius=1e-7):
        found.append((SpherePoint.from_complex(center), mult))
    if inf_mult > 0:
        found.append((SpherePoint.infinity(), inf_mult))
    total = sum(m for _, m in found)
    if total != d:
        raise RootFindingFailure(
            f"preimage count {total} != degree {d} after clustering"
        )
    for p, _ in found:
        resid = spherical_distance(eval_map(f, p), z)
        if resid > PREIMAGE_RESIDUAL_TOL:
            raise RootFindingFailure(
                f"preimage residual {resid:.3e} exceeds {PREIMAGE_RESIDUAL_TOL}",
                residual=resid,
            )
    # deterministic order: by argument then modulus of the affine coordinate
    def _key(item):
        p = item[0]
        if p.is_infinity():
            return (2.0, 0.0, 0.0)
        w = p.to_complex()
        return (0.0, round(np.angle(w), 12), abs(w))

    found.sort(key=_key)
    return found


def critical_points(f: RationalMapSpec, tol: float = 1e-12) -> CriticalSet:
    """Zeros of the Wronskian num'*den - num*den'; 2d-2 points with
    multiplicity, including any at infinity."""
    require_dynamical(f)
    d = f.degree
    num, den = f.num_array(), f.den_array()
    wron = polys.padd(
        polys.pmul(polys.pderiv(num), den),
        polys.pscale(polys.pmul(num, polys.pderiv(den)), -1.0),
    )
    mags = np.abs(wron)
    top = mags.max()
    if top == 0:
        raise RootFindingFailure("Wronskian vanished identically")
    keep = len(wron) - 1
    while keep > 0 and mags[keep] < 1e-14 * top:
        keep -= 1
    wron = wron[: keep + 1]
    roots = polys.aberth_roots(wron, tol=tol)
    points = []
    mults = []
    for center, mult in polys.cluster_roots(roots, radius=1e-7):
        points.append(SpherePoint.from_complex(center))
        mults.append(mult)
    inf_mult = (2 * d - 2) - polys.degree(wron)
    if inf_mult > 0:
        points.append(SpherePoint.infinity())
        mults.append(inf_mult)
    if sum(mults) != 2 * d - 2:
        raise RootFindingFailure(
            f"critical count {sum(mults)} != 2d-2 = {2 * d - 2}"
        )
    return CriticalSet(points, mults)


def min_distance_to_critical(x: SpherePoint, crit: CriticalSet) -> float:
    return min(spherical_distance(x, p) for p in crit.points)


# -- vectorised helpers on affine arrays ------------------------------------
#
# Hot loops (Julia clouds, transfer-matrix assembly) work on plain complex
# arrays in the z-chart.  Points escaping to very large |z| stay valid:
# formulas below avoid dividing by den alone.

def eval_bulk(f: RationalMapSpec, zs: np.ndarray) -> np.ndarray:
    zs = np.asarray(zs, dtype=complex)
    n = polys.peval(f.num_array(), zs)
    d = polys.peval(f.den_array(), zs)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = n / d
    out = np.where(d == 0, np.inf + 0j, out)
    return out


def spherical_derivative_bulk(f: RationalMapSpec, zs: np.ndarray) -> np.ndarray:
    """Spherical derivative on an array of affine points (|z| finite)."""
    zs = np.asarray(zs, dtype=complex)
    out = np.empty(zs.shape, dtype=float)
    inner = np.abs(zs) <= 1.0
    if np.any(inner):
        z = zs[inner]
        num, den = f.num_array(), f.den_array()
        nv = polys.peval(num, z)
        dv = polys.peval(den, z)
        wv = polys.peval(polys.pderiv(num), z) * dv - nv * polys.peval(polys.pderiv(den), z)
        out[inner] = np.abs(wv) * (1.0 + np.abs(z) ** 2) / (np.abs(nv) ** 2 + np.abs(dv) ** 2)
    if np.any(~inner):
        w = 1.0 / zs[~inner]
        rnum, rden = _reversed_pair(f)
        nv = polys.peval(rnum, w)
        dv = polys.peval(rden, w)
        wv = polys.peval(polys.pderiv(rnum), w) * dv - nv * polys.peval(polys.pderiv(rden), w)
        out[~inner] = np.abs(wv) * (1.0 + np.abs(w) ** 2) / (np.abs(nv) ** 2 + np.abs(dv) ** 2)
    return out


def preimages_bulk(f: RationalMapSpec, ws: np.ndarray) -> np.ndarray:
    """Solve f(z) = w for arrays of targets; returns shape (degree, len(ws)).

    Closed forms for quadratic maps and pure powers cover the benchmark
    registry; anything else falls back to the per-point root finder.
    Preimages at infinity come back as complex inf entries.
    """
    ws = np.asarray(ws, dtype=complex)
    d = f.degree
    num = np.zeros(d + 1, dtype=complex)
    den = np.zeros(d + 1, dtype=complex)
    num[: len(f.num)] = f.num_array()
    den[: len(f.den)] = f.den_array()

    mono = np.allclose(num[:-1], 0) and num[-1] != 0 and polys.degree(f.den_array()) == 0
    if mono:
        # z^d = w * den0 / num_d : d-th roots
        vals = ws * (den[0] / num[d])
        base = vals ** (1.0 / d)
        units = np.exp(2j * np.pi * np.arange(d) / d)
        return base[None, :] * units[:, None]

    if d == 2:
        a = num[2] - ws * den[2]
        b = num[1] - ws * den[1]
        c0 = num[0] - ws * den[0]
        disc = np.sqrt(b * b - 4.0 * a * c0 + 0j)
        # cancellation-safe quadratic roots
        sgn = np.where(np.abs(b + disc) >= np.abs(b - disc), 1.0, -1.0)
        q = -0.5 * (b + sgn * disc)
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(a != 0, q / a, np.inf + 0j)
            r2 = np.where(q != 0, c0 / q, np.where(a != 0, -b / a - r1, np.inf + 0j))
        return np.stack([r1, r2])

    out = np.empty((d, ws.size), dtype=complex)
    flat = ws.ravel()
    for i, w in enumerate(flat):
        pts = []
        for p, mult in preimages(f, SpherePoint.from_complex(w)):
            val = np.inf + 0j if p.is_infinity() else p.to_complex()
            pts.extend([val] * mult)
        out[:, i] = pts
    return out.reshape((d,) + ws.shape)


def fixed_points(f: RationalMapSpec):
    """Fixed points of f as (SpherePoint, |Df|) pairs, infinity included."""
    d = f.degree
    num = np.zeros(d + 1, dtype=complex)
    den = np.zeros(d + 1, dtype=complex)
    num[: len(f.num)] = f.num_array()
    den[: len(f.den)] = f.den_array()
    # num(z) - z*den(z), an array of length d+2
    coeffs = np.zeros(d + 2, dtype=complex)
    coeffs[: d + 1] += num
    coeffs[1:] -= den
    mags = np.abs(coeffs)
    keep = len(coeffs) - 1
    while keep > 0 and mags[keep] < 1e-14 * mags.max():
        keep -= 1
    roots = polys.aberth_roots(coeffs[: keep + 1])
    pts = [SpherePoint.from_complex(r) for r, _ in polys.cluster_roots(roots, 1e-9)]
    if keep < d + 1:  # deficiency: infinity is fixed
        pts.append(SpherePoint.infinity())
    out = []
    for p in pts:
        if spherical_distance(eval_map(f, p), p) < 1e-6:
            out.append((p, spherical_derivative(f, p)))
    return out
