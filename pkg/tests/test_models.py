import math

import numpy as np
import pytest

from confdyn import models, sphere
from confdyn.models import (
    ChebyshevModel,
    CircleModel,
    Interval,
    ShiftedSquareModel,
    SphereMapModel,
    TentModel,
    chebyshev_quartic_spec,
    lattes_degree2_spec,
)

import oracles


class TestInterval:
    def test_basic(self):
        iv = Interval(0.25, 0.5)
        assert iv.length == 0.25
        assert iv.contains(Interval(0.3, 0.4))
        assert iv.disjoint(Interval(0.5, 0.7))
        assert iv.intersect(Interval(0.4, 0.6)).length == pytest.approx(0.1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Interval(0.5, 0.5)

    def test_union_length(self):
        got = models.union_length([Interval(0, 0.3), Interval(0.2, 0.5),
                                   Interval(0.8, 0.9)])
        assert got == pytest.approx(0.6)


class TestCircleModel:
    def test_angle_equals_spherical_derivative_of_power_map(self):
        # the model's constant derivative matches |Df| of z^d on |z| = 1
        for d in (2, 3):
            m = CircleModel(d)
            f = models.power_map_spec(d)
            p = sphere.SpherePoint.from_complex(np.exp(0.9j))
            assert m.deriv(0.3) == pytest.approx(
                sphere.spherical_derivative(f, p), abs=1e-12)

    def test_branches_invert(self):
        m = CircleModel(3)
        for k in range(3):
            x = m.branch_inverse(k, 0.4)
            assert m.apply(x) == pytest.approx(0.4)

    def test_pullback_interval(self):
        m = CircleModel(2)
        pb = m.pullback_interval(1, Interval(0.0, 0.5))
        assert (pb.a, pb.b) == (0.5, 0.75)

    def test_circle_distance(self):
        m = CircleModel(2)
        assert m.distance(0.05, 0.95) == pytest.approx(0.1)


class TestTentChebyshev:
    def test_conjugacy(self):
        tent = TentModel()
        ch = ChebyshevModel()
        us = np.linspace(0.01, 0.99, 37)
        lhs = ch.apply(ch.from_tent(us))
        rhs = ch.from_tent(tent.apply(us))
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_branch_inverses(self):
        ch = ChebyshevModel()
        for k in (0, 1):
            x = ch.branch_inverse(k, 0.7)
            assert ch.apply(x) == pytest.approx(0.7)

    def test_acip_cdf_matches_quadrature(self):
        a, b = 0.2, 0.7
        closed = ChebyshevModel.acip_cdf(b) - ChebyshevModel.acip_cdf(a)
        quad = oracles.chebyshev_acip_mass_quadrature(a, b)
        assert closed == pytest.approx(quad, abs=1e-6)

    def test_weight_primitive_is_antiderivative(self):
        ch = ChebyshevModel()
        t = 0.7
        prim = ch.weight_primitive(t)
        a, b = 0.1, 0.4
        want = np.trapezoid(ch.deriv(np.linspace(a, b, 20001)) ** (1 - t),
                            np.linspace(a, b, 20001))
        assert prim(b) - prim(a) == pytest.approx(want, rel=1e-6)

    def test_weight_primitive_rejects_t_ge_2(self):
        with pytest.raises(ValueError):
            ChebyshevModel().weight_primitive(2.0)


class TestShiftedSquare:
    def test_invariant_segment(self):
        m = ShiftedSquareModel()
        xs = np.linspace(-2, 2, 101)
        ys = m.apply(xs)
        assert ys.min() >= -2 - 1e-12 and ys.max() <= 2 + 1e-12

    def test_conjugate_to_chebyshev(self):
        # h(x) = 2 - 4x conjugates 4x(1-x) to z^2 - 2
        m = ShiftedSquareModel()
        ch = ChebyshevModel()
        xs = np.linspace(0.01, 0.99, 23)
        assert np.allclose(m.apply(2 - 4 * xs), 2 - 4 * ch.apply(xs), atol=1e-12)

    def test_primitive(self):
        m = ShiftedSquareModel()
        prim = m.weight_primitive(0.5)
        xs = np.linspace(0.3, 1.7, 30001)
        want = np.trapezoid(m.deriv(xs) ** 0.5, xs)
        assert prim(1.7) - prim(0.3) == pytest.approx(want, rel=1e-7)


class TestSphereModel:
    def test_wraps_spec(self):
        sm = SphereMapModel(chebyshev_quartic_spec())
        p = sphere.SpherePoint.from_complex(0.3)
        q = sm.apply(p)
        assert q.isclose(sphere.SpherePoint.from_complex(4 * 0.3 * 0.7))
        assert sm.degree == 2
        assert len(list(sm.preimages(q))) >= 1

    def test_rejects_degree_one(self):
        with pytest.raises(ValueError):
            SphereMapModel(models.RationalMapSpec.build([0.0, 1.0], [1.0]))

    def test_lattes_postcritical_structure(self):
        # critical points +-i -> -+1 -> 0 -> inf (fixed, repelling):
        # the finite postcritical set that makes the example exceptional
        f = lattes_degree2_spec()
        sm = SphereMapModel(f)
        crit = sm.critical_set
        assert sum(crit.multiplicities) == 2
        pts = sorted(p.to_complex().imag for p in crit.points)
        assert pts == pytest.approx([-1.0, 1.0], abs=1e-9)
        pi = sphere.SpherePoint.from_complex(1j)
        o1 = sm.apply(pi)
        o2 = sm.apply(o1)
        o3 = sm.apply(o2)
        assert o1.isclose(sphere.SpherePoint.from_complex(-1.0))
        assert o2.isclose(sphere.SpherePoint.from_complex(0.0))
        assert o3.is_infinity()
        inf = sphere.SpherePoint.infinity()
        assert sm.apply(inf).is_infinity()
        assert sm.deriv(inf) > 1.0  # repelling fixed point

    def test_lattes_deck_symmetry(self):
        f = lattes_degree2_spec()
        zs = np.array([0.3 + 0.2j, 1.7 - 0.4j, -2.2 + 1j])
        assert np.allclose(sphere.eval_bulk(f, zs), sphere.eval_bulk(f, -1.0 / zs),
                           atol=1e-12)
