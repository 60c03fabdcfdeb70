import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confdyn import polys, sphere
from confdyn.errors import DegenerateEvaluation
from confdyn.models import chebyshev_quartic_spec, power_map_spec, quadratic_spec
from confdyn.sphere import (
    RationalMapSpec,
    SpherePoint,
    critical_points,
    eval_map,
    preimages,
    spherical_derivative,
    spherical_distance,
)

import oracles


def pt(z):
    return SpherePoint.from_complex(z)


finite_complex = st.builds(
    complex,
    st.floats(-5, 5, allow_nan=False, allow_infinity=False),
    st.floats(-5, 5, allow_nan=False, allow_infinity=False),
)


class TestSpherePoint:
    def test_normalised(self):
        p = SpherePoint(3.0, 4.0j)
        assert abs(math.hypot(abs(p.h0), abs(p.h1)) - 1.0) < 1e-12

    def test_zero_pair_rejected(self):
        with pytest.raises(ValueError):
            SpherePoint(0.0, 0.0)

    def test_projective_equality(self):
        assert pt(2.0).isclose(SpherePoint(4.0, 2.0))
        assert not pt(2.0).isclose(pt(2.001))

    def test_infinity_roundtrip(self):
        p = SpherePoint.from_complex(1e60)
        assert p.is_infinity(1e-30) or abs(p.to_complex()) > 1e50


class TestEval:
    def test_infinity_fixed_for_polynomials(self):
        f = power_map_spec(2)
        assert eval_map(f, SpherePoint.infinity()).is_infinity()

    def test_z2_at_i(self):
        f = power_map_spec(2)
        assert eval_map(f, pt(1j)).isclose(pt(-1.0))

    def test_chebyshev_half_to_one(self):
        f = chebyshev_quartic_spec()
        assert eval_map(f, pt(0.5)).isclose(pt(1.0))

    def test_pole_maps_to_infinity(self):
        f = RationalMapSpec.build([1.0], [0.0, 0.0, 1.0])  # 1/z^2
        assert eval_map(f, pt(0.0)).is_infinity()

    def test_common_factor_rejected(self):
        with pytest.raises(ValueError):
            RationalMapSpec.build([0.0, 1.0], [0.0, 1.0])  # z/z


class TestDistance:
    def test_antipodal(self):
        assert spherical_distance(pt(0.0), SpherePoint.infinity()) == pytest.approx(2.0)

    def test_identity(self):
        assert spherical_distance(pt(0.3 + 1j), pt(0.3 + 1j)) == 0.0

    def test_one_minus_one(self):
        got = spherical_distance(pt(1.0), pt(-1.0))
        assert got == pytest.approx(2.0, abs=1e-12)
        assert got == pytest.approx(oracles.stereographic_chordal(1.0, -1.0), abs=1e-12)

    @given(finite_complex, finite_complex)
    @settings(max_examples=80, deadline=None)
    def test_matches_stereographic_embedding(self, z, w):
        got = spherical_distance(pt(z), pt(w))
        want = oracles.stereographic_chordal(z, w)
        assert got == pytest.approx(want, abs=1e-9)

    @given(finite_complex, finite_complex, finite_complex)
    @settings(max_examples=80, deadline=None)
    def test_metric_axioms(self, a, b, c):
        pa, pb, pc = pt(a), pt(b), pt(c)
        assert spherical_distance(pa, pb) == spherical_distance(pb, pa)
        assert spherical_distance(pa, pb) <= 2.0 + 1e-15
        assert (spherical_distance(pa, pc)
                <= spherical_distance(pa, pb) + spherical_distance(pb, pc) + 1e-12)


class TestSphericalDerivative:
    def test_z2_on_circle(self):
        f = power_map_spec(2)
        for theta in (0.0, 0.7, 2.1):
            assert spherical_derivative(f, pt(np.exp(1j * theta))) == pytest.approx(2.0, abs=1e-12)

    def test_z2_critical(self):
        f = power_map_spec(2)
        assert spherical_derivative(f, pt(0.0)) == 0.0
        assert spherical_derivative(f, SpherePoint.infinity()) == 0.0

    def test_against_finite_differences(self):
        f = quadratic_spec(0.2)
        x = 0.3

        def apply_c(z):
            return eval_map(f, pt(z)).to_complex()

        def dist_c(a, b):
            return spherical_distance(pt(a), pt(b))

        want = oracles.fd_spherical_derivative(apply_c, dist_c, x)
        got = spherical_derivative(f, pt(x))
        assert got == pytest.approx(want, rel=1e-5)

    def test_chart_invariance(self):
        # agreement of the two chart formulas for 0.5 < |z| < 2
        f = quadratic_spec(0.1)
        rng = np.random.default_rng(0)
        for _ in range(40):
            z = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            a = sphere._affine_spherical_deriv(f.num_array(), f.den_array(), z)
            rnum, rden = sphere._reversed_pair(f)
            b = sphere._affine_spherical_deriv(rnum, rden, 1.0 / z)
            assert a == pytest.approx(b, abs=1e-9, rel=1e-9)

    def test_chain_rule_against_composed_finite_difference(self):
        f = quadratic_spec(0.1)
        rng = np.random.default_rng(1)
        for _ in range(5):
            z = np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(0.9, 1.1)
            n = int(rng.integers(2, 8))

            def apply_c(w):
                return eval_map(f, pt(w)).to_complex()

            def dist_c(a, b):
                return spherical_distance(pt(a), pt(b))

            want = oracles.fd_iterated_log_derivative(apply_c, dist_c, z, n)
            total = 0.0
            cur = pt(z)
            for _ in range(n):
                total += math.log(spherical_derivative(f, cur))
                cur = eval_map(f, cur)
            assert total == pytest.approx(want, abs=1e-4)


class TestPreimages:
    def test_z2_of_one(self):
        f = power_map_spec(2)
        got = preimages(f, pt(1.0))
        zs = sorted(round(p.to_complex().real, 9) for p, _ in got)
        assert zs == [-1.0, 1.0]

    def test_z2_of_zero_multiplicity(self):
        f = power_map_spec(2)
        got = preimages(f, pt(0.0))
        assert len(got) == 1 and got[0][1] == 2
        assert got[0][0].isclose(pt(0.0))

    def test_quadratic_roots_closed_form(self):
        f = RationalMapSpec.build([-1.0, 0.0, 1.0], [1.0])  # z^2 - 1
        got = preimages(f, pt(0.0))
        want = sorted(oracles.quadratic_roots(1.0, 0.0, -1.0), key=lambda z: z.real)
        zs = sorted((p.to_complex() for p, _ in got), key=lambda z: z.real)
        for g, w in zip(zs, want):
            assert abs(g - w) < 1e-9

    def test_count_matches_degree_with_infinity(self):
        f = RationalMapSpec.build([1.0], [0.0, 0.0, 1.0])  # 1/z^2, preimage of 0 is inf
        got = preimages(f, pt(0.0))
        assert sum(m for _, m in got) == 2
        assert any(p.is_infinity() for p, _ in got)

    @given(finite_complex)
    @settings(max_examples=40, deadline=None)
    def test_roundtrip_through_eval(self, w):
        f = quadratic_spec(0.1)
        x = pt(w)
        y = eval_map(f, x)
        fiber = preimages(f, y)
        assert any(spherical_distance(p, x) < 1e-7 for p, _ in fiber)

    def test_bulk_matches_pointwise(self):
        f = quadratic_spec(0.1)
        ws = np.array([0.3 + 0.1j, -0.7, 1.2j])
        bulk = sphere.preimages_bulk(f, ws)
        for j, w in enumerate(ws):
            fiber = {round(p.to_complex().real, 8) + 1j * round(p.to_complex().imag, 8)
                     for p, _ in preimages(f, pt(w))}
            got = {complex(round(z.real, 8), round(z.imag, 8)) for z in bulk[:, j]}
            assert got == fiber


class TestCriticalPoints:
    def test_z2(self):
        crit = critical_points(power_map_spec(2))
        assert sum(crit.multiplicities) == 2
        assert any(p.is_infinity() for p in crit.points)
        assert any(p.isclose(pt(0.0)) for p in crit.points)

    def test_zc_any_c(self):
        crit = critical_points(quadratic_spec(0.37 + 0.1j))
        assert sum(crit.multiplicities) == 2
        assert any(p.is_infinity() for p in crit.points)
        assert any(p.isclose(pt(0.0)) for p in crit.points)

    def test_rational_hand_wronskian(self):
        # (z^2+1)/(z^2-1): W = 2z(z^2-1) - (z^2+1)2z = -4z, so crit = {0, inf}
        f = RationalMapSpec.build([1.0, 0.0, 1.0], [-1.0, 0.0, 1.0])
        crit = critical_points(f)
        assert sum(crit.multiplicities) == 2
        labels = {("inf" if p.is_infinity() else round(p.to_complex().real, 8))
                  for p in crit.points}
        assert labels == {"inf", 0.0}


class TestMapSpecJson:
    def test_roundtrip_tolerance(self):
        f = RationalMapSpec.build([0.1 + 0.2j, 0.0, 1.0], [1.0, 0.5])
        g = RationalMapSpec.from_json(f.to_json())
        assert g.degree == f.degree
        for a, b in zip(f.num, g.num):
            assert abs(a - b) <= 1e-15 * max(1.0, abs(a))
        for a, b in zip(f.den, g.den):
            assert abs(a - b) <= 1e-15 * max(1.0, abs(a))


class TestPolys:
    def test_aberth_known_roots(self):
        roots = np.array([1.0, -2.0, 3.0 + 1j, -0.5j])
        coeffs = np.array([1.0 + 0j])
        for r in roots:
            coeffs = polys.pmul(coeffs, np.array([-r, 1.0]))
        got = polys.aberth_roots(coeffs)
        for r in roots:
            assert min(abs(got - r)) < 1e-9

    def test_aberth_multiple_root_cluster(self):
        # (z-1)^3 (z+2)
        coeffs = polys.pmul(polys.pmul(polys.pmul(
            np.array([-1.0, 1.0]), np.array([-1.0, 1.0])),
            np.array([-1.0, 1.0])), np.array([2.0, 1.0]))
        clusters = polys.cluster_roots(polys.aberth_roots(coeffs), radius=1e-4)
        mults = sorted(m for _, m in clusters)
        assert mults == [1, 3]

    def test_resultant_detects_common_root(self):
        a = polys.pmul(np.array([-1.0, 1.0]), np.array([3.0, 1.0]))
        b = polys.pmul(np.array([-1.0, 1.0]), np.array([5.0, 2.0]))
        assert abs(polys.sylvester_resultant(a, b)) < 1e-12
        c = np.array([7.0, 1.0])
        assert abs(polys.sylvester_resultant(a, c)) > 1e-6

    def test_degenerate_evaluation_error(self):
        f = power_map_spec(2)
        bad = object.__new__(RationalMapSpec)
        object.__setattr__(bad, "num", (0.0, 0.0, 1.0))
        object.__setattr__(bad, "den", (0.0, 0.0, 1.0))
        object.__setattr__(bad, "degree", 2)
        with pytest.raises(DegenerateEvaluation):
            eval_map(bad, pt(0.0))
        del f
