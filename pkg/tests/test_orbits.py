import math

import numpy as np
import pytest

from confdyn import models, orbits, sphere
from confdyn.errors import (
    CriticalOrbitHit,
    CriticalProximity,
    DistortionBudgetExceeded,
)
from confdyn.models import ChebyshevModel, CircleModel, Interval
from confdyn.sphere import SpherePoint

import oracles

LOG2 = math.log(2)


class TestIterate:
    def test_z2_on_circle(self):
        f = models.power_map_spec(2)
        orb = orbits.iterate(f, SpherePoint.from_complex(np.exp(0.77j)), 10)
        assert len(orb.points) == 11
        for p in orb.points:
            assert abs(abs(p.h0 / p.h1)) == pytest.approx(1.0, abs=1e-12)
        for v in orb.log_derivs:
            assert v == pytest.approx(LOG2, abs=1e-12)

    def test_zero_steps(self):
        orb = orbits.iterate(CircleModel(2), 0.3, 0)
        assert len(orb.points) == 1 and orb.log_derivs == []

    def test_chebyshev_hand_iteration(self):
        f = models.chebyshev_quartic_spec()
        x = 0.3
        orb = orbits.iterate(f, SpherePoint.from_complex(x), 5)
        cur = x
        for p in orb.points:
            assert p.isclose(SpherePoint.from_complex(cur), 1e-9)
            cur = 4 * cur * (1 - cur)

    def test_negative_steps_rejected(self):
        with pytest.raises(ValueError):
            orbits.iterate(CircleModel(2), 0.3, -1)


class TestLyapunov:
    def test_z2_circle_exact(self):
        f = models.power_map_spec(2)

        def sampler(rng, n):
            return [SpherePoint.from_complex(np.exp(2j * np.pi * u))
                    for u in rng.uniform(0, 1, n)]

        est = orbits.lyapunov(f, sampler, 50, 20, seed=3)
        assert abs(est.mean - LOG2) < 1e-12

    def test_chebyshev_acip(self):
        ch = ChebyshevModel()
        est = orbits.lyapunov(ch, lambda rng, n: ch.from_tent(rng.uniform(0, 1, n)),
                              5000, 40, seed=11)
        assert abs(est.mean - LOG2) < 5e-3
        assert est.stderr == pytest.approx(
            np.std([est.mean], ddof=0), abs=1.0)  # shape sanity only

    def test_zero_steps_rejected(self):
        with pytest.raises(ValueError):
            orbits.lyapunov(CircleModel(2), lambda rng, n: rng.uniform(0, 1, n), 0, 5, 0)

    def test_critical_hit(self):
        ch = ChebyshevModel()
        with pytest.raises(CriticalOrbitHit):
            orbits.lyapunov(ch, lambda rng, n: np.full(n, 0.5), 3, 2, seed=0)

    def test_deterministic(self):
        ch = ChebyshevModel()
        s = lambda rng, n: ch.from_tent(rng.uniform(0, 1, n))
        a = orbits.lyapunov(ch, s, 100, 10, seed=5)
        b = orbits.lyapunov(ch, s, 100, 10, seed=5)
        assert a.mean == b.mean and a.stderr == b.stderr


class TestBackwardWalk:
    def test_fiber_probabilities_uniform(self):
        f = models.power_map_spec(2)
        fib, probs = orbits.fiber_distribution(f, SpherePoint.from_complex(1.0))
        assert probs.sum() == 1.0
        assert np.allclose(probs, [0.5, 0.5])

    def test_jacobian_t0_equals_uniform(self):
        f = models.power_map_spec(2)
        _, pu = orbits.fiber_distribution(f, SpherePoint.from_complex(1.0))
        _, pj = orbits.fiber_distribution(f, SpherePoint.from_complex(1.0),
                                          mode="jacobian", t=0.0)
        assert np.allclose(pu, pj)

    def test_jacobian_t1_equal_weights_on_circle(self):
        # both preimages of 1 under z^2 have |Df| = 2, so weights stay 1/2
        f = models.power_map_spec(2)
        _, pj = orbits.fiber_distribution(f, SpherePoint.from_complex(1.0),
                                          mode="jacobian", t=1.0)
        assert np.allclose(pj, [0.5, 0.5])
        assert abs(pj.sum() - 1.0) < 1e-12

    def test_backward_consistency(self):
        f = models.quadratic_spec(0.1)
        anchor = SpherePoint.from_complex(0.9)
        w = orbits.backward_walk(f, anchor, 12, seed=9)
        pts = [anchor] + w.branch
        for k in range(1, len(pts)):
            img = sphere.eval_map(f, pts[k])
            assert sphere.spherical_distance(img, pts[k - 1]) < 1e-8

    def test_deterministic_bitwise(self):
        circ = CircleModel(2)
        a = orbits.backward_walk(circ, 0.37, 30, seed=11)
        b = orbits.backward_walk(circ, 0.37, 30, seed=11)
        assert a.branch == b.branch and a.log_derivs == b.log_derivs

    def test_dump_json(self):
        import json
        circ = CircleModel(2)
        w = orbits.backward_walk(circ, 0.37, 5, seed=1)
        rec = json.loads(w.dump_json(circ))
        assert set(rec) == {"anchor", "branch", "log_derivs", "seed"}
        assert len(rec["branch"]) == 5 and rec["seed"] == 1


class TestDistortionConstant:
    def test_identity_map_oracle(self):
        # f = z: |Df|(z) = (1+|z|^2)/(1+|z|^2) = 1 constant, so the
        # Lipschitz constant is ~0 and the estimate stays tiny
        f = sphere.RationalMapSpec.build([0.0, 1.0], [1.0])
        c = orbits.distortion_constant(f, 1500, seed=0)
        assert c < 1e-6

    def test_z2_stable_across_seeds(self):
        f = models.power_map_spec(2)
        vals = [orbits.distortion_constant(f, 3000, seed=s) for s in (0, 1, 2)]
        m = np.mean(vals)
        assert all(abs(v - m) / m < 0.10 for v in vals)
        assert m > 0

    def test_precondition(self):
        with pytest.raises(ValueError):
            orbits.distortion_constant(models.power_map_spec(2), 10, seed=0)


class TestPullbackBall:
    def test_circle_contraction_slope(self):
        circ = CircleModel(2)
        w = orbits.backward_walk(circ, 0.3, 20, seed=2)
        rec = orbits.pullback_ball(circ, w, 0.1)
        assert rec.valid
        steps = np.diff([math.log(0.2)] + rec.contraction_log)
        assert np.allclose(steps, -LOG2, atol=1e-6)

    def test_sphere_z2_slope(self):
        f = models.power_map_spec(2)
        w = orbits.backward_walk(f, SpherePoint.from_complex(np.exp(1.3j)), 20, seed=4)
        rec = orbits.pullback_ball(f, w, 0.1)
        assert rec.valid and rec.distortion_sum < LOG2
        slope = np.polyfit(np.arange(len(rec.contraction_log)),
                           rec.contraction_log, 1)[0]
        assert slope == pytest.approx(-LOG2, abs=1e-3)

    def test_zero_radius_trivially_valid(self):
        circ = CircleModel(2)
        w = orbits.backward_walk(circ, 0.3, 10, seed=2)
        rec = orbits.pullback_ball(circ, w, 0.0)
        assert rec.valid and rec.distortion_sum == 0.0

    def test_critical_proximity_fires(self):
        # walk points forced near the critical point 1/2 of the quadratic
        ch = ChebyshevModel()
        w = orbits.BackwardWalk(anchor=1.0 - 1e-3,
                                branch=[0.5 + 5e-4, 0.25],
                                log_derivs=[math.log(ch.deriv(0.5 + 5e-4)),
                                            math.log(2.0)],
                                weights_mode="uniform", seed=0)
        with pytest.raises(CriticalProximity):
            orbits.pullback_ball(ch, w, 0.5)

    def test_budget_exceeded(self):
        # huge artificial distortion constant forces the budget over log 2
        f = models.quadratic_spec(0.1)
        w = orbits.backward_walk(f, SpherePoint.from_complex(0.9), 20, seed=4)
        with pytest.raises(DistortionBudgetExceeded):
            orbits.pullback_ball(f, w, 0.9, distortion_c=50.0)

    def test_distortion_monotone_in_length(self):
        f = models.quadratic_spec(0.1)
        w = orbits.backward_walk(f, SpherePoint.from_complex(0.9), 18, seed=6)
        rec = orbits.pullback_ball(f, w, 0.05)
        sums = np.cumsum(rec.increments)
        assert np.all(np.diff(sums) >= -1e-15)
        # valid at n implies valid at all shorter lengths
        short = orbits.BackwardWalk(w.anchor, w.branch[:9], w.log_derivs[:9],
                                    w.weights_mode, w.seed)
        rec_s = orbits.pullback_ball(f, short, 0.05)
        assert rec_s.valid
        assert rec_s.distortion_sum <= rec.distortion_sum + 1e-15

    def test_invalid_radius(self):
        circ = CircleModel(2)
        w = orbits.backward_walk(circ, 0.3, 5, seed=2)
        with pytest.raises(ValueError):
            orbits.pullback_ball(circ, w, 1.5)


class TestBoundaryScan:
    def test_fixed_point_boundary_flagged_irregular(self):
        # boundary through the repelling fixed point z = 1 of z^2: walks
        # ending with runs of the principal branch approach it, so the
        # statistic trends strongly negative
        f = models.power_map_spec(2)
        center = SpherePoint.from_complex(np.exp(0.25j))
        gamma_bad = sphere.spherical_distance(center, SpherePoint.from_complex(1.0))
        walks = [orbits.backward_walk(f, center, 24, seed=s) for s in range(12)]
        scan = orbits.boundary_avoidance_scan(f, center, [gamma_bad, 1.4], walks,
                                              eta_tol=0.28)
        stats = {round(e.radius, 6): e for e in scan}
        bad = stats[round(gamma_bad, 6)]
        good = stats[1.4]
        assert bad.statistic < good.statistic - 0.1
        assert not bad.regular
        assert good.regular

    def test_rejects_nonpositive_radius(self):
        circ = CircleModel(2)
        walks = [orbits.backward_walk(circ, 0.3, 5, seed=1)]
        with pytest.raises(ValueError):
            orbits.boundary_avoidance_scan(circ, 0.3, [0.0], walks)

    def test_rejects_uneven_walks(self):
        circ = CircleModel(2)
        walks = [orbits.backward_walk(circ, 0.3, 5, seed=1),
                 orbits.backward_walk(circ, 0.3, 7, seed=2)]
        with pytest.raises(ValueError):
            orbits.boundary_avoidance_scan(circ, 0.3, [0.1], walks)
