"""Forward orbits, backward random walks and distortion-controlled
pullbacks of balls.

Backward walks sample finite prefixes of the natural extension: a walk
(y0, y1, ..., yn) satisfies f(y_{i+1}) = y_i, with the branch at each
step chosen uniformly by multiplicity (exact for the maximal-entropy
measure, whose Jacobian is constant d) or by Jacobian-type importance
weights e^(-phi) |Df|^(-t).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CriticalOrbitHit,
    CriticalProximity,
    DistortionBudgetExceeded,
)
from .models import Model1D, SphereMapModel
from .sphere import RationalMapSpec, SpherePoint

LOG2 = math.log(2.0)
CRITICAL_LOG_FLOOR = math.log(1e-14)


def as_model(f):
    if isinstance(f, RationalMapSpec):
        return SphereMapModel(f)
    return f


def _point_to_pair(model, x):
    if isinstance(x, SpherePoint):
        if x.is_infinity():
            return [float("inf"), 0.0]
        z = x.to_complex()
        return [z.real, z.imag]
    return [float(x), 0.0]


@dataclass
class ForwardOrbit:
    start: object
    points: list
    log_derivs: list

    def __len__(self):
        return len(self.points)


@dataclass
class BackwardWalk:
    anchor: object
    branch: list
    log_derivs: list
    weights_mode: str
    seed: int

    def __len__(self):
        return len(self.branch)

    def point(self, k: int):
        """k-th backward point, with k = 0 the anchor."""
        return self.anchor if k == 0 else self.branch[k - 1]

    def dump_json(self, model) -> str:
        return json.dumps(
            {
                "anchor": _point_to_pair(model, self.anchor),
                "branch": [_point_to_pair(model, p) for p in self.branch],
                "log_derivs": list(map(float, self.log_derivs)),
                "seed": self.seed,
            }
        )


@dataclass
class PullbackRecord:
    walk: BackwardWalk
    radius: float
    distortion_sum: float
    contraction_log: list
    stop_index: int
    valid: bool
    increments: list = field(default_factory=list)


@dataclass
class LyapunovEstimate:
    mean: float
    stderr: float
    n_samples: int
    n_steps: int


def iterate(f, x, n: int) -> ForwardOrbit:
    """Forward orbit of length n+1 with per-step log spherical derivatives."""
    if n < 0:
        raise ValueError("n must be >= 0")
    model = as_model(f)
    points = [x]
    logs = []
    cur = x
    for _ in range(n):
        logs.append(float(np.log(model.deriv(cur))))
        cur = model.apply(cur)
        points.append(cur)
    if any(not np.isfinite(v) for v in logs):
        raise CriticalOrbitHit("orbit produced a non-finite derivative log")
    return ForwardOrbit(start=x, points=points, log_derivs=logs)


def lyapunov(f, sampler, n_steps: int, n_samples: int, seed: int) -> LyapunovEstimate:
    """Birkhoff estimate of the Lyapunov exponent.

    `sampler(rng, n)` must draw n points from an f-invariant measure; the
    estimate is the mean over samples of the per-orbit average of
    log |Df|.  Deterministic for a fixed seed.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    model = as_model(f)
    rng = np.random.default_rng(seed)
    starts = sampler(rng, n_samples)

    if isinstance(starts, np.ndarray):
        # vectorised path for the 1-d models
        x = starts.astype(float).copy()
        acc = np.zeros_like(x)
        for _ in range(n_steps):
            d = model.deriv(x)
            if np.any(d < 1e-14):
                raise CriticalOrbitHit("orbit hit a critical point to machine precision")
            acc += np.log(d)
            x = model.apply(x)
        per_sample = acc / n_steps
    else:
        per_sample = np.empty(len(starts))
        for i, s in enumerate(starts):
            total = 0.0
            cur = s
            for _ in range(n_steps):
                d = model.deriv(cur)
                ld = math.log(d) if d > 0 else -math.inf
                if ld < CRITICAL_LOG_FLOOR:
                    raise CriticalOrbitHit(
                        "orbit hit a critical point to machine precision"
                    )
                total += ld
                cur = model.apply(cur)
            per_sample[i] = total / n_steps
    mean = float(per_sample.mean())
    if len(per_sample) > 1:
        stderr = float(per_sample.std(ddof=1) / math.sqrt(len(per_sample)))
    else:
        stderr = 0.0
    return LyapunovEstimate(mean=mean, stderr=stderr,
                            n_samples=n_samples, n_steps=n_steps)


def _fiber_probabilities(model, fiber, mode: str, t: float, phi):
    mults = np.array([m for _, m in fiber], dtype=float)
    if mode == "uniform":
        w = mults
    elif mode == "jacobian":
        w = np.array(
            [m * math.exp(-phi(x)) * model.deriv(x) ** (-t) for x, m in fiber]
        )
    else:
        raise ValueError(f"unknown weights mode {mode!r}")
    return w / w.sum()


def backward_walk(f, anchor, n: int, mode: str = "uniform", seed: int = 0,
                  t: float = 0.0, phi=None) -> BackwardWalk:
    """Sample one backward branch of length n starting at the anchor."""
    if n < 0:
        raise ValueError("n must be >= 0")
    model = as_model(f)
    if getattr(model, "degree", 2) < 2:
        raise ValueError("backward walks need a map of degree >= 2")
    if phi is None:
        phi = lambda x: 0.0
    rng = np.random.default_rng(seed)
    branch = []
    logs = []
    cur = anchor
    for _ in range(n):
        fiber = model.preimages(cur)
        probs = _fiber_probabilities(model, fiber, mode, t, phi)
        k = int(rng.choice(len(fiber), p=probs))
        cur = fiber[k][0]
        branch.append(cur)
        d = float(model.deriv(cur))
        logs.append(math.log(d) if d > 0 else -math.inf)
    mode_tag = "uniform" if mode == "uniform" else f"jacobian(t={t})"
    return BackwardWalk(anchor=anchor, branch=branch, log_derivs=logs,
                        weights_mode=mode_tag, seed=seed)


def fiber_distribution(f, point, mode: str = "uniform", t: float = 0.0, phi=None):
    """Preimage fiber of a point together with its sampling probabilities."""
    model = as_model(f)
    if phi is None:
        phi = lambda x: 0.0
    fiber = model.preimages(point)
    probs = _fiber_probabilities(model, fiber, mode, t, phi)
    return fiber, probs


def _random_sphere_points(rng, n):
    h = rng.normal(size=(n, 4))
    pts = []
    for row in h:
        pts.append(SpherePoint(complex(row[0], row[1]), complex(row[2], row[3])))
    return pts


def distortion_constant(f, n_probe: int = 2000, seed: int = 0) -> float:
    """Empirical Lipschitz constant of x -> |Df(x)|, inflated by 1.5.

    Probes nearby point pairs; the result feeds the per-step distortion
    bound used by pullback_ball.
    """
    if n_probe < 1000:
        raise ValueError("n_probe must be >= 1000")
    model = as_model(f)
    rng = np.random.default_rng(seed)
    best = 0.0
    if isinstance(model, Model1D):
        xs = rng.uniform(model.lo, model.hi, size=n_probe)
        seps = 10.0 ** rng.uniform(-4, -2, size=n_probe) * model.domain_length
        ys = np.clip(xs + seps, model.lo, model.hi - 1e-12)
        d = np.abs(model.deriv(xs) - model.deriv(ys))
        s = np.abs(xs - ys)
        ok = s > 0
        if np.any(ok):
            best = float(np.max(d[ok] / s[ok]))
    else:
        pts = _random_sphere_points(rng, n_probe)
        for p in pts:
            eps = 10.0 ** rng.uniform(-4, -2)
            q = SpherePoint(p.h0 + eps * complex(rng.normal(), rng.normal()),
                            p.h1 + eps * complex(rng.normal(), rng.normal()))
            s = model.distance(p, q)
            if s <= 0:
                continue
            d = abs(model.deriv(p) - model.deriv(q))
            best = max(best, d / s)
    return 1.5 * best


def pullback_ball(f, walk: BackwardWalk, radius: float, distortion_c: float | None = None,
                  chi: float | None = None, delta: float | None = None,
                  strict: bool = True) -> PullbackRecord:
    """Pull the ball B(anchor, radius) back along a walk.

    Each step certifies that the pulled-back region stays clear of the
    critical set (factor-4 safety margin on the running diameter) and
    accumulates a per-step distortion increment; the record is valid while
    the accumulated distortion stays below the log 2 budget.
    """
    if radius < 0 or radius > 1:
        raise ValueError("radius must lie in [0, 1]")
    if len(walk) < 1:
        raise ValueError("walk must have length >= 1")
    model = as_model(f)
    if distortion_c is None:
        distortion_c = distortion_constant(model, 2000, seed=0)
    if chi is None:
        chi = float(np.mean(walk.log_derivs)) if walk.log_derivs else LOG2
    if delta is None:
        delta = max(chi, 1e-6) / 10.0

    has_crit = isinstance(model, SphereMapModel) or (
        isinstance(model, Model1D) and _model_critical_points(model)
    )
    crit_pts = _model_critical_points(model) if isinstance(model, Model1D) else None

    diam = 2.0 * radius
    dist_sum = 0.0
    contraction = []
    increments = []
    valid = True
    for k in range(1, len(walk) + 1):
        y = walk.point(k)
        dk = float(model.deriv(y))
        if dk <= 0:
            raise CriticalProximity("walk passed through a critical point")
        diam = diam / dk
        contraction.append(math.log(diam) if diam > 0 else -math.inf)
        if diam == 0.0:
            increments.append(0.0)
            continue
        if has_crit:
            if isinstance(model, SphereMapModel):
                cdist = model.distance_to_critical(y)
            else:
                cdist = min(model.distance(y, c) for c in crit_pts)
            if cdist <= 4.0 * diam:
                raise CriticalProximity(
                    f"pullback diameter {diam:.3e} too close to the critical set "
                    f"(distance {cdist:.3e}) at step {k}"
                )
        # distortion increment: the cube-root gate certifies applicability
        # of the small-ball derivative-ratio bound, the linearised bound
        # C*diam/(|Df| - C*diam) is the sharper certified value
        c_gate = diam ** (1.0 / 3.0)
        if dk <= c_gate:
            raise CriticalProximity(
                f"derivative {dk:.3e} below the distortion gate {c_gate:.3e} at step {k}"
            )
        lin = math.inf
        if dk > distortion_c * diam:
            lin = distortion_c * diam / (dk - distortion_c * diam)
        inc = min(c_gate, lin)
        increments.append(inc)
        dist_sum += inc
        if dist_sum >= LOG2:
            valid = False
            if strict:
                raise DistortionBudgetExceeded(
                    f"accumulated distortion {dist_sum:.4f} >= log 2 at step {k}"
                )

    stop = _stop_index(walk, chi, delta)
    return PullbackRecord(walk=walk, radius=radius, distortion_sum=dist_sum,
                          contraction_log=contraction, stop_index=stop,
                          valid=valid, increments=increments)


def _model_critical_points(model):
    """Interior critical points of the 1-d models (deriv = 0)."""
    pts = []
    if model.name.startswith("chebyshev"):
        pts = [0.5]
    elif model.name.startswith("zsq"):
        pts = [0.0]
    return pts


def _stop_index(walk: BackwardWalk, chi: float, delta: float) -> int:
    """First index from which the slow-derivative-decay and sandwich
    conditions hold to the end of the walk."""
    n = len(walk)
    logs = np.asarray(walk.log_derivs, dtype=float)
    sums = np.cumsum(logs)
    ok = np.zeros(n, dtype=bool)
    for k in range(1, n + 1):
        cond1 = logs[k - 1] >= math.log(2.0) - k * delta
        cond2 = k * (chi - delta) <= sums[k - 1] <= k * (chi + delta)
        ok[k - 1] = cond1 and cond2
    # largest suffix of all-ok steps
    idx = n
    for k in range(n, 0, -1):
        if ok[k - 1]:
            idx = k
        else:
            break
    return idx


@dataclass
class BoundaryScanEntry:
    radius: float
    statistic: float
    regular: bool


def boundary_avoidance_scan(f, center, radii, walks, eta_tol: float = 0.05):
    """Worst-case decay rate of the distance from backward orbits to the
    boundary sphere of B(center, gamma), per candidate gamma.

    A radius is flagged regular when the statistic stays above -eta_tol,
    the finite-sample version of subexponential boundary approach.
    """
    model = as_model(f)
    radii = list(radii)
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    lengths = {len(w) for w in walks}
    if len(lengths) != 1:
        raise ValueError("walks must share a common length")
    out = []
    for gamma in radii:
        worst = math.inf
        for w in walks:
            for k in range(1, len(w) + 1):
                p = w.point(k)
                dist_to_boundary = abs(model.distance(p, center) - gamma)
                if dist_to_boundary <= 0:
                    val = -math.inf
                else:
                    val = math.log(dist_to_boundary) / k
                worst = min(worst, val)
        out.append(BoundaryScanEntry(radius=gamma, statistic=worst,
                                     regular=worst >= -eta_tol))
    return out
