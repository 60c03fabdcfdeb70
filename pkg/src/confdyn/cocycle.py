"""The Jacobian cocycle along paired backward walks, conditional densities
on cylinders, and density-floor bounds.

For paired backward orbits y, y' with identical inverse-branch choices,
the partial sums of psi = phi + t log|Df| differences converge (the
contraction of the shared pullback makes the increments geometric); their
exponential limit weights the reference measure on a cylinder into the
conditional density of the invariant measure, valid exactly when the
entropy identity h = t chi + mean(phi) holds for the triple supplying it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import CellMeasure
from .errors import BudgetExceeded, CombinatoricsMismatch, HypothesisFailed
from .models import Interval, Model1D
from .orbits import BackwardWalk, as_model

PESIN_TOL_DEFAULT = 5e-2


@dataclass
class ConstantPotential:
    """phi = const with trivial Hoelder data."""

    value: float = 0.0
    holder_c: float = 0.0
    holder_eps: float = 1.0

    def __call__(self, x):
        return self.value

    @property
    def mean(self):
        return self.value


@dataclass
class HolderPotential:
    fn: object
    holder_c: float
    holder_eps: float

    def __call__(self, x):
        return self.fn(x)


def paired_backward_walk(f, anchor, probe_anchor, n: int, seed: int = 0,
                         mode: str = "uniform", t: float = 0.0, phi=None):
    """Two backward walks sharing inverse-branch combinatorics.

    The base walk samples branches as usual; the probe follows by taking,
    at every level, its preimage closest to the base's choice.  If the
    probe's nearest preimage is not clearly separated from the rest of its
    fiber, the pairing is ambiguous and CombinatoricsMismatch is raised.
    """
    model = as_model(f)
    if phi is None:
        phi = ConstantPotential(0.0)
    rng = np.random.default_rng(seed)
    base_pts, base_logs = [], []
    probe_pts, probe_logs = [], []
    cur_b, cur_p = anchor, probe_anchor
    from .orbits import _fiber_probabilities

    for _ in range(n):
        fiber_b = model.preimages(cur_b)
        probs = _fiber_probabilities(model, fiber_b, mode, t, phi)
        k = int(rng.choice(len(fiber_b), p=probs))
        choice_b = fiber_b[k][0]
        fiber_p = model.preimages(cur_p)
        dists = [model.distance(x, choice_b) for x, _ in fiber_p]
        order = np.argsort(dists)
        nearest = fiber_p[order[0]][0]
        if len(order) > 1:
            gap = min(model.distance(fiber_b[i][0], fiber_b[j][0])
                      for i in range(len(fiber_b)) for j in range(i + 1, len(fiber_b)))
            if dists[order[0]] > 0.45 * gap:
                raise CombinatoricsMismatch(
                    f"probe preimage {dists[order[0]]:.3e} away from the base choice "
                    f"(fiber gap {gap:.3e}); walks diverged"
                )
        cur_b, cur_p = choice_b, nearest
        base_pts.append(cur_b)
        base_logs.append(float(np.log(model.deriv(cur_b))))
        probe_pts.append(cur_p)
        probe_logs.append(float(np.log(model.deriv(cur_p))))
    base = BackwardWalk(anchor=anchor, branch=base_pts, log_derivs=base_logs,
                        weights_mode=mode, seed=seed)
    probe = BackwardWalk(anchor=probe_anchor, branch=probe_pts,
                         log_derivs=probe_logs, weights_mode=mode, seed=seed)
    return base, probe


@dataclass
class CocycleTrace:
    base_walk: BackwardWalk
    probe_walk: BackwardWalk
    partial_sums: list       # S_{-n}psi(base) - S_{-n}psi(probe), n = 1..
    abs_sums: list           # running sum of |psi-step differences|
    phi_limit: float         # exp(S(probe) - S(base)) at the deepest level
    tail_bound: float        # Cauchy tail from the geometric increment fit
    budget: float            # certified bound the abs_sums must respect


def holder_budget(t: float, phi, chi_hat: float, eta: float,
                  rho_hat: float, base_diam: float) -> float:
    """Explicit bound |t| log 2 + C rho^eps |U|^eps sum e^(-i(chi-eta) eps)
    for the absolute psi-difference series along a shared cylinder."""
    c = getattr(phi, "holder_c", 0.0)
    eps = getattr(phi, "holder_eps", 1.0)
    rate = max((chi_hat - eta) * eps, 1e-9)
    geo = math.exp(-rate) / (1.0 - math.exp(-rate))
    return abs(t) * math.log(2.0) + c * (rho_hat ** eps) * (base_diam ** eps) * geo


def cocycle_trace(f, pair, t: float, phi=None, n: int | None = None,
                  budget: float | None = None) -> CocycleTrace:
    """Partial sums of the psi-cocycle along paired walks and the limit
    estimate with a Cauchy tail bound.

    Raises CombinatoricsMismatch when the walks visibly diverge and
    BudgetExceeded when the absolute sums cross the certified budget.
    """
    model = as_model(f)
    if phi is None:
        phi = ConstantPotential(0.0)
    base, probe = pair
    n = n or len(base)
    if len(base) != len(probe):
        raise CombinatoricsMismatch("paired walks have different lengths")
    n = min(n, len(base))

    if budget is None:
        chi_hat = float(np.mean(base.log_derivs)) if base.log_derivs else math.log(2)
        d0 = model.distance(base.anchor, probe.anchor)
        budget = holder_budget(t, phi, chi_hat, chi_hat / 10.0, 2.0,
                               max(d0, 1e-6)) + math.log(2.0)

    partial, absums, increments = [], [], []
    s = 0.0
    a = 0.0
    prev_dist = model.distance(base.anchor, probe.anchor)
    for k in range(1, n + 1):
        yb, yp = base.point(k), probe.point(k)
        dist = model.distance(yb, yp)
        if k > 3 and dist > max(4.0 * prev_dist, 1e-9) and dist > 1e-9:
            raise CombinatoricsMismatch(
                f"paired walks separating at step {k} (distance {dist:.3e})"
            )
        prev_dist = max(dist, 1e-300)
        psi_b = phi(yb) + t * float(np.log(model.deriv(yb)))
        psi_p = phi(yp) + t * float(np.log(model.deriv(yp)))
        diff = psi_b - psi_p
        s += diff
        a += abs(diff)
        increments.append(abs(diff))
        partial.append(s)
        absums.append(a)
        if a > budget:
            raise BudgetExceeded(
                f"absolute cocycle sum {a:.4f} crossed the certified budget {budget:.4f}"
            )
    # Cauchy tail: fit the geometric decay of the recent increments
    tail = 0.0
    recent = [x for x in increments[-6:] if x > 0]
    if len(recent) >= 2:
        ratios = [recent[i + 1] / recent[i] for i in range(len(recent) - 1)]
        r = float(np.clip(np.median(ratios), 0.0, 0.95))
        tail = recent[-1] * r / (1.0 - r)
    phi_limit = math.exp(-partial[-1]) if partial else 1.0
    return CocycleTrace(base_walk=base, probe_walk=probe, partial_sums=partial,
                        abs_sums=absums, phi_limit=phi_limit,
                        tail_bound=tail, budget=budget)


def trace_to_csv(trace: CocycleTrace) -> str:
    lines = ["step,partial_sum,abs_sum"]
    for i, (p, a) in enumerate(zip(trace.partial_sums, trace.abs_sums), start=1):
        lines.append(f"{i},{p:.17g},{a:.17g}")
    return "\n".join(lines) + "\n"


# -- conditional density on a cylinder ------------------------------------------

@dataclass
class DensityProfile:
    probes: np.ndarray
    density: np.ndarray      # conditional density w.r.t. m on the cylinder
    cylinder: Interval
    phi_values: np.ndarray
    normalisation: float

    def to_csv(self) -> str:
        lines = ["probe,density"]
        for p, d in zip(self.probes, self.density):
            lines.append(f"{p:.17g},{d:.17g}")
        return "\n".join(lines) + "\n"


def rohlin_density(model, word, base: Interval, m: CellMeasure, t: float,
                   phi=None, probes: int = 64, seed: int = 0,
                   pesin=None, pesin_tol: float = PESIN_TOL_DEFAULT,
                   extra_depth: int = 30) -> DensityProfile:
    """Phi-weighted conditional density over a cylinder g_word(base).

    `pesin` = (entropy, chi, phi_mean) is the identity hypothesis under
    which the formula is valid; HypothesisFailed fires when its residual
    exceeds pesin_tol.  Beyond the cylinder word, reference and probe
    points share a seeded backward extension, so the cocycle increments
    keep contracting and the truncation error is a geometric tail.
    """
    if not isinstance(model, Model1D):
        raise NotImplementedError("cylinder densities run on 1-d models")
    if phi is None:
        phi = ConstantPotential(0.0)
    if pesin is not None:
        h, chi, phim = pesin
        residual = abs(h - t * chi - phim)
        if residual > pesin_tol:
            raise HypothesisFailed(
                f"entropy identity residual {residual:.4f} exceeds {pesin_tol}",
                residual=residual,
            )
    rng = np.random.default_rng(seed)
    # realise the cylinder
    iv = base
    for b in reversed(word):
        iv = model.pullback_interval(b, iv)
    cylinder = iv
    xs = cylinder.a + (np.arange(probes) + 0.5) * cylinder.length / probes
    ref = cylinder.mid

    # seeded backward chain shared by the reference and every probe; the
    # chain contracts, so the psi-difference series is geometric
    ext = tuple(int(rng.integers(0, model.degree)) for _ in range(extra_depth))

    def log_weight(z):
        """sum over backward steps of psi(chain(ref)) - psi(chain(z)).

        This orientation makes the weighted measure a probability
        conditional of the invariant measure: on the tent benchmark the
        shared-past conditional is uniform in the flat coordinate, which
        pins the sign (the weight must grow where backward derivatives
        shrink)."""
        total = 0.0
        cz, cr = float(z), float(ref)
        for b in ext:
            cz = float(model.branch_inverse(b, cz))
            cr = float(model.branch_inverse(b, cr))
            psi_z = phi(cz) + t * math.log(max(model.deriv(cz), 1e-300))
            psi_r = phi(cr) + t * math.log(max(model.deriv(cr), 1e-300))
            total += psi_r - psi_z
        return total

    log_w = np.array([log_weight(z) for z in xs])
    log_w -= log_w.max()
    w = np.exp(log_w)
    # m-masses of the probe subcells for the normalisation quadrature
    edges = np.linspace(cylinder.a, cylinder.b, probes + 1)
    dm = np.array([m.mass_of_interval(Interval(a, b))
                   for a, b in zip(edges[:-1], edges[1:])])
    total_mass = dm.sum()
    if total_mass <= 0:
        raise ValueError("cylinder carries no reference mass")
    z_norm = float((w * dm).sum())
    density = w * total_mass / z_norm
    return DensityProfile(probes=xs, density=density, cylinder=cylinder,
                          phi_values=w, normalisation=z_norm)


def integrate_profile(profile: DensityProfile, m: CellMeasure) -> float:
    """integral of the conditional density against m over the cylinder,
    normalised by the cylinder mass: equals 1 by construction up to
    quadrature rounding."""
    edges = np.linspace(profile.cylinder.a, profile.cylinder.b,
                        len(profile.probes) + 1)
    dm = np.array([m.mass_of_interval(Interval(a, b))
                   for a, b in zip(edges[:-1], edges[1:])])
    return float((profile.density * dm).sum() / dm.sum())


# -- density floor ---------------------------------------------------------------

@dataclass
class DensityFloor:
    epsilon: float
    global_flag: bool
    global_epsilon: float
    covering_steps: int


def density_floor(model, m: CellMeasure, mu_hat: CellMeasure, base: Interval,
                  t: float = 1.0, phi=None, mass_floor: float = 1e-12,
                  max_steps: int = 60) -> DensityFloor:
    """Cellwise lower bound of d(mu_hat)/d(m) on the base, propagated to a
    global bound through an eventually-onto iterate when t >= 0."""
    if phi is None:
        phi = ConstantPotential(0.0)
    part = m.partition
    if mu_hat.partition.n_cells != part.n_cells:
        raise ValueError("measures must share a partition")
    eps = math.inf
    any_cell = False
    for i in range(part.n_cells):
        cell = part.cell(i)
        if cell.disjoint(base):
            continue
        mm = m.weights[i]
        if mm <= mass_floor:
            continue
        any_cell = True
        eps = min(eps, mu_hat.weights[i] / mm)
    if not any_cell:
        return DensityFloor(epsilon=0.0, global_flag=False,
                            global_epsilon=0.0, covering_steps=0)
    eps = max(eps, 0.0)
    if eps == 0.0 or t < 0:
        return DensityFloor(epsilon=float(eps), global_flag=False,
                            global_epsilon=0.0, covering_steps=0)
    # eventually-onto: iterate the base image until it covers the domain
    cover = [base]
    steps = 0
    domain = model.domain
    for _ in range(max_steps):
        length = sum(iv.length for iv in _merge(cover))
        if length >= domain.length - 1e-9:
            break
        steps += 1
        nxt = []
        for iv in cover:
            cuts = sorted({iv.a, iv.b} | {c for c in _branch_cuts(model)
                                          if iv.a < c < iv.b})
            for a, b in zip(cuts[:-1], cuts[1:]):
                fa = float(model.apply(a))
                fb = float(model.apply(np.nextafter(b, a)))
                lo, hi = min(fa, fb), max(fa, fb)
                nxt.append(Interval(lo, max(hi, lo + 1e-15)))
        cover = _merge(nxt)
    else:
        return DensityFloor(epsilon=float(eps), global_flag=False,
                            global_epsilon=0.0, covering_steps=steps)
    # propagate: rho(f^n x) >= eps * (|Df^n(x)|^t e^{S_n phi})^{-1}
    xs = np.linspace(base.a, base.b, 64, endpoint=False) + base.length / 128
    worst = 0.0
    for x in xs:
        cur = float(x)
        log_j = 0.0
        for _ in range(steps):
            log_j += t * math.log(max(model.deriv(cur), 1e-300)) + phi(cur)
            cur = float(model.apply(cur))
        worst = max(worst, log_j)
    geps = eps * math.exp(-worst)
    return DensityFloor(epsilon=float(eps), global_flag=True,
                        global_epsilon=float(geps), covering_steps=steps)


def _branch_cuts(model: Model1D):
    if model.circle:
        return [k / model.degree for k in range(1, model.degree)]
    if model.name == "tent":
        return [0.5]
    if model.name.startswith("chebyshev"):
        return [0.5]
    if model.name.startswith("zsq"):
        return [0.0]
    return []


def _merge(intervals):
    ivs = sorted(intervals, key=lambda i: i.a)
    out = []
    for iv in ivs:
        if out and iv.a <= out[-1].b + 1e-12:
            out[-1] = Interval(out[-1].a, max(out[-1].b, iv.b))
        else:
            out.append(iv)
    return out