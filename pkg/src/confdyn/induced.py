"""Induced expanding Markov maps with integrable return times.

`build_first_return` enumerates return branches of a model over a base
set: words w = (b1..bn) over the inverse-branch alphabet whose pullback
U_w = g_b1(...g_bn(base)) lands inside the base while every proper suffix
pullback stays disjoint from it (for return_order r, exactly r-1 suffix
pullbacks are allowed to land inside instead).  Together with the
breadth-first enumeration this reproduces the cover by maximal pairwise
disjoint topological balls mapped diffeomorphically onto the base.

Branches whose suffix pullbacks straddle the base boundary are pruned
whole: their points cannot head a branch mapping *onto* the base, so
their mass is reported as deficit rather than silently absorbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import CellMeasure, CellPartition1D
from .errors import ExpansionUncertified, MassDeficit, NoConvergence
from .models import Interval, Model1D, SphereMapModel

EXPANSION_SAFETY = 0.9
STEP_SAMPLES = 16


@dataclass
class Branch:
    address: tuple
    domain: object          # Interval (1-d) or DiskRegion
    return_time: int
    expansion: float        # certified (safety-deflated) min |Df^n| on the domain
    step_derivs: list       # certified min |Df^j| on f^(n-j)(domain), j = 1..n
    mass: float             # reference mass of the domain, base-normalised
    certified: bool
    expansion_raw: float = 0.0  # sampled min |Df^n| before the safety factor
    reject_reason: str | None = None


@dataclass
class DiskRegion:
    center: object          # SpherePoint
    radius: float


@dataclass
class InducedMarkovMap:
    model: object
    base: object            # Interval or DiskRegion
    extension: object       # base dilated by 2 about its centre
    branches: list
    C: float
    delta: float
    deficit: float          # base-normalised unassigned mass
    N_max: int
    return_order: int = 1

    @property
    def fully_certified(self) -> bool:
        return all(b.certified for b in self.branches)

    def branch_inverse_values(self, branch: Branch, ys: np.ndarray):
        """Evaluate the inverse of f^n on branch.address at points ys,
        returning (points, |D(f^n)| at those points)."""
        model = self.model
        xs = np.asarray(ys, dtype=float)
        deriv = np.ones_like(xs)
        for b in reversed(branch.address):
            xs = model.branch_inverse(b, xs)
        cur = xs.copy()
        for _ in range(branch.return_time):
            deriv = deriv * model.deriv(cur)
            cur = model.apply(cur)
        return xs, deriv

    def chain_intervals(self, branch: Branch):
        """The sets f^j(U_i) for j = 0..n-1 (1-d models), j ascending."""
        out = [branch.domain]
        for j in range(1, branch.return_time):
            word = branch.address[j:]
            iv = self.base
            for b in reversed(word):
                iv = self.model.pullback_interval(b, iv)
            out.append(iv)
        return out

    def to_json(self) -> str:
        import json

        def region(r):
            if isinstance(r, Interval):
                return [r.a, r.b]
            return {"center": [r.center.to_complex().real, r.center.to_complex().imag],
                    "radius": r.radius}

        return json.dumps({
            "base": region(self.base),
            "extension": region(self.extension),
            "C": self.C,
            "delta": self.delta,
            "deficit": self.deficit,
            "branches": [
                {"domain": region(b.domain), "n_i": b.return_time,
                 "expansion": b.expansion, "mass": b.mass,
                 "address": list(b.address), "certified": b.certified}
                for b in self.branches
            ],
        })


def _dilate(iv: Interval, factor: float, model: Model1D) -> Interval:
    half = 0.5 * iv.length * factor
    a = iv.mid - half
    b = iv.mid + half
    if not model.circle:
        a = max(a, model.lo)
        b = min(b, model.hi)
    return Interval(a, b)


def _classify(piece: Interval, base: Interval, model: Model1D, tol: float = 1e-12):
    if model.circle:
        span = model.domain_length
        # compare on the covering line; pieces of pullbacks stay unwrapped
        shifts = (0.0, -span, span)
    else:
        shifts = (0.0,)
    for s in shifts:
        shifted = Interval(piece.a + s, piece.b + s)
        if base.contains(shifted, tol):
            return "inside"
    for s in shifts:
        shifted = Interval(piece.a + s, piece.b + s)
        if not base.disjoint(shifted, tol):
            return "partial"
    return "disjoint"


def _branch_step_derivs(model: Model1D, word, base: Interval):
    """Certified min |Df^j| over f^(n-j)(U_w) for j = 1..n, by sampling
    16 points per chain set and applying a 0.9 safety factor."""
    n = len(word)
    # chain sets: f^(n-j)(U_w) = pullback of base along the last j letters
    mins = []
    iv = base
    pts = np.linspace(iv.a, iv.b, STEP_SAMPLES + 2)[1:-1]
    derivs_prod = np.ones(STEP_SAMPLES)
    for j, b in enumerate(reversed(word), start=1):
        pts = model.branch_inverse(b, pts)
        derivs_prod = np.ones(STEP_SAMPLES)
        cur = pts.copy()
        for _ in range(j):
            derivs_prod *= model.deriv(cur)
            cur = model.apply(cur)
        mins.append(EXPANSION_SAFETY * float(derivs_prod.min()))
    return mins  # index j-1 = min |Df^j| on f^(n-j)(U_w)


def _fit_certificate(branches):
    """(C, delta) with step_derivs[j] > C e^(delta j) across all branches."""
    if not branches:
        return 1.0, 0.0
    slopes = []
    for b in branches:
        if b.step_derivs:
            slopes.append(math.log(max(b.step_derivs[-1], 1e-300)) / b.return_time)
    delta = 0.5 * min(slopes) if slopes else 0.0
    delta = max(delta, 1e-9)
    c_bound = math.inf
    for b in branches:
        for j, v in enumerate(b.step_derivs, start=1):
            c_bound = min(c_bound, v * math.exp(-delta * j))
    C = 0.9 * c_bound if math.isfinite(c_bound) else 1.0
    return C, delta


def build_first_return(model, base, N_max: int = 40, reference: CellMeasure | None = None,
                       return_order: int = 1, fullness_tol: float = 1e-3,
                       require_certified: bool = False,
                       expansion_threshold: float = 2.0) -> InducedMarkovMap:
    """Enumerate return branches of `model` over `base` up to depth N_max.

    For 1-d models the enumeration is exact interval arithmetic; branches
    come back in deterministic (return time, leftmost point) order.
    Raises MassDeficit when the unassigned base mass exceeds fullness_tol,
    and ExpansionUncertified (when require_certified) if any branch fails
    the strict |Df^n| > 2 certificate.
    """
    if isinstance(model, SphereMapModel):
        return _build_first_return_disk(model, base, N_max, reference,
                                        return_order, fullness_tol,
                                        require_certified, expansion_threshold)
    if isinstance(base, (tuple, list)):
        if len(base) != 1:
            raise NotImplementedError("multi-component bases are not supported")
        base = base[0]
    if not isinstance(base, Interval):
        base = Interval(*base)

    def ref_mass(iv: Interval) -> float:
        if reference is None:
            return model.lebesgue(iv)
        return reference.mass_of_interval(iv)

    base_mass = ref_mass(base)
    if base_mass <= 0:
        raise ValueError("base has zero reference mass")

    branches = []
    # frontier entries: (interval U_w, word, inside-count)
    frontier = [(base, (), 0)]
    for depth in range(1, N_max + 1):
        nxt = []
        for iv, word, hits in frontier:
            for b in range(model.degree):
                piece = model.pullback_interval(b, iv)
                new_word = (b,) + word
                kind = _classify(piece, base, model)
                if kind == "partial":
                    continue  # pruned; mass surfaces in the deficit
                if kind == "disjoint":
                    nxt.append((piece, new_word, hits))
                    continue
                # inside
                if hits + 1 == return_order:
                    mins = _branch_step_derivs(model, new_word, base)
                    expansion = mins[-1]
                    certified = expansion > expansion_threshold
                    branches.append(Branch(
                        address=new_word, domain=piece, return_time=depth,
                        expansion=expansion, step_derivs=mins,
                        mass=ref_mass(piece) / base_mass,
                        certified=certified,
                        expansion_raw=expansion / EXPANSION_SAFETY,
                        reject_reason=None if certified else
                        f"min |Df^{depth}| = {expansion:.4g} <= {expansion_threshold}",
                    ))
                else:
                    nxt.append((piece, new_word, hits + 1))
        frontier = nxt
        if not frontier:
            break

    branches.sort(key=lambda br: (br.return_time, br.domain.a))
    assigned = sum(br.mass for br in branches)
    deficit = max(1.0 - assigned, 0.0)
    if deficit > fullness_tol:
        raise MassDeficit(
            f"unassigned base mass {deficit:.3e} exceeds tolerance {fullness_tol}",
            deficit=deficit,
        )
    if require_certified and any(not br.certified for br in branches):
        bad = next(br for br in branches if not br.certified)
        raise ExpansionUncertified(bad.reject_reason)
    C, delta = _fit_certificate(branches)
    return InducedMarkovMap(model=model, base=base,
                            extension=_dilate(base, 2.0, model),
                            branches=branches, C=C, delta=delta,
                            deficit=deficit, N_max=N_max,
                            return_order=return_order)


# -- disk-model enumeration ---------------------------------------------------

def _build_first_return_disk(model: SphereMapModel, base: DiskRegion, N_max,
                             reference, return_order, fullness_tol,
                             require_certified, expansion_threshold):
    """Backward-word enumeration of return branches over a disk base.

    Pullback disks are tracked by centre + certified radius bound
    (inverse-derivative contraction inflated by the running distortion
    budget); containment/disjointness tests carry a safety margin, and
    unresolved straddling words are pruned into the deficit.
    """
    from .sphere import spherical_distance

    c0 = base.center
    r0 = base.radius
    margin = 1.3  # radius inflation covering distortion of the pullbacks

    cell_zs = None
    if reference is not None:
        part = reference.partition
        cell_zs = np.array([part.cell_center(i) for i in range(part.n_cells)],
                           dtype=complex)

    def ref_mass_disk(center, radius) -> float:
        if reference is None:
            return radius ** 2 / r0 ** 2  # area proxy, base-normalised below
        if center.is_infinity():
            return 0.0
        c = center.to_complex()
        # chordal distance from all cell centres at once
        dist = 2.0 * np.abs(cell_zs - c) / np.sqrt(
            (1.0 + np.abs(cell_zs) ** 2) * (1.0 + abs(c) ** 2))
        return float(reference.weights[dist <= radius].sum())

    base_mass = ref_mass_disk(c0, r0) if reference is not None else 1.0
    if base_mass <= 0:
        raise ValueError("base has zero reference mass")

    branches = []
    # frontier: (center, radius_bound, word, hits, log_deriv_chain)
    frontier = [(c0, r0, (), 0, [])]
    for depth in range(1, N_max + 1):
        nxt = []
        for center, rad, word, hits, chain in frontier:
            fiber = model.preimages(center)
            for bi, (x, mult) in enumerate(fiber):
                d = model.deriv(x)
                if d <= 1e-12:
                    continue  # critical branch, cannot certify
                new_rad = rad / d * margin
                if model.distance_to_critical(x) <= 4.0 * new_rad:
                    continue  # uncertifiable near the critical set
                new_word = (bi,) + word
                new_chain = chain + [math.log(d)]
                dist = spherical_distance(x, c0)
                if dist + new_rad < r0:
                    kind = "inside"
                elif dist - new_rad > r0:
                    kind = "disjoint"
                else:
                    kind = "partial"
                if kind == "partial":
                    continue
                if kind == "disjoint":
                    nxt.append((x, new_rad, new_word, hits, new_chain))
                    continue
                if hits + 1 == return_order:
                    logsum = sum(new_chain)
                    expansion = EXPANSION_SAFETY * math.exp(logsum)
                    mins = [EXPANSION_SAFETY * math.exp(sum(new_chain[k:]))
                            for k in range(len(new_chain) - 1, -1, -1)]
                    mass = ref_mass_disk(x, new_rad / margin) / base_mass
                    certified = expansion > expansion_threshold
                    branches.append(Branch(
                        address=new_word, domain=DiskRegion(x, new_rad),
                        return_time=depth, expansion=expansion,
                        step_derivs=mins, mass=mass, certified=certified,
                        reject_reason=None if certified else "expansion <= 2",
                    ))
                else:
                    nxt.append((x, new_rad, new_word, hits + 1, new_chain))
        frontier = nxt
        if not frontier:
            break

    branches.sort(key=lambda br: (br.return_time,
                                  round(np.angle(br.domain.center.h0 / br.domain.center.h1), 9)))
    assigned = sum(br.mass for br in branches)
    deficit = max(1.0 - assigned, 0.0)
    if reference is not None and deficit > fullness_tol:
        raise MassDeficit(
            f"unassigned base mass {deficit:.3e} exceeds tolerance {fullness_tol}",
            deficit=deficit,
        )
    if require_certified and any(not br.certified for br in branches):
        raise ExpansionUncertified("disk branch failed the expansion certificate")
    C, delta = _fit_certificate(branches)
    return InducedMarkovMap(model=model, base=base,
                            extension=DiskRegion(c0, 2.0 * r0),
                            branches=branches, C=C, delta=delta,
                            deficit=deficit, N_max=N_max,
                            return_order=return_order)


# -- integrability -------------------------------------------------------------

def integrability(imap: InducedMarkovMap, reference: CellMeasure | None = None):
    """Truncated sum of n_i * m(U_i) plus a geometric tail bound.

    The tail fits the per-level branch masses to a geometric decay and
    bounds the missing sum_{n > N_max} n K theta^n in closed form.
    """
    levels: dict[int, float] = {}
    for b in imap.branches:
        levels[b.return_time] = levels.get(b.return_time, 0.0) + b.mass
    total = sum(n * m for n, m in levels.items())
    ns = sorted(levels)
    tail = 0.0
    if len(ns) >= 3:
        # geometric fit on the last available levels
        last = ns[-3:]
        vals = [levels[n] for n in last]
        if all(v > 0 for v in vals):
            thetas = [ (vals[i + 1] / vals[i]) ** (1.0 / (last[i + 1] - last[i]))
                       for i in range(len(last) - 1) ]
            theta = min(max(np.mean(thetas), 1e-12), 0.999)
            n0 = imap.N_max
            k = vals[-1] * theta ** (n0 - last[-1])
            # sum_{n > n0} n K theta^(n - n0) in closed form
            tail = k * theta * ((n0 + 1) * (1 - theta) + theta) / (1 - theta) ** 2
    elif imap.deficit > 0:
        tail = imap.deficit * (imap.N_max + 1) * 2.0
    return float(total), float(tail)


# -- the folklore absolutely continuous invariant measure ----------------------

@dataclass
class AcipResult:
    partition: CellPartition1D
    density: np.ndarray      # w.r.t. the base-normalised reference measure
    lower: float
    upper: float
    sweeps: int
    c3: float

    def branch_measure(self, imap: InducedMarkovMap, branch: Branch) -> float:
        """nu(U_i) by integrating the density over the branch domain."""
        part = self.partition
        iv = branch.domain
        h = part.cell_length
        total = 0.0
        lo_i = max(int(math.floor((iv.a - part.lo) / h)), 0)
        hi_i = min(int(math.ceil((iv.b - part.lo) / h)), part.n_cells)
        base_len = part.hi - part.lo
        for i in range(lo_i, hi_i):
            cell = part.cell(i)
            ov = cell.intersect(iv)
            if ov is not None:
                total += self.density[i] * ov.length / base_len
        return total

    def to_csv(self) -> str:
        lines = ["cell,density,lower,upper"]
        for i, d in enumerate(self.density):
            lines.append(f"{i},{d:.17g},{self.lower:.17g},{self.upper:.17g}")
        return "\n".join(lines) + "\n"


def _branch_weights_on_grid(imap: InducedMarkovMap, ys: np.ndarray):
    """Per-branch inverse points and transfer weights at grid points ys.

    Weight = 1/|D(f^n)| at the inverse point: the reference-measure
    Jacobian of each branch for a Lebesgue-type reference.
    """
    out = []
    for br in imap.branches:
        xs, deriv = imap.branch_inverse_values(br, ys)
        out.append((xs, 1.0 / deriv))
    return out


def folklore_acip(imap: InducedMarkovMap, reference: CellMeasure | None = None,
                  sweeps: int = 2000, resolution: int = 1024,
                  tol: float = 1e-8) -> AcipResult:
    """Cesaro averages of normalised pullbacks of the reference measure.

    Densities live on a uniform grid over the base, relative to the
    base-normalised reference; the two-sided bound [1/C3, C3] comes from
    the accumulated branch-distortion estimate.  Declares convergence when
    successive Cesaro densities differ by < tol in total variation.
    """
    if not isinstance(imap.base, Interval):
        raise NotImplementedError("acip construction runs on 1-d bases")
    base = imap.base
    part = CellPartition1D(base.a, base.b, resolution)
    ys = np.array([part.cell(i).mid for i in range(resolution)])
    pulls = _branch_weights_on_grid(imap, ys)

    # distortion certificate: per-branch oscillation of the log weight,
    # accumulated over compositions via the contraction factor
    osc = 0.0
    theta = 0.0
    for (xs, w), br in zip(pulls, imap.branches):
        lw = np.log(np.maximum(w, 1e-300))
        osc = max(osc, float(lw.max() - lw.min()))
        theta = max(theta, 1.0 / max(br.expansion, 1.001))
    theta = min(theta, 0.999)
    c3 = math.exp(osc / (1.0 - theta)) if osc > 0 else 1.0

    rho = np.ones(resolution)
    cesaro = np.zeros(resolution)
    prev_avg = None
    used = 0
    for k in range(1, sweeps + 1):
        new = np.zeros(resolution)
        for xs, w in pulls:
            new += np.interp(xs, ys, rho) * w
        s = new.mean()
        if s <= 0:
            raise NoConvergence("density mass vanished", last_residual=math.inf)
        rho_next = new / s
        cesaro += rho_next
        avg = cesaro / k
        used = k
        if prev_avg is not None:
            tv = 0.5 * np.abs(avg - prev_avg).mean()
            if tv < tol:
                prev_avg = avg
                break
        # fixed-point shortcut: the plain iterates converge geometrically
        if np.abs(rho_next - rho).max() < 1e-13 and k >= 2:
            prev_avg = avg
            break
        prev_avg = avg
        rho = rho_next
    else:
        tv = 0.5 * np.abs(cesaro / used - prev_avg).mean()
        raise NoConvergence(f"acip Cesaro averages still moving (TV {tv:.3e})",
                            last_residual=tv)

    dens = prev_avg / prev_avg.mean()
    dens = dens / dens.mean()
    return AcipResult(partition=part, density=dens,
                      lower=float(dens.min()), upper=float(dens.max()),
                      sweeps=used, c3=c3)


# -- the measure generated by the induced map ----------------------------------

@dataclass
class GeneratedMeasure:
    carrier: CellMeasure
    normalization: float
    invariance_residual: float


def _push_interval_mass(model: Model1D, start: Interval, mass: float, steps: int,
                        out_edges: np.ndarray, out: np.ndarray, splits: int = 4):
    """Push `mass` spread uniformly on `start` forward `steps` times,
    depositing into the histogram `out` (exact for affine pieces)."""
    pieces = [(start, mass)]
    for _ in range(steps):
        nxt = []
        for iv, m in pieces:
            # split across monotonicity pieces of the model
            cuts = [iv.a, iv.b]
            for c in _monotone_cuts(model):
                if iv.a < c < iv.b:
                    cuts.insert(-1, c)
            cuts = sorted(set(cuts))
            for a, b in zip(cuts[:-1], cuts[1:]):
                fa = float(model.apply(a))
                fb = float(model.apply(np.nextafter(b, a)))
                sub = m * (b - a) / iv.length
                lo, hi = (fa, fb) if fa <= fb else (fb, fa)
                if hi - lo < 1e-15:
                    hi = lo + 1e-15
                nxt.append((Interval(lo, hi), sub))
        pieces = nxt
    for iv, m in pieces:
        _deposit(iv, m, out_edges, out)


def _monotone_cuts(model: Model1D):
    if model.circle:
        d = model.degree
        return [k / d for k in range(1, d)]
    if model.name == "tent":
        return [0.5]
    if model.name.startswith("chebyshev"):
        return [0.5]
    if model.name.startswith("zsq"):
        return [0.0]
    return []


def _deposit(iv: Interval, mass: float, edges: np.ndarray, out: np.ndarray):
    n = len(out)
    lo = np.searchsorted(edges, iv.a, side="right") - 1
    hi = np.searchsorted(edges, iv.b, side="left")
    lo = max(lo, 0)
    hi = min(hi, n)
    for i in range(lo, hi):
        a = max(edges[i], iv.a)
        b = min(edges[i + 1], iv.b)
        if b > a:
            out[i] += mass * (b - a) / iv.length


def generate_measure(imap: InducedMarkovMap, nu: AcipResult, model=None,
                     resolution: int = 2048) -> GeneratedMeasure:
    """Sum of pushforwards f^j_* nu over all branches, j < n_i, normalised:
    the f-invariant measure generated by the induced map."""
    model = model or imap.model
    part = CellPartition1D(model.lo, model.hi, resolution, circle=model.circle)
    edges = part.edges()
    out = np.zeros(resolution)
    norm = 0.0
    npart = nu.partition
    for br in imap.branches:
        nu_mass = nu.branch_measure(imap, br)
        norm += br.return_time * nu_mass
        # distribute the branch's nu-mass over its sub-cells, then push
        h = npart.cell_length
        lo_i = max(int(math.floor((br.domain.a - npart.lo) / h)), 0)
        hi_i = min(int(math.ceil((br.domain.b - npart.lo) / h)), npart.n_cells)
        subs = []
        for i in range(lo_i, hi_i):
            ov = npart.cell(i).intersect(br.domain)
            if ov is not None and ov.length > 0:
                subs.append((ov, nu.density[i] * ov.length / (npart.hi - npart.lo)))
        for j in range(br.return_time):
            for ov, m in subs:
                _push_interval_mass(model, ov, m, j, edges, out)
    total = out.sum()
    if total <= 0:
        raise ValueError("generated measure vanished")
    weights = out / total
    weights[int(np.argmax(weights))] += 1.0 - weights.sum()
    carrier = CellMeasure(part, weights)

    # invariance residual: TV distance between the measure and its
    # one-step pushforward on the same grid
    pushed = np.zeros(resolution)
    for i in range(resolution):
        if weights[i] > 0:
            _push_interval_mass(model, part.cell(i), weights[i], 1, edges, pushed)
    residual = 0.5 * float(np.abs(pushed - weights).sum())
    return GeneratedMeasure(carrier=carrier, normalization=norm,
                            invariance_residual=residual)


def abramov_entropy(imap: InducedMarkovMap, nu: AcipResult) -> float:
    """Entropy of the generated measure: H(branch masses) / mean return."""
    pairs = [(nu.branch_measure(imap, br), br.return_time) for br in imap.branches]
    masses = np.array([m for m, _ in pairs if m > 0])
    ns = np.array([n for m, n in pairs if m > 0])
    h = -np.sum(masses * np.log(masses))
    mean_return = np.sum(ns * masses)
    return float(h / mean_return)


def domains_pairwise_disjoint(imap: InducedMarkovMap, tol: float = 0.0) -> bool:
    """Branch domains of a valid return family never overlap."""
    doms = sorted((b.domain for b in imap.branches), key=lambda iv: iv.a)
    for a, b in zip(doms[:-1], doms[1:]):
        if b.a < a.b - tol:
            return False
    return True


def chains_nested_or_disjoint(imap: InducedMarkovMap, tol: float = 0.0) -> bool:
    """Every pair of preimage-chain sets is nested or disjoint.

    The chain sets f^j(U_i) realise projected pullbacks of the base; with
    exact interval endpoints (dyadic models) the comparisons are exact.
    """
    chains = []
    for br in imap.branches:
        chains.extend(imap.chain_intervals(br))
    for i in range(len(chains)):
        for j in range(i + 1, len(chains)):
            a, b = chains[i], chains[j]
            if a.contains(b, tol) or b.contains(a, tol) or a.disjoint(b, tol):
                continue
            return False
    return True
