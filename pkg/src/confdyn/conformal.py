"""Discretised transfer operators, conformal eigenmeasures and pressure.

The matrix convention: entry (i, j) is the coefficient with which cell j
sends mass to cell i under the dual transfer operator, i.e. the average
over sample points y of cell j of e^(-phi(x)) |Df(x)|^(-t) summed over the
preimages x of y that land in cell i.  With this orientation the Perron
fixed point w of w -> M w discretises a conformal measure with Jacobian
lambda e^phi |Df|^t, and log(lambda) estimates the pressure; at t = 0,
phi = 0 every column sums to the degree, recovering the constant-Jacobian
case of the maximal-entropy measure.

On the exact circle/interval models the matrix is assembled in closed
form (the per-branch entry is an antiderivative difference), which makes
the benchmark eigenpairs machine precision.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import sphere
from .errors import (
    BracketInvalid,
    EmptyCell,
    ExceptionalSupportWarning,
    InjectivityUncertifiable,
    NoConvergence,
)
from .models import Interval, Model1D, SphereMapModel
from .sphere import RationalMapSpec, SpherePoint


# -- partitions and measures -------------------------------------------------

@dataclass
class CellPartition1D:
    """Equal arcs/subintervals of a model domain."""

    lo: float
    hi: float
    resolution: int
    circle: bool = False

    @property
    def n_cells(self) -> int:
        return self.resolution

    @property
    def cell_length(self) -> float:
        return (self.hi - self.lo) / self.resolution

    def cell(self, i: int) -> Interval:
        h = self.cell_length
        return Interval(self.lo + i * h, self.lo + (i + 1) * h)

    def locate(self, x: float) -> int:
        span = self.hi - self.lo
        if self.circle:
            x = self.lo + ((x - self.lo) % span)
        if x < self.lo or x >= self.hi:
            return -1
        i = int((x - self.lo) / self.cell_length)
        return min(i, self.resolution - 1)

    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.resolution + 1)

    def region_label(self) -> str:
        kind = "circle" if self.circle else "interval"
        return f"{kind}[{self.lo},{self.hi}]"


@dataclass
class CellPartition2D:
    """Axis-aligned boxes over a chart rectangle of the z-plane."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def resolution(self) -> int:
        return max(self.nx, self.ny)

    def locate(self, z: complex) -> int:
        x, y = z.real, z.imag
        if not (self.x0 <= x < self.x1 and self.y0 <= y < self.y1):
            return -1
        ix = min(int((x - self.x0) / (self.x1 - self.x0) * self.nx), self.nx - 1)
        iy = min(int((y - self.y0) / (self.y1 - self.y0) * self.ny), self.ny - 1)
        return iy * self.nx + ix

    def locate_bulk(self, zs: np.ndarray) -> np.ndarray:
        x = zs.real
        y = zs.imag
        inside = (x >= self.x0) & (x < self.x1) & (y >= self.y0) & (y < self.y1) & np.isfinite(x) & np.isfinite(y)
        ix = np.clip(((x - self.x0) / (self.x1 - self.x0) * self.nx).astype(int), 0, self.nx - 1)
        iy = np.clip(((y - self.y0) / (self.y1 - self.y0) * self.ny).astype(int), 0, self.ny - 1)
        out = iy * self.nx + ix
        out[~inside] = -1
        return out

    def cell_center(self, i: int) -> complex:
        iy, ix = divmod(i, self.nx)
        cx = self.x0 + (ix + 0.5) * (self.x1 - self.x0) / self.nx
        cy = self.y0 + (iy + 0.5) * (self.y1 - self.y0) / self.ny
        return complex(cx, cy)

    def cell_size(self) -> float:
        return max((self.x1 - self.x0) / self.nx, (self.y1 - self.y0) / self.ny)

    def region_label(self) -> str:
        return f"rect[{self.x0},{self.x1}]x[{self.y0},{self.y1}]"


@dataclass
class CellMeasure:
    """A cell partition plus nonnegative weights summing to 1."""

    partition: object
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < -1e-15):
            raise ValueError("weights must be nonnegative")
        self.weights = np.maximum(self.weights, 0.0)
        total = self.weights.sum()
        if not math.isclose(total, 1.0, abs_tol=1e-12):
            raise ValueError(f"weights sum to {total}, expected 1")

    def mass_of_interval(self, iv: Interval) -> float:
        """Exact mass under the cellwise-uniform density (1-d partitions)."""
        part = self.partition
        h = part.cell_length
        lo_i = max(int(math.floor((iv.a - part.lo) / h)), 0)
        hi_i = min(int(math.ceil((iv.b - part.lo) / h)), part.n_cells)
        total = 0.0
        for i in range(lo_i, hi_i):
            cell = part.cell(i)
            ov = cell.intersect(iv)
            if ov is not None:
                total += self.weights[i] * ov.length / cell.length
        return total

    def ball_mass_1d(self, center: float, r: float) -> float:
        part = self.partition
        if getattr(part, "circle", False):
            span = part.hi - part.lo
            if 2 * r >= span:
                return 1.0
            a = (center - r - part.lo) % span + part.lo
            b = (center + r - part.lo) % span + part.lo
            if a < b:
                return self.mass_of_interval(Interval(a, b))
            return (self.mass_of_interval(Interval(a, part.hi))
                    + self.mass_of_interval(Interval(part.lo, b)))
        a = max(center - r, part.lo)
        b = min(center + r, part.hi)
        if b <= a:
            return 0.0
        return self.mass_of_interval(Interval(a, b))

    def to_json(self) -> str:
        return json.dumps(
            {
                "region": self.partition.region_label(),
                "resolution": self.partition.resolution,
                "weights": [float(w) for w in self.weights],
            }
        )


# -- Julia set sampling ------------------------------------------------------

def repelling_fixed_point(f: RationalMapSpec) -> SpherePoint:
    cands = []
    for p, mult in sphere.fixed_points(f):
        if mult > 1.0 + 1e-6 and not p.is_infinity():
            cands.append((p, mult))
    if not cands:
        for p, mult in sphere.fixed_points(f):
            if mult > 1.0 + 1e-6:
                return p
        raise ValueError("no repelling fixed point found")
    cands.sort(key=lambda pm: (round(np.angle(pm[0].to_complex()), 9), abs(pm[0].to_complex())))
    return cands[0][0]


def julia_support(f: RationalMapSpec, n_points: int = 10000, seed: int = 0,
                  burn_in: int = 30) -> np.ndarray:
    """Inverse-iteration sample of the Julia set as a complex array.

    Grows a point set by taking full preimage fibers from a repelling
    fixed point, then decorrelates with random single-preimage sweeps.
    """
    if n_points < 1000:
        raise ValueError("n_points must be >= 1000")
    sphere.require_dynamical(f)
    rng = np.random.default_rng(seed)
    z0 = repelling_fixed_point(f)
    pts = np.array([z0.to_complex()], dtype=complex)
    d = f.degree
    # expansion phase: full fibers until we exceed the target size
    while pts.size < n_points:
        fiber = sphere.preimages_bulk(f, pts)  # (d, n)
        pts = fiber.reshape(-1)
        pts = pts[np.isfinite(pts)]
        if pts.size > 4 * n_points:
            idx = rng.choice(pts.size, size=4 * n_points, replace=False)
            pts = pts[idx]
    # decorrelation sweeps: one uniformly chosen preimage per point
    for _ in range(burn_in):
        fiber = sphere.preimages_bulk(f, pts)
        pick = rng.integers(0, d, size=pts.size)
        nxt = fiber[pick, np.arange(pts.size)]
        good = np.isfinite(nxt)
        pts = np.where(good, nxt, pts)
    if pts.size > n_points:
        idx = rng.choice(pts.size, size=n_points, replace=False)
        pts = pts[idx]
    return pts


# -- transfer matrices -------------------------------------------------------

@dataclass
class TransferAssembly:
    """Seed- and sample-frozen raw assembly, reweightable in (t, phi).

    Stores one record per (sample, preimage) pair so that pressure curves
    over many t values reuse the expensive preimage computations.
    """

    partition: object
    rows: np.ndarray
    cols: np.ndarray
    mults: np.ndarray
    log_derivs: np.ndarray
    phi_vals: np.ndarray
    inv_counts: np.ndarray  # 1/n_samples of the source cell, per record
    active: np.ndarray
    leak_records: np.ndarray  # (col, mult, log_deriv, phi) rows for escapes
    seed: int

    def materialise(self, t: float) -> "TransferMatrix":
        vals = self.mults * np.exp(-self.phi_vals - t * self.log_derivs) * self.inv_counts
        n = self.partition.n_cells
        leak = np.zeros(n)
        if self.leak_records.size:
            lcols = self.leak_records[:, 0].astype(int)
            lvals = (self.leak_records[:, 1]
                     * np.exp(-self.leak_records[:, 3] - t * self.leak_records[:, 2])
                     * self.leak_records[:, 4])
            np.add.at(leak, lcols, lvals)
        return TransferMatrix(partition=self.partition, rows=self.rows,
                              cols=self.cols, vals=vals, t=t,
                              phi_label="sampled", active=self.active, leak=leak)


@dataclass
class TransferMatrix:
    partition: object
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    t: float
    phi_label: str
    active: np.ndarray
    leak: np.ndarray = None

    def __post_init__(self):
        if np.any(self.vals < 0):
            raise ValueError("transfer entries must be nonnegative")

    @property
    def n(self) -> int:
        return self.partition.n_cells

    def matvec(self, w: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n)
        np.add.at(out, self.rows, self.vals * w[self.cols])
        return out

    def column_sums(self) -> np.ndarray:
        out = np.zeros(self.n)
        np.add.at(out, self.cols, self.vals)
        return out


def potential_or_zero(phi):
    if phi is None:
        return lambda x: 0.0
    return phi


_fold_checked: dict = {}


def lattes_fold(zs):
    """Deck symmetry z -> -1/z of the degree-2 torus-covered map, applied
    outside the closed unit disk (a chordal isometry swapping |z| >< 1)."""
    zs = np.asarray(zs, dtype=complex)
    out = np.where(np.abs(zs) > 1.0, -1.0 / np.where(zs == 0, 1.0, zs), zs)
    return np.where(np.isfinite(zs), out, 0.0 + 0.0j)


def assemble_transfer_1d(model: Model1D, part: CellPartition1D, t: float,
                         phi_const: float = 0.0) -> TransferMatrix:
    """Closed-form assembly on an exact interval/circle model.

    Per branch g and cells (i, j), the entry is
    (1/|A_j|) * int_{A_i ∩ g(A_j)} |f'(u)|^(1-t) du * e^(-phi),
    evaluated with the model's antiderivative, so the only error is float
    rounding of the cell edges.
    """
    prim = model.weight_primitive(t)
    n = part.n_cells
    rows, cols, vals = [], [], []
    scale = math.exp(-phi_const)
    for j in range(n):
        aj = part.cell(j)
        inv_len = 1.0 / aj.length
        for k in range(model.degree):
            pb = model.pullback_interval(k, aj)
            lo_i = max(int(math.floor((pb.a - part.lo) / part.cell_length)), 0)
            hi_i = min(int(math.ceil((pb.b - part.lo) / part.cell_length)), n)
            for i in range(lo_i, hi_i):
                ov = part.cell(i).intersect(pb)
                if ov is None or ov.length <= 0:
                    continue
                w = float(prim(ov.b) - prim(ov.a)) * scale * inv_len
                if w != 0.0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(abs(w))
    active = np.ones(n, dtype=bool)
    return TransferMatrix(partition=part, rows=np.array(rows, dtype=int),
                          cols=np.array(cols, dtype=int),
                          vals=np.array(vals, dtype=float), t=t,
                          phi_label=f"const({phi_const})", active=active,
                          leak=np.zeros(n))


def assemble_transfer_sphere(f: RationalMapSpec, part: CellPartition2D,
                             samples_per_cell: int = 64, seed: int = 0,
                             cloud: np.ndarray | None = None,
                             phi=None, all_cells_active: bool = False,
                             active_disk_radius: float | None = None,
                             fold=None) -> TransferAssembly:
    """Monte-Carlo assembly for a rational map over a chart rectangle.

    Active cells are those hit by the Julia cloud; for sphere-filling
    Julia sets pass all_cells_active or active_disk_radius (the latter
    activates cells with |center| below the radius, avoiding rectangle
    corners whose preimages escape the window).  Samples per cell come
    from the cloud, topped up with uniform in-cell points for cloudless
    assemblies.  Deterministic per seed.  Raises EmptyCell if an active
    cell ends up with no samples.

    `fold`, when given, is a deck symmetry of the map (f(fold(z)) = f(z))
    applied to preimages before cell location; it relocates mass that
    would escape the window into its symmetric copy inside.  The symmetry
    property is spot-checked on the first sample batch.
    """
    phi_fn = potential_or_zero(phi)
    n = part.n_cells
    rng_root = np.random.SeedSequence(seed)
    active = np.zeros(n, dtype=bool)
    cell_points: dict[int, np.ndarray] = {}
    if cloud is not None:
        idx = part.locate_bulk(np.asarray(cloud, dtype=complex))
        order = np.argsort(idx, kind="stable")
        sorted_idx = idx[order]
        sorted_pts = np.asarray(cloud, dtype=complex)[order]
        bounds = np.searchsorted(sorted_idx, np.arange(n + 1), side="left")
        for i in range(n):
            a, b = bounds[i], bounds[i + 1]
            if b > a:
                active[i] = True
                cell_points[i] = sorted_pts[a:b]
    synthesise = all_cells_active or active_disk_radius is not None
    if all_cells_active:
        active[:] = True
    elif active_disk_radius is not None:
        for i in range(n):
            if abs(part.cell_center(i)) <= active_disk_radius:
                active[i] = True

    rngs = [np.random.default_rng(s) for s in rng_root.spawn(n)]
    rows, cols, mults, logds, phis, invc = [], [], [], [], [], []
    leak = []
    cs = part.cell_size()
    for j in range(n):
        if not active[j]:
            continue
        pts = cell_points.get(j, np.zeros(0, dtype=complex))
        if pts.size > samples_per_cell:
            pts = pts[:samples_per_cell]
        if pts.size < samples_per_cell and synthesise:
            center = part.cell_center(j)
            extra = samples_per_cell - pts.size
            u = rngs[j].uniform(-0.5, 0.5, size=(extra, 2))
            pts = np.concatenate([
                pts,
                center + (u[:, 0] * (part.x1 - part.x0) / part.nx
                          + 1j * u[:, 1] * (part.y1 - part.y0) / part.ny),
            ])
        if pts.size == 0:
            raise EmptyCell(f"active cell {j} received no samples")
        fiber = sphere.preimages_bulk(f, pts)  # (d, ns)
        ns = pts.size
        for b in range(fiber.shape[0]):
            xs = fiber[b]
            if fold is not None:
                folded = fold(xs)
                moved = folded != xs
                if np.any(moved) and not _fold_checked.get(id(fold), False):
                    chk = xs[moved][:8]
                    err = np.abs(sphere.eval_bulk(f, fold(chk)) - sphere.eval_bulk(f, chk))
                    if np.any(err > 1e-8):
                        raise ValueError("fold is not a symmetry of the map")
                    _fold_checked[id(fold)] = True
                xs = folded
            finite = np.isfinite(xs)
            cells = np.full(xs.shape, -1, dtype=int)
            cells[finite] = part.locate_bulk(xs[finite])
            ld = np.zeros(xs.shape)
            ld[finite] = np.log(np.maximum(
                sphere.spherical_derivative_bulk(f, xs[finite]), 1e-300))
            if phi is None:
                pv = np.zeros(xs.shape)
            else:
                pv = np.array([phi_fn(x) if fin else 0.0
                               for x, fin in zip(xs, finite)])
            landed_active = (cells >= 0) & active[np.maximum(cells, 0)]
            sel = landed_active & finite
            k = int(sel.sum())
            rows.extend(cells[sel].tolist())
            cols.extend([j] * k)
            mults.extend([1.0] * k)
            logds.extend(ld[sel].tolist())
            phis.extend(pv[sel].tolist())
            invc.extend([1.0 / ns] * k)
            for x, fin, l, p, kept in zip(xs, finite, ld, pv, sel):
                if not kept:
                    # preimage escaped the active region; kept for leak stats
                    leak.append((j, 1.0, l if fin else 0.0, p, 1.0 / ns))
    leak_arr = np.array(leak, dtype=float) if leak else np.zeros((0, 5))
    del cs
    return TransferAssembly(partition=part,
                            rows=np.array(rows, dtype=int),
                            cols=np.array(cols, dtype=int),
                            mults=np.array(mults, dtype=float),
                            log_derivs=np.array(logds, dtype=float),
                            phi_vals=np.array(phis, dtype=float),
                            inv_counts=np.array(invc, dtype=float),
                            active=active, leak_records=leak_arr, seed=seed)


def assemble_transfer(f, part, t: float = 0.0, phi=None,
                      samples_per_cell: int = 64, seed: int = 0,
                      cloud=None, phi_const: float | None = None,
                      all_cells_active: bool = False) -> TransferMatrix:
    """Dispatch: closed form on 1-d models, Monte Carlo on the sphere."""
    if isinstance(f, Model1D):
        const = phi_const if phi_const is not None else (phi(0.0) if phi else 0.0)
        return assemble_transfer_1d(f, part, t, phi_const=const)
    spec = f.spec if isinstance(f, SphereMapModel) else f
    asm = assemble_transfer_sphere(spec, part, samples_per_cell=samples_per_cell,
                                   seed=seed, cloud=cloud, phi=phi,
                                   all_cells_active=all_cells_active)
    return asm.materialise(t)


def leading_pair(M: TransferMatrix, tol: float = 1e-8, max_sweeps: int = 10000,
                 degree_hint: int | None = None):
    """Perron eigenvalue and eigenmeasure of the dual action by power
    iteration; log(lambda) is the pressure estimate."""
    n = M.n
    w = np.where(M.active, 1.0, 0.0)
    if w.sum() == 0:
        raise ValueError("no active cells")
    w = w / w.sum()
    lam = 1.0
    resid = math.inf
    for _ in range(max_sweeps):
        mw = M.matvec(w)
        lam = mw.sum()
        if lam <= 0:
            raise NoConvergence("transfer image vanished", last_residual=resid)
        new = mw / lam
        resid = float(np.abs(mw - lam * w).sum())
        w = new
        if resid < tol:
            break
    else:
        raise NoConvergence(
            f"power iteration did not reach {tol} in {max_sweeps} sweeps",
            last_residual=resid,
        )
    # exceptional-measure guard: near-atomic eigenmeasures signal the rare
    # invariant-finite-set case
    if degree_hint:
        k = 2 * degree_hint - 2
        top = np.sort(w)[::-1][:k].sum()
        if top > 0.99:
            warnings.warn(
                f"eigenmeasure concentrates {top:.3f} of its mass on <= {k} cells",
                ExceptionalSupportWarning,
            )
    w = w / w.sum()
    w[int(np.argmax(w))] += 1.0 - w.sum()  # snap the total to 1 exactly
    return float(lam), CellMeasure(M.partition, w)


@dataclass
class PressureCurve:
    ts: list
    values: list
    eigen_residuals: list
    flags: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["t,P,residual,flag"]
        for t, p, r, fl in zip(self.ts, self.values, self.eigen_residuals, self.flags):
            lines.append(f"{t:.17g},{p:.17g},{r:.17g},{fl}")
        return "\n".join(lines) + "\n"

    def convexity_defect(self) -> float:
        worst = 0.0
        for i in range(1, len(self.ts) - 1):
            mid = 0.5 * (self.values[i - 1] + self.values[i + 1])
            worst = max(worst, self.values[i] - mid)
        return worst


@dataclass
class PressureConfig:
    resolution: int = 1024
    samples_per_cell: int = 64
    seed: int = 0
    tol: float = 1e-10
    max_sweeps: int = 10000
    phi_const: float = 0.0
    rect: tuple = (-2.0, 2.0, -2.0, 2.0)
    cloud_points: int = 20000
    all_cells_active: bool = False


def _transfer_for(f, t, config: PressureConfig, context: dict):
    if isinstance(f, Model1D):
        part = context.setdefault(
            "part",
            CellPartition1D(f.lo, f.hi, config.resolution, circle=f.circle),
        )
        return assemble_transfer_1d(f, part, t, phi_const=config.phi_const)
    spec = f.spec if isinstance(f, SphereMapModel) else f
    if "asm" not in context:
        x0, x1, y0, y1 = config.rect
        nx = ny = config.resolution
        part = CellPartition2D(x0, x1, y0, y1, nx, ny)
        cloud = None
        if not config.all_cells_active:
            cloud = julia_support(spec, config.cloud_points, seed=config.seed)
        context["asm"] = assemble_transfer_sphere(
            spec, part, samples_per_cell=config.samples_per_cell,
            seed=config.seed, cloud=cloud,
            all_cells_active=config.all_cells_active)
    asm = context["asm"]
    M = asm.materialise(t)
    if config.phi_const:
        M.vals = M.vals * math.exp(-config.phi_const)
    return M


def pressure_curve(f, ts, config: PressureConfig | None = None) -> PressureCurve:
    """P(t) = log(leading eigenvalue) over a sorted grid of t values.

    Values at t < 0 are still reported but flagged "formal": the
    discretised eigenvalue is not claimed to match any of the competing
    pressure definitions there.
    """
    config = config or PressureConfig()
    ts = list(ts)
    if any(ts[i] > ts[i + 1] for i in range(len(ts) - 1)):
        raise ValueError("ts must be sorted ascending")
    context: dict = {}
    values, resids, flags = [], [], []
    for t in ts:
        M = _transfer_for(f, t, config, context)
        lam, w = leading_pair(M, tol=config.tol, max_sweeps=config.max_sweeps)
        values.append(math.log(lam))
        resids.append(float(np.abs(M.matvec(w.weights) - lam * w.weights).sum()))
        flags.append("formal" if t < 0 else "ok")
    return PressureCurve(ts=ts, values=values, eigen_residuals=resids, flags=flags)


def pressure_at(f, t, config: PressureConfig | None = None, context: dict | None = None):
    config = config or PressureConfig()
    ctx = context if context is not None else {}
    M = _transfer_for(f, t, config, ctx)
    lam, measure = leading_pair(M, tol=config.tol, max_sweeps=config.max_sweeps)
    return math.log(lam), measure


def pressure_zero(f, bracket, tol: float = 1e-3,
                  config: PressureConfig | None = None, max_iter: int = 60) -> float:
    """First zero of the pressure by bisection on a straddling bracket."""
    config = config or PressureConfig()
    t_lo, t_hi = bracket
    context: dict = {}
    p_lo, _ = pressure_at(f, t_lo, config, context)
    p_hi, _ = pressure_at(f, t_hi, config, context)
    if not (p_lo > 0 > p_hi):
        raise BracketInvalid(
            f"P({t_lo}) = {p_lo:.4g}, P({t_hi}) = {p_hi:.4g} do not straddle zero"
        )
    for _ in range(max_iter):
        mid = 0.5 * (t_lo + t_hi)
        p_mid, _ = pressure_at(f, mid, config, context)
        if abs(p_mid) < tol:
            return mid
        if p_mid > 0:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


def conformality_residual(model, m: CellMeasure, t: float, phi=None,
                          test_cells=None, quad_points: int = 16) -> float:
    """Quantitative conformality defect on small test cells.

    For each test cell A: |m(f(A)) - int_A e^phi |Df|^t dm| / m(A), with
    injectivity certified by comparing the cell diameter with the distance
    to the critical set.  1-d models only.
    """
    if not isinstance(model, Model1D):
        raise NotImplementedError("conformality residual is implemented for 1-d models")
    phi_fn = potential_or_zero(phi)
    part = m.partition
    if test_cells is None:
        test_cells = range(0, part.n_cells, max(part.n_cells // 64, 1))
    crit = [c for c in _interior_critical(model)]
    worst = 0.0
    for idx in test_cells:
        cell = part.cell(idx)
        if crit:
            dist = min(min(model.distance(cell.a, c), model.distance(cell.b, c))
                       for c in crit)
            inside = any(cell.contains_point(c) for c in crit)
            if inside or dist <= cell.length:
                raise InjectivityUncertifiable(
                    f"cell {idx} too close to a critical point for certification"
                )
        mass = m.weights[idx]
        if mass <= 0:
            continue
        # image interval (monotone on certified cells)
        fa = float(model.apply(cell.a))
        fb = float(model.apply(cell.b))
        lo, hi = (fa, fb) if fa <= fb else (fb, fa)
        if model.circle and hi - lo > (model.hi - model.lo) / 2:
            # wrapped image: complementary arithmetic on the circle
            img_mass = 1.0 - m.mass_of_interval(Interval(hi, model.hi)) \
                       - m.mass_of_interval(Interval(model.lo, lo))
        else:
            img_mass = m.mass_of_interval(Interval(lo, hi)) if hi > lo else 0.0
        # quadrature of e^phi |Df|^t against the cellwise-uniform density
        us = cell.a + (np.arange(quad_points) + 0.5) * cell.length / quad_points
        dens = mass / cell.length
        integ = float(np.sum(np.exp([phi_fn(u) for u in us])
                             * model.deriv(us) ** t) * dens * cell.length / quad_points)
        worst = max(worst, abs(img_mass - integ) / mass)
    return worst


def _interior_critical(model: Model1D):
    if model.name.startswith("chebyshev"):
        return [0.5]
    if model.name.startswith("zsq"):
        return [0.0]
    return []
