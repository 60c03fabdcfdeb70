"""Independent oracles used to freeze expected values.

Everything here deliberately avoids the code paths it checks: distances
go through an explicit 3-space embedding, derivatives through finite
differences, pressures through symbolic transfer matrices on the binary
shift, measures through brute-force enumeration or quadrature.
"""

import math

import numpy as np


def stereographic_chordal(z: complex, w: complex) -> float:
    """Chordal distance via the explicit embedding into the 2-sphere of
    radius 1 (so the diameter is 2), for finite points."""

    def embed(u):
        x, y = u.real, u.imag
        n = 1.0 + x * x + y * y
        return np.array([2.0 * x / n, 2.0 * y / n, (n - 2.0) / n])

    return float(np.linalg.norm(embed(z) - embed(w)))


def fd_spherical_derivative(apply_fn, dist_fn, x, h: float = 1e-6) -> float:
    """sigma(f(x), f(x'))/sigma(x, x') for several offsets, Richardson-style
    averaged; apply_fn/dist_fn operate on the caller's point type."""
    vals = []
    for hh in (h, h / 2, h / 4):
        x2 = x + hh
        num = dist_fn(apply_fn(x), apply_fn(x2))
        den = dist_fn(x, x2)
        vals.append(num / den)
    # the sequence converges linearly in h; extrapolate the last two
    return float(2 * vals[2] - vals[1])


def fd_iterated_log_derivative(apply_fn, dist_fn, x, n: int, h: float = 1e-8) -> float:
    """log |D(f^n)(x)| via finite differences of the n-fold application."""

    def fn(p):
        cur = p
        for _ in range(n):
            cur = apply_fn(cur)
        return cur

    x2 = x + h
    return math.log(dist_fn(fn(x), fn(x2)) / dist_fn(x, x2))


def binary_shift_pressure(depth: int, weight_log: float) -> float:
    """log of the spectral radius of the depth-k cylinder transfer matrix
    on the full binary shift with constant log-weight per symbol.

    The variational value sup over depth-k Markov measures of
    h + integral(weight) equals this log; computed by dense power
    iteration over the 2^depth cylinder states.
    """
    n = 2 ** depth
    # state w transitions to (w << 1 | b) & mask for b in {0, 1}
    mask = n - 1
    v = np.full(n, 1.0 / n)
    lam = 1.0
    wgt = math.exp(weight_log)
    for _ in range(500):
        new = np.zeros(n)
        idx = np.arange(n)
        tgt0 = (idx << 1) & mask
        tgt1 = tgt0 | 1
        np.add.at(new, tgt0, wgt * v)
        np.add.at(new, tgt1, wgt * v)
        lam_new = new.sum()
        new /= lam_new
        if np.abs(new - v).sum() < 1e-15:
            v = new
            lam = lam_new
            break
        v = new
        lam = lam_new
    return math.log(lam)


def markov_measure_value(p: float, q: float, weight_log: float) -> float:
    """h(mu) + integral(weight) for the 2-state Markov measure with
    transition probabilities p = P(0->1), q = P(1->0)."""
    pi0 = q / (p + q)
    pi1 = p / (p + q)

    def ent(a):
        if a <= 0 or a >= 1:
            return 0.0
        return -(a * math.log(a) + (1 - a) * math.log(1 - a))

    h = pi0 * ent(p) + pi1 * ent(q)
    return h + weight_log


def grid_max_markov_value(weight_log: float, steps: int = 199) -> float:
    best = -math.inf
    for i in range(1, steps + 1):
        for j in range(1, steps + 1):
            best = max(best, markov_measure_value(i / (steps + 1),
                                                  j / (steps + 1), weight_log))
    return best


def doubling_first_return_masses(n_max: int):
    """Exhaustive dyadic enumeration of first-return branches of angle
    doubling over [0, 1/2): intervals and base-normalised masses."""
    out = []
    lo = 0.0
    for n in range(1, n_max + 1):
        # branch n is [a_n, b_n) with endpoints (1 - 2^(1-n))/... derived by
        # direct simulation on exact dyadics
        width = 2.0 ** (-(n + 1))
        a = 0.5 - 2.0 ** (-n) if n > 1 else 0.0
        b = a + width
        out.append((n, a, b, width / 0.5))
        lo = b
    del lo
    return out


def simulate_first_return_doubling(base_lo, base_hi, n_grid=2 ** 16, n_max=30):
    """Brute-force first-return times of grid points under x -> 2x mod 1."""
    xs = (np.arange(n_grid) + 0.5) * (base_hi - base_lo) / n_grid + base_lo
    times = np.zeros(n_grid, dtype=int)
    cur = xs.copy()
    alive = np.ones(n_grid, dtype=bool)
    for n in range(1, n_max + 1):
        cur = (2.0 * cur) % 1.0
        back = alive & (cur >= base_lo) & (cur < base_hi)
        times[back] = n
        alive &= ~back
    return xs, times


def chebyshev_acip_mass(a: float, b: float) -> float:
    """Mass of [a, b] under density 1/(pi sqrt(x(1-x))), evaluated in
    closed form through the hand substitution x = sin^2(s), under which
    the integrand is the constant 2/pi."""
    sa = math.asin(math.sqrt(max(a, 0.0)))
    sb = math.asin(math.sqrt(min(b, 1.0)))
    return (sb - sa) * 2.0 / math.pi


def chebyshev_acip_mass_quadrature(a: float, b: float, n_quad: int = 200000) -> float:
    """The same mass by raw midpoint quadrature of the singular density,
    for cross-checking the closed form on interior intervals."""
    xs = a + (np.arange(n_quad) + 0.5) * (b - a) / n_quad
    return float(np.sum(1.0 / (np.pi * np.sqrt(xs * (1.0 - xs)))) * (b - a) / n_quad)


def quadratic_roots(a, b, c):
    disc = (b * b - 4 * a * c) ** 0.5
    return (-b + disc) / (2 * a), (-b - disc) / (2 * a)
