"""Dense complex polynomial helpers: evaluation, derivatives, resultants
and an Aberth-Ehrlich simultaneous root finder.

Coefficients are ascending-degree lists/arrays of complex numbers, so
``p[k]`` multiplies ``z**k``.  Trailing (highest-degree) zeros are allowed
on input and trimmed by :func:`trim`.
"""

from __future__ import annotations

import numpy as np

from .errors import RootFindingFailure

TRIM_TOL = 0.0  # exact zeros only; callers pass already-scaled coefficients


def trim(coeffs) -> np.ndarray:
    """Drop trailing zero coefficients (the zero polynomial keeps one)."""
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficient array must be 1-d and nonempty")
    nz = np.nonzero(np.abs(c) > TRIM_TOL)[0]
    if nz.size == 0:
        return c[:1] * 0
    return c[: nz[-1] + 1]


def degree(coeffs) -> int:
    return len(trim(coeffs)) - 1


def peval(coeffs, z):
    """Horner evaluation; works on scalars and arrays."""
    c = np.asarray(coeffs, dtype=complex)
    out = np.zeros_like(np.asarray(z, dtype=complex))
    for k in range(len(c) - 1, -1, -1):
        out = out * z + c[k]
    return out


def pderiv(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    if len(c) == 1:
        return np.zeros(1, dtype=complex)
    return c[1:] * np.arange(1, len(c), dtype=float)


def padd(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=complex)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def pmul(a, b) -> np.ndarray:
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def pscale(a, s) -> np.ndarray:
    return np.asarray(a, dtype=complex) * s


def homogeneous_eval(coeffs, a, b, deg: int):
    """Evaluate sum_k c_k a^k b^(deg-k), the degree-`deg` homogenisation."""
    c = np.asarray(coeffs, dtype=complex)
    # Horner in the subdominant ratio keeps |t| <= 1 and avoids overflow on
    # normalised homogeneous inputs.
    if abs(b) >= abs(a):
        t = a / b if b != 0 else 0.0 + 0.0j
        s = 0.0 + 0.0j
        for k in range(len(c) - 1, -1, -1):
            s = s * t + c[k]
        return s * b**deg
    t = b / a
    s = 0.0 + 0.0j
    for k in range(len(c)):
        s = s * t + c[k]
    # s = sum_k c_k t^(len-1-k); lift to exponent deg-k
    return s * t ** (deg - (len(c) - 1)) * a**deg


def sylvester_resultant(a, b) -> complex:
    """Resultant via the Sylvester matrix determinant.

    Used only as a coprimality check, so no effort is made to avoid the
    O(n^3) determinant.
    """
    a = trim(a)
    b = trim(b)
    m, n = len(a) - 1, len(b) - 1
    if m == 0 and n == 0:
        return 1.0 + 0.0j
    if m == 0:
        return a[0] ** n
    if n == 0:
        return b[0] ** m
    size = m + n
    s = np.zeros((size, size), dtype=complex)
    arev = a[::-1]  # descending degree
    brev = b[::-1]
    for i in range(n):
        s[i, i : i + m + 1] = arev
    for i in range(m):
        s[n + i, i : i + n + 1] = brev
    return complex(np.linalg.det(s))


def _initial_guesses(c: np.ndarray) -> np.ndarray:
    """Deterministic starting points on a slightly perturbed circle."""
    n = len(c) - 1
    # Cauchy-style radius bound keeps starts near the root annulus.
    lead = abs(c[-1])
    r = 1.0 + max(abs(c[:-1]) / lead) if lead > 0 else 1.0
    r = min(r, 1e6) ** (1.0 / max(n, 1))
    k = np.arange(n)
    angles = 2.0 * np.pi * (k + 0.25) / n + 0.3 / n
    return r * np.exp(1j * angles) * (1.0 + 0.02 * np.cos(3.0 * angles))


def aberth_roots(coeffs, tol: float = 1e-12, max_sweeps: int = 200) -> np.ndarray:
    """All complex roots of a polynomial by Aberth-Ehrlich iteration.

    Residual tolerance is measured as |p(z)| relative to the coefficient
    scale at |z|; raises RootFindingFailure when the budget runs out.
    """
    c = trim(coeffs)
    n = len(c) - 1
    if n <= 0:
        return np.zeros(0, dtype=complex)
    c = c / c[-1]
    if n == 1:
        return np.array([-c[0]], dtype=complex)
    if n == 2:
        # quadratic formula with cancellation-safe branch
        b, a0 = c[1], c[0]
        disc = np.sqrt(b * b - 4.0 * a0 + 0j)
        q = -0.5 * (b + disc) if abs(b + disc) >= abs(b - disc) else -0.5 * (b - disc)
        r1 = q
        r2 = a0 / q if q != 0 else -b - q
        return np.array([r1, r2], dtype=complex)

    dc = pderiv(c)
    z = _initial_guesses(c)
    scale = np.abs(c).max()
    for _ in range(max_sweeps):
        p = peval(c, z)
        dp = peval(dc, z)
        # coefficient-scaled residual at each current point
        zb = np.maximum(np.abs(z), 1.0)
        res = np.abs(p) / (scale * zb**n)
        if np.all(res < tol):
            return z
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = np.where(dp != 0, p / dp, 0.0)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        sigma = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - newton * sigma
        step = np.where(np.abs(denom) > 1e-300, newton / denom, newton)
        # keep degenerate points moving
        stuck = (dp == 0) & (p != 0)
        if np.any(stuck):
            step = step + stuck * (0.1 + 0.1j)
        z = z - step
    p = peval(c, z)
    zb = np.maximum(np.abs(z), 1.0)
    res = float(np.max(np.abs(p) / (scale * zb**n)))
    if res < 1e-6:
        # multiple roots converge slowly; accept a cluster-grade residual
        return z
    raise RootFindingFailure(
        f"Aberth iteration stalled at residual {res:.3e} after {max_sweeps} sweeps",
        residual=res,
    )


def cluster_roots(roots, radius: float = 1e-6):
    """Group nearby roots into (center, multiplicity) pairs.

    Greedy single-linkage clustering; centers are cluster means, which
    restores accuracy lost by Aberth on multiple roots.
    """
    roots = np.asarray(roots, dtype=complex)
    used = np.zeros(len(roots), dtype=bool)
    out = []
    for i in range(len(roots)):
        if used[i]:
            continue
        members = [i]
        used[i] = True
        changed = True
        while changed:
            changed = False
            for j in range(len(roots)):
                if used[j]:
                    continue
                if any(abs(roots[j] - roots[k]) < radius * (1 + abs(roots[k])) for k in members):
                    members.append(j)
                    used[j] = True
                    changed = True
        center = roots[members].mean()
        out.append((complex(center), len(members)))
    return out
