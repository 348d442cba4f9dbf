"""Gegenbauer polynomials and real hyperspherical harmonics in any dimension.

Harmonics on S^{d-1} are built from the hyperspherical angle chain

    x_0 = |x| cos t_0,  x_1 = |x| sin t_0 cos t_1,  ...,
    (x_{d-2}, x_{d-1}) = |x| sin t_0 ... sin t_{d-3} (cos phi, sin phi)

as products of normalized associated Gegenbauer factors
``sin^m(t) C^{lambda}_{n}(cos t)`` and a circular factor ``cos(m phi)`` /
``sin(m phi)``.  The basis is real and orthonormal on the sphere, so

    sum_h Y_k^h(x) Y_k^h(y) = C_k^{(alpha)}(cos gamma) / Z_k,   alpha = d/2 - 1.

In d = 2, ``alpha = 0`` and we use the Chebyshev limit
``C_k^{(0)}(x) = (2/k) T_k(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln


class ZeroVector(ValueError):
    pass


class HarmonicIndex(NamedTuple):
    """Degree ``k`` and chain ``(mu_1, ..., mu_{d-2})``; the last entry is signed.

    In two dimensions the chain is the single signed circular frequency
    ``(+k,)`` (cosine) or ``(-k,)`` (sine).
    """

    degree: int
    chain: tuple


def gegenbauer_all(alpha: float, kmax: int, x) -> np.ndarray:
    """C_k^{(alpha)}(x) for k = 0..kmax, stacked along axis 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax == 0:
        return out
    if alpha == 0:
        # (2/k) T_k(x); T_k by its own recurrence
        t_prev, t = np.ones_like(x), x.copy()
        out[1] = 2 * t
        for k in range(2, kmax + 1):
            t_prev, t = t, 2 * x * t - t_prev
            out[k] = 2.0 / k * t
        return out
    out[1] = 2 * alpha * x
    for n in range(2, kmax + 1):
        out[n] = (2 * x * (n + alpha - 1) * out[n - 1] - (n + 2 * alpha - 2) * out[n - 2]) / n
    return out


def gegenbauer(alpha: float, k: int, x):
    if k < 0:
        raise ValueError("degree must be nonnegative")
    val = gegenbauer_all(alpha, k, x)[k]
    return val if val.ndim else float(val)


def gegenbauer_bound(d: int, k: int) -> int:
    """Uniform bound on |C_k^{(d/2-1)}| over [-1, 1], valid for d >= 3."""
    if d < 3:
        raise ValueError("bound stated for d >= 3")
    return math.comb(k + d - 3, k)


def harmonic_count(d: int, k: int) -> int:
    if k < 0:
        return 0
    second = math.comb(k + d - 3, k - 2) if k >= 2 else 0
    return math.comb(k + d - 1, k) - second


def enumerate_harmonic_indices(d: int, k: int) -> list[HarmonicIndex]:
    if d < 2:
        raise ValueError("harmonics need d >= 2")
    if d == 2:
        return [HarmonicIndex(k, (0,))] if k == 0 else [HarmonicIndex(k, (k,)), HarmonicIndex(k, (-k,))]
    out = []

    def walk(prefix, bound, depth):
        if depth == d - 3:
            for m in range(bound, -bound - 1, -1):
                out.append(HarmonicIndex(k, prefix + (m,)))
            return
        for m in range(bound, -1, -1):
            walk(prefix + (m,), m, depth + 1)

    walk((), k, 0)
    return out


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def addition_normalizer(d: int, k: int) -> float:
    """Z_k with sum_h Y_k^h(x) Y_k^h(y) = C_k(cos gamma) / Z_k for this basis."""
    alpha = d / 2 - 1
    return gegenbauer(alpha, k, 1.0) * sphere_area(d) / harmonic_count(d, k)


def _gegenbauer_norm(n: int, lam: float) -> float:
    """1/sqrt of int_{-1}^{1} (1-t^2)^{lam-1/2} C_n^{lam}(t)^2 dt."""
    log_h = (
        math.log(math.pi)
        + (1 - 2 * lam) * math.log(2)
        + gammaln(n + 2 * lam)
        - gammaln(n + 1)
        - math.log(n + lam)
        - 2 * gammaln(lam)
    )
    return math.exp(-0.5 * log_h)


@dataclass(frozen=True)
class HarmonicBasis:
    """Precomputed index bookkeeping for all harmonics of degree <= max_degree."""

    d: int
    max_degree: int
    indices: tuple
    degrees: np.ndarray
    # per angle level: list of (m, n, lam, norm) factor specs and per-index rows
    level_factors: tuple
    level_rows: tuple
    circle_freqs: np.ndarray

    def __len__(self):
        return len(self.indices)

    def evaluate(self, points) -> np.ndarray:
        """Values Y[h, i] for every index h and point i (directions only)."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if x.shape[1] != self.d:
            raise ValueError(f"expected {self.d}-dimensional points")
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0):
            raise ZeroVector("harmonics are undefined at the zero vector")
        u = x / norms[:, None]
        d = self.d
        npts = u.shape[0]
        values = np.ones((len(self.indices), npts))
        # tail norms |u_{l:}| for each level
        tail = np.sqrt(np.cumsum((u * u)[:, ::-1], axis=1)[:, ::-1])
        for level in range(d - 2):
            denom = tail[:, level]
            with np.errstate(invalid="ignore", divide="ignore"):
                cos_t = np.where(denom > 0, u[:, level] / denom, 1.0)
                sin_t = np.where(denom > 0, tail[:, level + 1] / denom, 0.0)
            cos_t = np.clip(cos_t, -1.0, 1.0)
            specs = self.level_factors[level]
            table = np.empty((len(specs), npts))
            cache = {}
            for row, (m, n, lam, norm) in enumerate(specs):
                if lam not in cache:
                    nmax = max(s[1] for s in specs if s[2] == lam)
                    cache[lam] = gegenbauer_all(lam, nmax, cos_t)
                table[row] = norm * sin_t**m * cache[lam][n]
            values *= table[self.level_rows[level]]
        # circle
        a, b = u[:, d - 2], u[:, d - 1]
        phi = np.arctan2(b, a)
        f = self.circle_freqs[:, None]
        circ = np.where(
            f > 0,
            np.cos(f * phi) / math.sqrt(math.pi),
            np.where(f < 0, np.sin(-f * phi) / math.sqrt(math.pi), 1 / math.sqrt(2 * math.pi)),
        )
        return values * circ


@lru_cache(maxsize=None)
def harmonic_basis(d: int, max_degree: int) -> HarmonicBasis:
    if d < 2:
        raise ValueError("harmonics need d >= 2")
    indices = [h for k in range(max_degree + 1) for h in enumerate_harmonic_indices(d, k)]
    level_factors = []
    level_rows = []
    for level in range(d - 2):
        # sphere at this level is S^{d-1-level}; lambda = m + (d-level-2)/2
        specs: dict = {}
        rows = []
        for h in indices:
            full = (h.degree,) + h.chain
            top, m = full[level], abs(full[level + 1])
            lam = m + (d - level - 2) / 2
            key = (m, top - m, lam)
            if key not in specs:
                specs[key] = len(specs)
            rows.append(specs[key])
        ordered = sorted(specs, key=specs.get)
        level_factors.append(tuple((m, n, lam, _gegenbauer_norm(n, lam)) for m, n, lam in ordered))
        level_rows.append(np.array(rows, dtype=np.intp))
    freqs = np.array([h.chain[-1] for h in indices])
    return HarmonicBasis(
        d,
        max_degree,
        tuple(indices),
        np.array([h.degree for h in indices]),
        tuple(level_factors),
        tuple(level_rows),
        freqs,
    )


def evaluate_harmonics(point, max_degree: int) -> dict:
    """Harmonic values at one point, keyed by :class:`HarmonicIndex`."""
    point = np.asarray(point, dtype=float)
    basis = harmonic_basis(point.shape[-1], max_degree)
    vals = basis.evaluate(point[None, :])[:, 0]
    return dict(zip(basis.indices, vals))
