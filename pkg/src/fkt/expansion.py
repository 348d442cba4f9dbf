"""Generalized multipole expansion of isotropic kernels.

With ``r' = |src| < r = |tgt|`` and ``gamma`` the angle between them,

    K(|src - tgt|) = sum_k C_k(cos gamma) Kbar_k(r', r)
                   = sum_k Z_k sum_h Y_k^h(src) Y_k^h(tgt) Kbar_k(r', r),

    Kbar_k(r', r) = sum_{j >= k, j = k mod 2} r'^j sum_{m=0}^{j} K^(m)(r) r^(m-j) Tbar[k, j, m].

The ``Tbar`` are exact rationals that depend only on the dimension.  They
combine the Gegenbauer re-expansion of cosine powers (``A``) with the
derivative coefficients of ``eps -> K(r sqrt(1 + eps))`` (``B``).  Truncating
at ``j <= p`` gives the degree-``p`` Taylor polynomial of the kernel in ``r'``.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .harmonics import addition_normalizer, gegenbauer_all, harmonic_basis, harmonic_count
from .kernels import IsotropicKernel
from .laurent import LaurentPolynomial
from .rational import rational_rank_qr

MAX_ORDER = 20
CACHE_FORMAT_VERSION = 1


class OrderTooLarge(ValueError):
    pass


class NotRecurrenceKernel(ValueError):
    pass


# --- exact coefficients --------------------------------------------------------


def _double_factorial(n: int) -> int:
    # (-1)!! = 1
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def bell_coefficient(n: int, m: int) -> Fraction:
    """d^n/deps^n K(r sqrt(1+eps)) at 0 = sum_m B[n, m] K^(m)(r) r^m."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    sign = -1 if (n + m) % 2 else 1
    return Fraction(sign * _double_factorial(2 * n - 2 * m - 1) * math.comb(2 * n - m - 1, m - 1), 2**n)


def _alpha(d: int) -> Fraction:
    return Fraction(d - 2, 2)


def _rising(a: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for t in range(n):
        out *= a + t
    return out


def cosine_power_coefficients(d: int, i: int) -> list[Fraction]:
    """A[0..i] with x**i = sum_k A[k] C_k^{(d/2-1)}(x).

    For d = 2 the Chebyshev-limit convention C_k^{(0)} = (2/k) T_k is used.
    """
    alpha = _alpha(d)
    out = []
    for k in range(i + 1):
        if (i - k) % 2:
            out.append(Fraction(0))
            continue
        half = (i - k) // 2
        if alpha == 0:
            # x^i = 2^-i sum binom(i, half) (2 T_k for k > 0), and T_k = (k/2) C_k
            coeff = Fraction(math.comb(i, half), 2**i)
            out.append(coeff * k if k else coeff)
            continue
        num = math.factorial(i) * (alpha + k)
        den = 2**i * math.factorial(half) * _rising(alpha, (i + k) // 2 + 1)
        out.append(num / den)
    return out


@dataclass
class CoefficientTable:
    """Exact ``Tbar[k, j, m]`` for 0 <= k <= j <= p, 0 <= m <= j.

    ``tbar`` only holds nonzero entries.  The m = 0 entry exists only for
    k = j = 0, where it carries the plain K(r) term of the Taylor series.
    """

    d: int
    p: int
    tbar: dict
    A: dict = field(default_factory=dict)
    B: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.zeros((self.p + 1, self.p + 1, self.p + 1))
        for (k, j, m), v in self.tbar.items():
            arr[k, j, m] = float(v)
        arr.setflags(write=False)
        self.tbar_array = arr
        self.normalizers = np.array([addition_normalizer(self.d, k) for k in range(self.p + 1)])

    def T(self, k: int, j: int, m: int) -> float:
        """Coefficient with the harmonic normalizer folded in (Z_k * Tbar)."""
        return float(self.normalizers[k]) * float(self.tbar.get((k, j, m), 0))

    def radial_pairs(self) -> list[tuple[int, int]]:
        """(k, j) pairs with j >= k, j = k mod 2, j <= p."""
        return [(k, j) for k in range(self.p + 1) for j in range(k, self.p + 1, 2)]


def _compute_table(d: int, p: int) -> CoefficientTable:
    B = {(n, m): bell_coefficient(n, m) for n in range(1, p + 1) for m in range(1, n + 1)}
    A = {}
    for i in range(p + 1):
        for k, a in enumerate(cosine_power_coefficients(d, i)):
            A[k, i] = a
    fact = [math.factorial(n) for n in range(p + 1)]
    tbar = {(0, 0, 0): Fraction(1)}
    for j in range(1, p + 1):
        for k in range(j % 2, j + 1, 2):
            for m in range(1, j + 1):
                total = Fraction(0)
                for n in range(max((j + k) // 2, m), j + 1):
                    i = 2 * n - j
                    a = A[k, i]
                    if a:
                        total += a * (-2) ** i * math.comb(n, i) * B[n, m] / fact[n]
                if total:
                    tbar[k, j, m] = total
    return CoefficientTable(d, p, tbar, A, B)


_TABLES: dict = {}
_TABLE_LOCK = threading.Lock()


def _cache_path(d: int, p: int) -> Path | None:
    root = os.environ.get("FKT_CACHE_DIR")
    if not root:
        return None
    return Path(root) / f"tbar_d{d}_p{p}_v{CACHE_FORMAT_VERSION}.txt"


def save_table(table: CoefficientTable, path) -> None:
    lines = [f"fkt-coefficients {CACHE_FORMAT_VERSION} {table.d} {table.p}"]
    for (k, j, m), v in sorted(table.tbar.items()):
        lines.append(f"{k} {j} {m} {v.numerator} {v.denominator}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_table(path) -> CoefficientTable:
    text = Path(path).read_text().splitlines()
    tag, version, d, p = text[0].split()
    if tag != "fkt-coefficients" or int(version) != CACHE_FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{CACHE_FORMAT_VERSION} coefficient table")
    tbar = {}
    for line in text[1:]:
        k, j, m, num, den = map(int, line.split())
        tbar[k, j, m] = Fraction(num, den)
    return CoefficientTable(int(d), int(p), tbar)


def _table_uncapped(d: int, p: int) -> CoefficientTable:
    key = (d, p)
    table = _TABLES.get(key)
    if table is not None:
        return table
    with _TABLE_LOCK:
        table = _TABLES.get(key)
        if table is None:
            path = _cache_path(d, p)
            if path is not None and path.exists():
                table = load_table(path)
            else:
                table = _compute_table(d, p)
                if path is not None:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    save_table(table, path)
            _TABLES[key] = table
    return table


def build_coefficient_table(d: int, p: int) -> CoefficientTable:
    """Memoized exact coefficient table; set FKT_CACHE_DIR to persist it."""
    if d < 2:
        raise ValueError("need d >= 2")
    if not 0 <= p <= MAX_ORDER:
        raise OrderTooLarge(f"truncation order must lie in [0, {MAX_ORDER}], got {p}")
    return _table_uncapped(d, p)


def expansion_size(d: int, p: int) -> int:
    return math.comb(d + p, p)


# --- radial functions and pointwise expansion ------------------------------------


def _weighted_derivatives(kernel: IsotropicKernel, r: np.ndarray, order: int) -> np.ndarray:
    """E[m, ...] = K^(m)(r) r^m."""
    D = kernel.derivatives(r, order)
    powers = np.arange(order + 1).reshape((-1,) + (1,) * np.ndim(r))
    return D * np.asarray(r, dtype=float) ** powers


def radial_function(kernel, table: CoefficientTable, k: int, p: int, r_src, r_tgt):
    """Truncated Kbar_k(r', r) (Gegenbauer normalization, no Z_k)."""
    if not 0 <= k <= p <= table.p:
        raise ValueError("need 0 <= k <= p <= table order")
    r_src = np.asarray(r_src, dtype=float)
    r_tgt = np.asarray(r_tgt, dtype=float)
    E = _weighted_derivatives(kernel, r_tgt, p)
    ratio = r_src / r_tgt
    out = np.zeros(np.broadcast_shapes(r_src.shape, r_tgt.shape))
    for j in range(k, p + 1, 2):
        coeff = np.tensordot(table.tbar_array[k, j, : p + 1], E, axes=(0, 0))
        out = out + ratio**j * coeff
    return out if out.ndim else float(out)


def _radial_matrix(kernel, table: CoefficientTable, p: int, r: np.ndarray) -> tuple[list, np.ndarray]:
    """W[:, c] = sum_m K^(m)(r) r^(m-j) Tbar[k, j, m] for every (k, j) pair c."""
    pairs = [(k, j) for k in range(p + 1) for j in range(k, p + 1, 2)]
    E = _weighted_derivatives(kernel, r, p)  # (p+1, n)
    coeffs = np.array([table.tbar_array[k, j, : p + 1] for k, j in pairs]).T  # (p+1, npairs)
    W = E.T @ coeffs
    js = np.array([j for _, j in pairs])
    W /= r[:, None] ** js[None, :]
    return pairs, W


def truncated_kernel(kernel, table: CoefficientTable, p: int, src, tgt):
    """Order-p expansion of K(|src - tgt|) about the origin, |src| < |tgt|.

    Uses the Gegenbauer form directly; vectorized over leading axes.
    """
    src = np.asarray(src, dtype=float)
    tgt = np.asarray(tgt, dtype=float)
    d = src.shape[-1]
    if table.d != d:
        raise ValueError("table dimension does not match the points")
    src2, tgt2 = np.broadcast_arrays(np.atleast_2d(src), np.atleast_2d(tgt))
    rs = np.linalg.norm(src2, axis=-1)
    rt = np.linalg.norm(tgt2, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosg = np.where(rs > 0, np.sum(src2 * tgt2, axis=-1) / (rs * rt), 1.0)
    C = gegenbauer_all(float(_alpha(d)), p, np.clip(cosg, -1, 1))
    pairs, W = _radial_matrix(kernel, table, p, rt)
    out = np.zeros(rt.shape)
    for c, (k, j) in enumerate(pairs):
        out += C[k] * rs**j * W[:, c]
    return out if src.ndim > 1 or tgt.ndim > 1 else float(out[0])


def truncation_error_bound(kernel, d: int, p: int, ratio: float, r: float, j_max: int = 30) -> float:
    """Partial sum (j <= j_max) of the absolute tail bound on the truncation error."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    if j_max < p + 1:
        return 0.0
    table = _table_uncapped(d, j_max)
    E = _weighted_derivatives(kernel, np.asarray(float(r)), j_max)
    total = 0.0
    for k in range(j_max + 1):
        if d >= 3:
            bound = math.comb(k + d - 3, k)
        else:
            bound = 2.0 / k if k else 1.0
        inner = 0.0
        for j in range(max(p + 1, k), j_max + 1):
            if (j - k) % 2:
                continue
            inner += ratio**j * float(table.tbar_array[k, j] @ E)
        total += bound * abs(inner)
    return total


# --- radial compression ----------------------------------------------------------


@dataclass(frozen=True)
class RadialFactorization:
    """Kbar_k(r', r) = sum_i F_i(r) G_i(r') with F_i = K(r) * Laurent(r)."""

    degree: int
    rank: int
    F: tuple  # LaurentPolynomial per term (multiplies K(r))
    G: tuple  # LaurentPolynomial per term in r' (nonnegative powers)

    def evaluate(self, kernel, r_src, r_tgt):
        r_src = np.asarray(r_src, dtype=float)
        r_tgt = np.asarray(r_tgt, dtype=float)
        K = kernel(r_tgt)
        return sum(K * f(r_tgt) * g(r_src) for f, g in zip(self.F, self.G))


def derivative_laurent(q: LaurentPolynomial, order: int) -> list[LaurentPolynomial]:
    """Q_m with K^(m) = Q_m K, from Q_0 = 1 and Q_{m+1} = Q_m' + q Q_m."""
    out = [LaurentPolynomial({0: 1})]
    for _ in range(order):
        prev = out[-1]
        out.append(prev.derivative() + q * prev)
    return out


def radial_compression(kernel, table: CoefficientTable, p: int) -> list[RadialFactorization]:
    q = kernel.recurrence
    if q is None:
        raise NotRecurrenceKernel(f"{kernel.name} has no registered derivative recurrence")
    if p > table.p:
        raise ValueError("table order too small")
    Q = derivative_laurent(q, p)
    out = []
    for k in range(p + 1):
        js = list(range(k, p + 1, 2))
        # Laurent coefficient in r of the r'^j term: sum_m Tbar Q_m r^(m-j)
        columns = []
        for j in js:
            poly = LaurentPolynomial()
            for m in range(j + 1):
                t = table.tbar.get((k, j, m))
                if t:
                    poly = poly + Q[m] * LaurentPolynomial.monomial(m - j, t)
            columns.append(poly)
        powers = sorted({e for c in columns for e in c.terms}) or [0]
        matrix = [[c.terms.get(e, Fraction(0)) for c in columns] for e in powers]
        rank, left, right = rational_rank_qr(matrix)
        F = tuple(
            LaurentPolynomial({e: left[row][i] for row, e in enumerate(powers)}) for i in range(rank)
        )
        G = tuple(LaurentPolynomial({j: right[i][col] for col, j in enumerate(js)}) for i in range(rank))
        out.append(RadialFactorization(k, rank, F, G))
    return out


# --- source-to-multipole / multipole-to-target ---------------------------------


@dataclass(frozen=True)
class ExpansionLayout:
    """Row bookkeeping shared by matching s2m and m2t matrices."""

    d: int
    p: int
    harmonic_rows: np.ndarray  # which harmonic each coefficient uses
    radial_rows: np.ndarray  # which radial term (pair or compressed term)
    degrees: np.ndarray
    powers: np.ndarray | None  # r' exponent per row (uncompressed only)
    compression: tuple | None

    @property
    def size(self) -> int:
        return len(self.harmonic_rows)


def expansion_layout(d: int, p: int, compression=None) -> ExpansionLayout:
    basis = harmonic_basis(d, p)
    h_rows, r_rows, degs, pows = [], [], [], []
    if compression is None:
        pairs = [(k, j) for k in range(p + 1) for j in range(k, p + 1, 2)]
        by_degree: dict = {}
        for c, (k, j) in enumerate(pairs):
            by_degree.setdefault(k, []).append((c, j))
        for h, k in enumerate(basis.degrees):
            for c, j in by_degree[int(k)]:
                h_rows.append(h)
                r_rows.append(c)
                degs.append(k)
                pows.append(j)
        return ExpansionLayout(d, p, np.array(h_rows), np.array(r_rows), np.array(degs), np.array(pows), None)
    offsets = np.cumsum([0] + [f.rank for f in compression])
    for h, k in enumerate(basis.degrees):
        for i in range(compression[int(k)].rank):
            h_rows.append(h)
            r_rows.append(offsets[int(k)] + i)
            degs.append(k)
    return ExpansionLayout(
        d, p, np.array(h_rows, dtype=np.intp), np.array(r_rows, dtype=np.intp), np.array(degs), None, tuple(compression)
    )


def _directions(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    radii = np.linalg.norm(points, axis=1)
    safe = points.copy()
    safe[radii == 0] = np.eye(points.shape[1])[0]
    return radii, safe


def build_s2m(points, kernel, table: CoefficientTable, p: int, compression=None, layout=None) -> np.ndarray:
    """Rows: expansion coefficients; columns: sources (relative to the center)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    layout = layout or expansion_layout(table.d, p, compression)
    radii, safe = _directions(points)
    Y = harmonic_basis(table.d, p).evaluate(safe) if len(points) else np.zeros((len(harmonic_basis(table.d, p)), 0))
    if layout.compression is None:
        radial = radii[None, :] ** layout.powers[:, None]
        return Y[layout.harmonic_rows] * radial
    G = np.array([g(radii) for fac in layout.compression for g in fac.G]).reshape(-1, len(radii))
    return Y[layout.harmonic_rows] * G[layout.radial_rows]


def build_m2t(points, kernel, table: CoefficientTable, p: int, compression=None, layout=None) -> np.ndarray:
    """Rows: targets (relative to the center, nonzero); columns match build_s2m rows."""
    points = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, table.d)
    layout = layout or expansion_layout(table.d, p, compression)
    if len(points) == 0:
        return np.zeros((0, layout.size))
    radii = np.linalg.norm(points, axis=1)
    Y = harmonic_basis(table.d, p).evaluate(points)
    Z = table.normalizers[layout.degrees]
    if layout.compression is None:
        _, W = _radial_matrix(kernel, table, p, radii)
        radial = W.T[layout.radial_rows]
    else:
        K = kernel(radii)
        F = np.array([K * f(radii) for fac in layout.compression for f in fac.F]).reshape(-1, len(radii))
        radial = F[layout.radial_rows]
    return (Y[layout.harmonic_rows] * radial * Z[:, None]).T
