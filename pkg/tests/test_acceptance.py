"""Acceptance criteria 1-11, each at its stated tolerance.

Every test appends one PASS/FAIL line to ``ACCEPTANCE_LINES``; the lines are
printed in the pytest terminal summary.  Run directly with
``python -m tests.test_acceptance`` for the same report.
"""

import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from fkt.core import barnes_hut_plan, dense_multiply, multiply, plan, relative_error
from fkt.expansion import (
    build_coefficient_table,
    build_s2m,
    expansion_layout,
    radial_compression,
    radial_function,
    truncated_kernel,
    truncation_error_bound,
)
from fkt.gp import gp_posterior_dense, gp_posterior_mean
from fkt.harmonics import addition_normalizer, gegenbauer, harmonic_basis
from fkt.kernels import KERNELS, make_kernel

from .conftest import ACCEPTANCE_LINES, sphere_points


def report(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")


# published maximum absolute errors, |r'| = 1, |r| = 2, 1000 pairs; rows p = 3..18 by 3, columns d = 3, 6, 9, 12
PUBLISHED_ERRORS = {
    "exponential": [
        [1.03e-2, 1.02e-2, 1.02e-2, 1.02e-2],
        [7.32e-4, 6.78e-4, 6.52e-4, 6.56e-4],
        [5.48e-5, 5.47e-5, 5.40e-5, 5.02e-5],
        [4.62e-6, 4.57e-6, 4.59e-6, 4.31e-6],
        [4.25e-7, 4.24e-7, 4.20e-7, 3.98e-7],
        [4.14e-8, 4.14e-8, 4.04e-8, 4.04e-8],
    ],
    "cos_over_r": [
        [5.44e-2, 3.07e-2, 3.07e-2, 3.06e-2],
        [7.60e-3, 2.74e-3, 2.01e-3, 2.00e-3],
        [7.68e-4, 3.65e-4, 2.34e-4, 1.93e-4],
        [6.03e-5, 3.23e-5, 3.06e-5, 2.01e-5],
        [9.92e-6, 3.48e-6, 3.05e-6, 2.59e-6],
        [1.70e-6, 5.23e-7, 3.12e-7, 2.82e-7],
    ],
    "cauchy": [
        [1.41e-2, 1.41e-2, 1.41e-2, 1.41e-2],
        [2.17e-3, 1.61e-3, 1.11e-3, 1.11e-3],
        [1.58e-4, 1.42e-4, 1.39e-4, 9.51e-5],
        [1.71e-5, 1.54e-5, 1.19e-5, 8.29e-6],
        [1.62e-6, 1.27e-6, 9.35e-7, 9.18e-7],
        [1.39e-7, 1.02e-7, 7.69e-8, 6.40e-8],
    ],
    "gaussian": [
        [4.86e-2, 4.27e-2, 2.95e-2, 2.95e-2],
        [9.42e-3, 7.85e-3, 4.91e-3, 4.86e-3],
        [9.32e-4, 5.45e-4, 5.40e-4, 3.87e-4],
        [4.80e-5, 4.10e-5, 4.10e-5, 2.64e-5],
        [2.29e-6, 2.29e-6, 1.96e-6, 1.51e-6],
        [9.88e-8, 9.88e-8, 6.39e-8, 4.07e-8],
    ],
}
TABLE_PS = [3, 6, 9, 12, 15, 18]
TABLE_DIMS = [3, 6, 9, 12]

# published compression ranks for d = 3..9; None marks "equal to the generic bound"
PUBLISHED_RANKS = {
    "electrostatic": [1, None, 2, None, 3, None, 4],
    "inverse_square": [None, 1, None, 2, None, 3, None],
    "inverse_cube": [None, None, 1, None, 2, None, 3],
    "yukawa": [1, None, 2, None, 3, None, 4],
    "exponential": [2, None, 3, None, 4, None, 5],
    "exp_linear": [3, None, 4, None, 5, None, 6],
    "exp_inverse": [4] * 7,
    "exp_inverse_square": [2] * 7,
}


def max_pair_error(kernel, d, p, rng, pairs=1000):
    src = sphere_points(rng, pairs, d, 1.0)
    tgt = sphere_points(rng, pairs, d, 2.0)
    exact = kernel(np.linalg.norm(src - tgt, axis=1))
    approx = truncated_kernel(kernel, build_coefficient_table(d, p), p, src, tgt)
    return float(np.abs(approx - exact).max())


def decreasing_with_one_blip(errs) -> bool:
    blips = 0
    for a, b in zip(errs, errs[1:]):
        if b >= a:
            if b > 2 * a:
                return False
            blips += 1
    return blips <= 1


def test_criterion_1_expansion_errors_match_published_table():
    rng = np.random.default_rng(1)
    worst, bad_cells, bad_shapes = 1.0, [], []
    for name, rows in PUBLISHED_ERRORS.items():
        kernel = make_kernel(name)
        for j, d in enumerate(TABLE_DIMS):
            errs = [max_pair_error(kernel, d, p, rng) for p in TABLE_PS]
            for i, p in enumerate(TABLE_PS):
                factor = max(errs[i] / rows[i][j], rows[i][j] / errs[i])
                worst = max(worst, factor)
                if factor > 5:
                    bad_cells.append((name, d, p, errs[i], rows[i][j]))
            if not decreasing_with_one_blip(errs):
                bad_shapes.append((name, d))
    ok = not bad_cells and not bad_shapes
    report(1, ok, f"96 cells, worst factor {worst:.2f} (limit 5); non-monotone series {bad_shapes or 'none'}")
    assert ok, (bad_cells, bad_shapes)


def test_criterion_2_matern_product_residual():
    rng = np.random.default_rng(2)
    X = sphere_points(rng, 10_000, 3)
    y = rng.uniform(size=10_000)
    kernel = make_kernel("matern12")
    z = multiply(plan(X, kernel, 4, 0.75, 512), y)
    err = relative_error(z, dense_multiply(X, kernel, y))
    ok = err < 1e-4
    report(2, ok, f"Matern-1/2 N=10000 d=3 p=4 theta=0.75: relative error {err:.2e} (limit 1e-4)")
    assert ok


def test_criterion_3_expansion_size():
    bad = []
    for d in range(2, 9):
        for p in range(9):
            size = expansion_layout(d, p).size
            rows = build_s2m(np.full((1, d), 0.1), make_kernel("exponential"), build_coefficient_table(d, p), p).shape[0]
            if not size == rows == math.comb(d + p, p):
                bad.append((d, p, size))
    report(3, not bad, f"expansion size = binom(d+p, p) for d <= 8, p <= 8; mismatches {bad or 'none'}")
    assert not bad


# published exponential factorization: F_{k,i}(r) e^{r} and G_{k,i}(r') as {power: coefficient}
TABLE4_F = {
    0: [{1: 1}, {0: Fraction(-1, 3)}],
    1: [{2: 1}, {1: Fraction(-1, 5), 0: Fraction(-1, 5)}],
    2: [{2: Fraction(1, 3), 3: Fraction(1, 3)}, {1: Fraction(-1, 7), 2: Fraction(-1, 42), 3: Fraction(1, 42), 0: Fraction(-1, 7)}],
}
TABLE4_G = {
    0: [{0: 1, 2: Fraction(1, 6), 4: Fraction(1, 120), 6: Fraction(1, 5040)}, {2: 1, 4: Fraction(1, 10), 6: Fraction(1, 280)}],
    1: [{0: 1, 2: Fraction(1, 10), 4: Fraction(1, 280), 6: Fraction(1, 15120)}, {2: 1, 4: Fraction(1, 14), 6: Fraction(1, 504)}],
    2: [{0: 1, 4: Fraction(-1, 504)}, {2: 1, 4: Fraction(1, 18)}],
}


def poly(coeffs, x):
    return sum(float(c) * x**e for e, c in coeffs.items())


def test_criterion_4_compression_ranks_and_exponential_factorization():
    P = 12
    mismatched = []
    for name, cells in PUBLISHED_RANKS.items():
        kernel = make_kernel(name)
        wrong = []
        for d, cell in zip(range(3, 10), cells):
            got = [f.rank for f in radial_compression(kernel, build_coefficient_table(d, P), P)]
            bound = [(P - k + 2) // 2 for k in range(P + 1)]
            want = bound if cell is None else [min(cell, b) for b in bound]
            if got != want:
                wrong.append(f"d={d} max rank {max(got)} vs {cell}")
        if wrong:
            mismatched.append(f"{name}: " + ", ".join(wrong))
    # the published table corresponds to truncation P = 7; its radial functions
    # carry an extra r^{k+1} / r'^k relative to the ones used here
    kernel = make_kernel("exponential")
    table = build_coefficient_table(3, 7)
    rng = np.random.default_rng(4)
    rs, r = rng.uniform(0.1, 1.0, 50), rng.uniform(1.5, 4.0, 50)
    worst = 0.0
    for k in range(3):
        pub = sum(poly(F, r) * np.exp(-r) * poly(G, rs) for F, G in zip(TABLE4_F[k], TABLE4_G[k]))
        ours = radial_function(kernel, table, k, 7, rs, r) * r ** (k + 1) / rs**k
        worst = max(worst, float(np.max(np.abs(pub - ours) / np.abs(ours))))
    ok = not mismatched and worst < 1e-10
    report(
        4,
        ok,
        f"rank cells mismatched: {mismatched or 'none'}; exponential factorization max relative deviation {worst:.1e} (limit 1e-10)",
    )
    assert ok, mismatched


def test_criterion_5_electrostatic_radial_functions():
    kernel = make_kernel("electrostatic")
    table = build_coefficient_table(3, 12)
    rng = np.random.default_rng(5)
    rs, r = rng.uniform(0, 1, 200), rng.uniform(1.2, 3, 200)
    worst = max(float(np.abs(radial_function(kernel, table, k, 12, rs, r) - rs**k / r ** (k + 1)).max()) for k in range(9))
    ok = worst < 1e-12
    report(5, ok, f"1/r radial functions vs r'^k / r^(k+1), k <= 8: max deviation {worst:.1e} (limit 1e-12)")
    assert ok


def test_criterion_6_addition_theorem():
    rng = np.random.default_rng(6)
    worst = 0.0
    for d in range(2, 7):
        basis = harmonic_basis(d, 8)
        u, v = sphere_points(rng, 200, d), sphere_points(rng, 200, d)
        Yu, Yv = basis.evaluate(u), basis.evaluate(v)
        cos = np.clip((u * v).sum(axis=1), -1, 1)
        for k in range(9):
            rows = basis.degrees == k
            lhs = addition_normalizer(d, k) * (Yu[rows] * Yv[rows]).sum(axis=0)
            worst = max(worst, float(np.abs(lhs - gegenbauer(d / 2 - 1, k, cos)).max()))
    ok = worst < 1e-10
    report(6, ok, f"addition theorem d = 2..6, k <= 8, 200 pairs: max deviation {worst:.1e} (limit 1e-10)")
    assert ok


def test_criterion_7_oracle_equivalence():
    rng = np.random.default_rng(7)
    kernels = ["exponential", "matern32", "cauchy", "rational_quadratic", "gaussian"]
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 6))
        n = int(rng.integers(600, 2001))
        kernel = make_kernel(str(rng.choice(kernels)))
        X = rng.uniform(-1, 1, size=(n, d))
        y = rng.uniform(size=n)
        err = relative_error(multiply(plan(X, kernel, 4, 0.75, 512), y), dense_multiply(X, kernel, y))
        worst = max(worst, err)
    exact_worst = 0.0
    for d in (2, 3, 4, 5):
        X = rng.uniform(size=(300, d))
        y = rng.uniform(size=300)
        kernel = make_kernel("exponential")
        exact_worst = max(exact_worst, relative_error(multiply(plan(X, kernel, 4, 0.75, 512), y), dense_multiply(X, kernel, y)))
    X = rng.uniform(size=(1500, 3))
    pl = plan(X, make_kernel("cauchy"), 4, 0.75, 128)
    y1, y2 = rng.uniform(size=1500), rng.uniform(size=1500)
    combo = multiply(pl, 2.5 * y1 - 0.7 * y2)
    lin = float(np.abs(combo - (2.5 * multiply(pl, y1) - 0.7 * multiply(pl, y2))).max() / np.abs(combo).max())
    ok = worst < 1e-3 and exact_worst < 1e-13 and lin < 1e-12
    report(
        7,
        ok,
        f"20 random configurations max error {worst:.1e} (limit 1e-3); single leaf {exact_worst:.0e} (limit 1e-13); linearity {lin:.0e} (limit 1e-12)",
    )
    assert ok


def loglog_fit(sizes, seconds):
    return float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])


def test_criterion_8_scaling():
    rng = np.random.default_rng(8)
    kernel = make_kernel("matern12")
    sizes = [2**k for k in range(12, 19)]
    fkt_times, dense_times = [], []
    for n in sizes:
        X = sphere_points(rng, n, 3)
        y = rng.uniform(size=n)
        reps = 3 if n <= 2**15 else 1
        runs = []
        for _ in range(reps):
            t0 = time.perf_counter()
            multiply(plan(X, kernel, 4, 0.75, 512, mode="streaming"), y)
            runs.append(time.perf_counter() - t0)
        fkt_times.append(float(np.median(runs)))
        if n <= 2**15:
            t0 = time.perf_counter()
            dense_multiply(X, kernel, y)
            dense_times.append(time.perf_counter() - t0)
    fkt_slope = loglog_fit(sizes, fkt_times)
    dense_slope = loglog_fit(sizes[: len(dense_times)], dense_times)
    faster = [n for n, tf, td in zip(sizes, fkt_times, dense_times) if tf < td]
    ok = fkt_slope <= 1.25 and abs(dense_slope - 2) <= 0.3 and bool(faster)
    report(
        8,
        ok,
        f"FKT slope {fkt_slope:.2f} (limit 1.25), dense slope {dense_slope:.2f} (2 +- 0.3), crossover N {min(faster) if faster else 'none'}",
    )
    assert ok


def fastest_within(points, eps):
    times = [t for e, t in points if e <= eps]
    return min(times) if times else math.inf


def test_criterion_9_barnes_hut_frontier():
    rng = np.random.default_rng(9)
    X = rng.uniform(size=(20_000, 2))
    y = rng.uniform(size=20_000)
    kernel = make_kernel("cauchy")
    exact = dense_multiply(X, kernel, y)
    thetas = [0.25, 0.35, 0.45, 0.55, 0.65, 0.75]
    bh, fkt = [], []
    for theta in thetas:
        for p in (0, 1, 2, 3):
            t0 = time.perf_counter()
            pl = barnes_hut_plan(X, kernel, theta, 512) if p == 0 else plan(X, kernel, p, theta, 512)
            z = multiply(pl, y)
            point = (relative_error(z, exact), time.perf_counter() - t0)
            (bh if p == 0 else fkt).append(point)
    levels = sorted({e for e, _ in bh + fkt if e < 1e-3})
    dominated = all(fastest_within(fkt, eps) <= fastest_within(bh, eps) for eps in levels)
    ok = bool(levels) and dominated
    best_bh = min(e for e, _ in bh)
    best_fkt = min(e for e, _ in fkt)
    report(
        9,
        ok,
        f"best errors Barnes-Hut {best_bh:.1e}, FKT {best_fkt:.1e}; FKT frontier dominates below 1e-3 at {len(levels)} accuracy levels: {dominated}",
    )
    assert ok


def test_criterion_10_gp_pipeline():
    rng = np.random.default_rng(10)
    train, test = rng.uniform(size=(1000, 2)), rng.uniform(size=(500, 2))
    y = np.sin(6 * train[:, 0]) * np.cos(4 * train[:, 1]) + 0.1 * rng.normal(size=1000)
    kernel = make_kernel("matern32", lengthscale=0.25)
    pred = gp_posterior_mean(train, y, 0.01, kernel, test, p=16, theta=0.5, leaf_capacity=128, tol=1e-10)
    ref, _ = gp_posterior_dense(train, y, 0.01, kernel, test)
    err = relative_error(pred.mean, ref)
    # noise-dominated: negligible signal variance, so the prediction is the prior mean
    tiny = make_kernel("matern32", lengthscale=0.25, variance=1e-14)
    trivial = gp_posterior_mean(train, y, 1.0, tiny, test, p=4)
    trivial_ref, _ = gp_posterior_dense(train, y, 1.0, tiny, test)
    trivial_err = relative_error(trivial.mean, trivial_ref)
    ok = err < 1e-4 and trivial_err < 1e-13 and pred.diagnostics.converged
    report(
        10,
        ok,
        f"GP 1000/500 Matern-3/2: relative error {err:.1e} (limit 1e-4), {pred.diagnostics.iterations} CG iterations; noise-dominated case {trivial_err:.0e}",
    )
    assert ok


def test_criterion_11_error_bound():
    rng = np.random.default_rng(11)
    failures = []
    for name in sorted(KERNELS):
        kernel = make_kernel(name)
        bounds = [truncation_error_bound(kernel, 3, p, 0.5, 2.0) for p in range(1, 13)]
        for p, bound in zip(range(1, 13), bounds):
            if bound < max_pair_error(kernel, 3, p, rng, pairs=500):
                failures.append(f"{name} p={p} below observed")
        if any(b > a for a, b in zip(bounds, bounds[1:])):
            failures.append(f"{name} increasing")
    ok = not failures
    report(11, ok, f"bound >= observed and nonincreasing, {len(KERNELS)} kernels, p = 1..12: {failures or 'all hold'}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
