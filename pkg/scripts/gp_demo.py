"""Synthetic 2D GP regression: FKT-CG posterior mean against the Cholesky reference."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from _common import describe, parse_config
from fkt.core import relative_error
from fkt.gp import gp_posterior_dense, gp_posterior_mean
from fkt.kernels import make_kernel


@dataclass
class Config:
    n_train: int = 1000
    n_test: int = 500
    lengthscale: float = 0.25
    noise: float = 0.01
    p: int = 16
    theta: float = 0.5
    leaf_capacity: int = 128
    tol: float = 1e-10
    seed: int = 0


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    train, test = rng.uniform(size=(cfg.n_train, 2)), rng.uniform(size=(cfg.n_test, 2))
    y = np.sin(6 * train[:, 0]) * np.cos(4 * train[:, 1]) + 0.1 * rng.normal(size=cfg.n_train)
    kernel = make_kernel("matern32", lengthscale=cfg.lengthscale)
    t0 = time.perf_counter()
    pred = gp_posterior_mean(
        train, y, cfg.noise, kernel, test, p=cfg.p, theta=cfg.theta, leaf_capacity=cfg.leaf_capacity, tol=cfg.tol
    )
    t_fast = time.perf_counter() - t0
    t0 = time.perf_counter()
    ref, _ = gp_posterior_dense(train, y, cfg.noise, kernel, test)
    t_dense = time.perf_counter() - t0
    d = pred.diagnostics
    print(f"FKT-CG {t_fast:.2f}s, {d.iterations} iterations, residual {d.residual:.1e}; dense {t_dense:.2f}s")
    print(f"relative difference {relative_error(pred.mean, ref):.2e}")


if __name__ == "__main__":
    cfg = parse_config(Config, __doc__)
    print(describe(cfg))
    main(cfg)
