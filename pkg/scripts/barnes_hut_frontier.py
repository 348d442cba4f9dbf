"""Error / time pairs for Barnes-Hut (p = 0, center of mass) and FKT p = 1..3 on 2D Cauchy."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from _common import describe, parse_config, write_csv
from fkt.core import barnes_hut_plan, dense_multiply, multiply, plan, relative_error
from fkt.kernels import make_kernel


@dataclass
class Config:
    n: int = 20_000
    ps: list = field(default_factory=lambda: [1, 2, 3])
    thetas: list = field(default_factory=lambda: [0.25, 0.35, 0.45, 0.55, 0.65, 0.75])
    leaf_capacity: int = 512
    seed: int = 0
    output: str = "barnes_hut_frontier.csv"


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    X = rng.uniform(size=(cfg.n, 2))
    y = rng.uniform(size=cfg.n)
    kernel = make_kernel("cauchy")
    exact = dense_multiply(X, kernel, y)
    rows = []
    for theta in cfg.thetas:
        for p in [0] + cfg.ps:
            t0 = time.perf_counter()
            pl = barnes_hut_plan(X, kernel, theta, cfg.leaf_capacity) if p == 0 else plan(X, kernel, p, theta, cfg.leaf_capacity)
            z = multiply(pl, y)
            seconds = time.perf_counter() - t0
            row = {"method": "barnes-hut" if p == 0 else "fkt", "p": p, "theta": theta, "seconds": seconds, "rel_error": relative_error(z, exact)}
            rows.append(row)
            print(f"{row['method']:>10} p={p} theta={theta:.2f} {seconds:7.3f}s error {row['rel_error']:.2e}")
    write_csv(cfg.output, rows)


if __name__ == "__main__":
    cfg = parse_config(Config, __doc__)
    print(describe(cfg))
    main(cfg)
