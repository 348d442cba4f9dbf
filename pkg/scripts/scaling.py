"""Time plan + multiply against N and fit log-log slopes for FKT and the dense product."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from _common import describe, parse_config, write_csv
from fkt.cli import hypersphere, loglog_slope
from fkt.core import dense_multiply, multiply, plan, relative_error
from fkt.kernels import make_kernel


@dataclass
class Config:
    kernel: str = "matern12"
    dim: int = 3
    p: int = 4
    theta: float = 0.75
    leaf_capacity: int = 512
    sizes: list = field(default_factory=lambda: [2**k for k in range(12, 19)])
    dense_max: int = 2**15
    seed: int = 0
    output: str = "scaling.csv"


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    kernel = make_kernel(cfg.kernel)
    rows = []
    for n in cfg.sizes:
        X = hypersphere(n, cfg.dim, rng)
        y = rng.uniform(size=n)
        t0 = time.perf_counter()
        z = multiply(plan(X, kernel, cfg.p, cfg.theta, cfg.leaf_capacity, mode="streaming"), y)
        row = {"N": n, "fkt_seconds": time.perf_counter() - t0, "dense_seconds": "", "rel_error": ""}
        if n <= cfg.dense_max:
            t0 = time.perf_counter()
            exact = dense_multiply(X, kernel, y)
            row.update(dense_seconds=time.perf_counter() - t0, rel_error=relative_error(z, exact))
        rows.append(row)
        print(row)
    fkt = [(r["N"], r["fkt_seconds"]) for r in rows]
    dense = [(r["N"], r["dense_seconds"]) for r in rows if r["dense_seconds"] != ""]
    print(f"FKT slope {loglog_slope(*zip(*fkt)):.2f}")
    if len(dense) > 1:
        print(f"dense slope {loglog_slope(*zip(*dense)):.2f}")
    write_csv(cfg.output, rows)


if __name__ == "__main__":
    cfg = parse_config(Config, __doc__)
    print(describe(cfg))
    main(cfg)
