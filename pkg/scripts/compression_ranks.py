"""Exact compressed radial ranks R_k for kernels with K' = qK, per dimension."""

from __future__ import annotations

from dataclasses import dataclass, field

from _common import describe, parse_config, write_csv
from fkt.expansion import build_coefficient_table, radial_compression
from fkt.kernels import make_kernel


@dataclass
class Config:
    kernels: list = field(
        default_factory=lambda: [
            "electrostatic", "inverse_square", "inverse_cube", "yukawa",
            "exponential", "exp_linear", "exp_inverse", "exp_inverse_square", "gaussian",
        ]
    )
    dims: list = field(default_factory=lambda: [3, 4, 5, 6, 7, 8, 9])
    p: int = 12
    output: str = "compression_ranks.csv"


def main(cfg: Config) -> None:
    rows = []
    for name in cfg.kernels:
        kernel = make_kernel(name)
        for d in cfg.dims:
            ranks = [f.rank for f in radial_compression(kernel, build_coefficient_table(d, cfg.p), cfg.p)]
            bound = [(cfg.p - k + 2) // 2 for k in range(cfg.p + 1)]
            rows += [{"kernel": name, "d": d, "k": k, "rank": r, "bound": b} for k, (r, b) in enumerate(zip(ranks, bound))]
            print(f"{name:>18} d={d}: ranks {ranks}")
    write_csv(cfg.output, rows)


if __name__ == "__main__":
    cfg = parse_config(Config, __doc__)
    print(describe(cfg))
    main(cfg)
