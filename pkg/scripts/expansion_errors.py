"""Max truncation error over random pairs with |r'| = 1, |r| = 2, per kernel, d and p."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from _common import describe, parse_config, write_csv
from fkt.cli import expansion_errors
from fkt.kernels import make_kernel


@dataclass
class Config:
    kernels: list = field(default_factory=lambda: ["exponential", "cos_over_r", "cauchy", "gaussian"])
    dims: list = field(default_factory=lambda: [3, 6, 9, 12])
    ps: list = field(default_factory=lambda: [3, 6, 9, 12, 15, 18])
    pairs: int = 1000
    seed: int = 0
    output: str = "expansion_errors.csv"


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for name in cfg.kernels:
        kernel = make_kernel(name)
        for d in cfg.dims:
            errs = expansion_errors(kernel, d, cfg.ps, cfg.pairs, rng)
            rows += [{"kernel": name, "d": d, "p": p, "max_abs_error": e} for p, e in zip(cfg.ps, errs)]
            print(f"{name:>12} d={d:<3}" + " ".join(f"{e:9.2e}" for e in errs))
    write_csv(cfg.output, rows)


if __name__ == "__main__":
    cfg = parse_config(Config, __doc__)
    print(describe(cfg))
    main(cfg)
