"""Command-line front end: mvm, benchmark, error-study and gp-predict.

Every command writes plot-ready CSV rows (one fixed column set) and can
emit a JSON run record.  Flags override the ``--config`` JSON file, which
overrides the defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    EAGER_ENTRY_BUDGET,
    barnes_hut_plan,
    build_operators,
    dense_multiply,
    multiply,
    operator_entries,
    plan,
    relative_error,
)
from .expansion import MAX_ORDER, build_coefficient_table, truncated_kernel
from .gp import gp_posterior_dense, gp_posterior_mean
from .kernels import KERNELS, eval_kernel, make_kernel

log = logging.getLogger("fkt")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4

RESULT_COLUMNS = [
    "command",
    "method",
    "kernel",
    "kernel_params",
    "d",
    "N",
    "p",
    "theta",
    "leaf_capacity",
    "compress",
    "seed",
    "expansion_terms",
    "nodes",
    "tree_seconds",
    "operator_seconds",
    "multiply_seconds",
    "dense_seconds",
    "rel_error",
    "max_abs_error",
]


class ConfigError(ValueError):
    pass


class InputError(OSError):
    pass


class NumericalError(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    record: str | None = None
    y: str | None = None
    test: str | None = None
    kernel: str = "matern12"
    kernel_params: dict = field(default_factory=dict)
    dim: int = 3
    n: int = 10_000
    generator: str = "hypersphere"
    p: int = 4
    theta: float = 0.75
    leaf_capacity: int = 512
    compress: str = "auto"
    seed: int = 0
    threads: int = 1
    dense: bool = False
    sizes: list = field(default_factory=lambda: [2**k for k in range(12, 17)])
    dense_max: int = 2**15
    repetitions: int = 3
    ps: list = field(default_factory=lambda: [3, 6, 9, 12, 15, 18])
    thetas: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    kernels: list = field(default_factory=lambda: ["exponential"])
    dims: list = field(default_factory=lambda: [3])
    pairs: int = 1000
    mode: str = "expansion"
    noise: float = 0.01
    tol: float = 1e-8
    max_iter: int | None = None
    lat_lon: bool = False

    def validate(self) -> "RunConfig":
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        for name in self.kernels:
            if name not in KERNELS:
                raise ConfigError(f"unknown kernel {name!r}")
        if not 0 < self.theta < 1 or not all(0 < t < 1 for t in self.thetas):
            raise ConfigError("theta must lie in (0, 1)")
        if not 0 <= self.p <= MAX_ORDER or not all(0 <= p <= MAX_ORDER for p in self.ps):
            raise ConfigError(f"p must lie in [0, {MAX_ORDER}]")
        if self.dim < 2 or not all(d >= 2 for d in self.dims):
            raise ConfigError("dimension must be at least 2")
        if self.leaf_capacity < 1 or self.n < 1 or self.repetitions < 1 or self.threads < 1:
            raise ConfigError("leaf capacity, N, repetitions and threads must be positive")
        if self.compress not in ("auto", "on", "off"):
            raise ConfigError("compress must be auto, on or off")
        if self.generator not in GENERATORS:
            raise ConfigError(f"generator must be one of {sorted(GENERATORS)}")
        if self.mode not in ("expansion", "mvm"):
            raise ConfigError("error-study mode must be expansion or mvm")
        if self.noise < 0 or self.tol <= 0:
            raise ConfigError("noise must be >= 0 and tolerance > 0")
        try:
            make_kernel(self.kernel, **self.kernel_params)
        except TypeError as exc:
            raise ConfigError(f"bad kernel parameters: {exc}") from None
        return self


@dataclass
class ResultRecord:
    config: dict
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        data = json.loads(text)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise InputError(f"unsupported record schema {data.get('schema_version')!r}")
        return cls(**data)


def base_row(cfg: RunConfig, **values) -> dict:
    row = dict.fromkeys(RESULT_COLUMNS, "")
    row.update(
        command=cfg.command,
        kernel=cfg.kernel,
        kernel_params=json.dumps(cfg.kernel_params, sort_keys=True),
        d=cfg.dim,
        p=cfg.p,
        theta=cfg.theta,
        leaf_capacity=cfg.leaf_capacity,
        compress=cfg.compress,
        seed=cfg.seed,
    )
    row.update(values)
    return row


def write_rows(path, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def _parse_cell(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_rows(path) -> list:
    """Inverse of :func:`write_rows` (numbers come back as int / float)."""
    with open(path, newline="") as fh:
        return [{k: _parse_cell(v) for k, v in row.items()} for row in csv.DictReader(fh)]


# ---------------------------------------------------------------- data


@dataclass
class PointTable:
    points: np.ndarray
    extra: np.ndarray  # columns after the first ``d``

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest_points(path, dims: int | None = None) -> PointTable:
    """Read a numeric CSV, one point per row; a non-numeric first row is a header.

    With ``dims`` the first ``dims`` columns are coordinates and the rest are
    returned as ``extra``; otherwise every column is a coordinate.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            raw = [(reader.line_num, row) for row in reader if any(c.strip() for c in row)]
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    if raw and not all(_is_number(c) for c in raw[0][1]):
        raw = raw[1:]
    if not raw:
        raise InputError(f"{path}: no data rows")
    width = len(raw[0][1])
    values = np.empty((len(raw), width))
    for i, (line, row) in enumerate(raw):
        if len(row) != width:
            raise InputError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise InputError(f"{path}: row {line}, column {j + 1}: not a number: {cell.strip()!r}") from None
    if not np.all(np.isfinite(values)):
        raise InputError(f"{path}: non-finite values")
    d = width if dims is None else dims
    if width < d:
        raise InputError(f"{path}: {width} columns, expected at least {d}")
    return PointTable(values[:, :d], values[:, d:])


def lat_lon_to_xyz(lat, lon) -> np.ndarray:
    """Degrees of latitude / longitude to points on the unit sphere in R^3."""
    lat, lon = np.radians(lat), np.radians(lon)
    return np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


def ingest_lat_lon(path) -> PointTable:
    """CSV with lat, lon columns first (then e.g. temperature [, noise])."""
    table = ingest_points(path, dims=2)
    lat, lon = table.points.T
    if np.any(np.abs(lat) > 90):
        raise InputError(f"{path}: latitude outside [-90, 90]")
    return PointTable(lat_lon_to_xyz(lat, lon), table.extra)


def hypersphere(n: int, d: int, rng) -> np.ndarray:
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def unit_cube(n: int, d: int, rng) -> np.ndarray:
    return rng.uniform(size=(n, d))


def gaussian_mixture(n: int, d: int, rng, components: int = 4, spread: float = 0.08) -> np.ndarray:
    centers = rng.uniform(size=(components, d))
    labels = rng.integers(components, size=n)
    return centers[labels] + spread * rng.normal(size=(n, d))


GENERATORS = {"hypersphere": hypersphere, "uniform": unit_cube, "mixture": gaussian_mixture}


def timed(fn, repetitions: int = 1, warmup: bool = True):
    """(result, median seconds) with one untimed warm-up call."""
    if warmup:
        fn()
    times, result = [], None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.median(times)


def loglog_slope(sizes, seconds) -> float:
    return float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])


# ---------------------------------------------------------------- commands


def _kernel(cfg: RunConfig, name: str | None = None):
    params = cfg.kernel_params if name in (None, cfg.kernel) else {}
    return make_kernel(name or cfg.kernel, **params)


def _points(cfg: RunConfig, rng) -> np.ndarray:
    if cfg.input:
        table = ingest_points(cfg.input)
        cfg.dim, cfg.n = table.d, table.n
        return table.points
    return GENERATORS[cfg.generator](cfg.n, cfg.dim, rng)


def _plan_and_time(cfg: RunConfig, X, kernel):
    t0 = time.perf_counter()
    pl = plan(X, kernel, cfg.p, cfg.theta, cfg.leaf_capacity, compress=cfg.compress, mode="streaming")
    t_tree = time.perf_counter() - t0
    t0 = time.perf_counter()
    if operator_entries(pl) <= EAGER_ENTRY_BUDGET:
        build_operators(pl)
    t_ops = time.perf_counter() - t0
    return pl, t_tree, t_ops


def cmd_mvm(cfg: RunConfig) -> ResultRecord:
    rng = np.random.default_rng(cfg.seed)
    X = _points(cfg, rng)
    kernel = _kernel(cfg)
    if cfg.y:
        y = ingest_points(cfg.y).points[:, 0]
        if len(y) != len(X):
            raise InputError(f"{cfg.y}: {len(y)} values for {len(X)} points")
    else:
        y = rng.uniform(size=len(X))
    pl, t_tree, t_ops = _plan_and_time(cfg, X, kernel)
    pl.threads = cfg.threads
    z, t_mul = timed(lambda: multiply(pl, y), 1, warmup=False)
    if not np.all(np.isfinite(z)):
        raise NumericalError("non-finite values in the product")
    row = base_row(
        cfg,
        method="fkt",
        N=len(X),
        expansion_terms=pl.expansion_terms,
        nodes=len(pl.tree.nodes),
        tree_seconds=t_tree,
        operator_seconds=t_ops,
        multiply_seconds=t_mul,
    )
    if cfg.dense:
        exact, t_dense = timed(lambda: dense_multiply(X, kernel, y), 1, warmup=False)
        row.update(dense_seconds=t_dense, rel_error=relative_error(z, exact), max_abs_error=float(np.abs(z - exact).max()))
    if cfg.output:
        np.savetxt(cfg.output, z, delimiter=",", header="z", comments="")
    return ResultRecord(asdict(cfg), [row], {"rel_error": row["rel_error"]})


def cmd_benchmark(cfg: RunConfig) -> ResultRecord:
    rng = np.random.default_rng(cfg.seed)
    kernel = _kernel(cfg)
    rows = []
    fkt_times, dense_times = [], []
    for n in cfg.sizes:
        X = GENERATORS[cfg.generator](n, cfg.dim, rng)
        y = rng.uniform(size=n)

        def run():
            pl = plan(X, kernel, cfg.p, cfg.theta, cfg.leaf_capacity, compress=cfg.compress, mode="streaming")
            return pl, multiply(pl, y)

        (pl, z), t_total = timed(run, cfg.repetitions)
        fkt_times.append((n, t_total))
        row = base_row(cfg, method="fkt", N=n, expansion_terms=pl.expansion_terms, nodes=len(pl.tree.nodes))
        row["multiply_seconds"] = t_total
        if cfg.dense and n <= cfg.dense_max:
            exact, t_dense = timed(lambda: dense_multiply(X, kernel, y), cfg.repetitions)
            dense_times.append((n, t_dense))
            row.update(dense_seconds=t_dense, rel_error=relative_error(z, exact))
        rows.append(row)
        log.info("N=%d fkt %.3fs", n, t_total)
    summary = {"fkt_slope": loglog_slope(*zip(*fkt_times)) if len(fkt_times) > 1 else None}
    if len(dense_times) > 1:
        summary["dense_slope"] = loglog_slope(*zip(*dense_times))
        faster = [n for (n, tf), (_, td) in zip(fkt_times, dense_times) if tf < td]
        summary["crossover_N"] = min(faster) if faster else None
    if cfg.output:
        write_rows(cfg.output, rows)
    return ResultRecord(asdict(cfg), rows, summary)


def expansion_errors(kernel, d: int, ps, pairs: int, rng, r_src: float = 1.0, r_tgt: float = 2.0) -> list:
    """Max |K - K_p| over random pairs with |r'| = r_src and |r| = r_tgt."""
    src = hypersphere(pairs, d, rng) * r_src
    tgt = hypersphere(pairs, d, rng) * r_tgt
    exact = eval_kernel(kernel, np.linalg.norm(src - tgt, axis=1))
    out = []
    for p in ps:
        approx = truncated_kernel(kernel, build_coefficient_table(d, p), p, src, tgt)
        out.append(float(np.abs(approx - exact).max()))
    return out


def cmd_error_study(cfg: RunConfig) -> ResultRecord:
    rng = np.random.default_rng(cfg.seed)
    rows = []
    if cfg.mode == "expansion":
        for name in cfg.kernels:
            kernel = _kernel(cfg, name)
            for d in cfg.dims:
                for p, err in zip(cfg.ps, expansion_errors(kernel, d, cfg.ps, cfg.pairs, rng)):
                    rows.append(base_row(cfg, method="expansion", kernel=name, d=d, p=p, N=cfg.pairs, max_abs_error=err))
    else:
        kernel = _kernel(cfg)
        X = GENERATORS[cfg.generator](cfg.n, cfg.dim, rng)
        y = rng.uniform(size=cfg.n)
        exact = dense_multiply(X, kernel, y)
        for theta in cfg.thetas:
            for p in [0] + [p for p in cfg.ps if p > 0]:
                for method in ("barnes-hut", "fkt") if p == 0 else ("fkt",):

                    def run(method=method, p=p, theta=theta):
                        if method == "barnes-hut":
                            pl = barnes_hut_plan(X, kernel, theta, cfg.leaf_capacity)
                        else:
                            pl = plan(X, kernel, p, theta, cfg.leaf_capacity, compress=cfg.compress)
                        return pl, multiply(pl, y)

                    (pl, z), seconds = timed(run, cfg.repetitions)
                    rows.append(
                        base_row(
                            cfg,
                            method=method,
                            N=cfg.n,
                            p=p,
                            theta=theta,
                            expansion_terms=pl.expansion_terms,
                            nodes=len(pl.tree.nodes),
                            multiply_seconds=seconds,
                            rel_error=relative_error(z, exact),
                            max_abs_error=float(np.abs(z - exact).max()),
                        )
                    )
    if cfg.output:
        write_rows(cfg.output, rows)
    return ResultRecord(asdict(cfg), rows)


def cmd_gp_predict(cfg: RunConfig) -> ResultRecord:
    if not cfg.input or not cfg.test:
        raise ConfigError("gp-predict needs --input (train) and --test")
    if cfg.lat_lon:
        test, train = ingest_lat_lon(cfg.test), ingest_lat_lon(cfg.input)
        test = PointTable(test.points, test.extra[:, :0])
    else:
        test = ingest_points(cfg.test)
        train = ingest_points(cfg.input, dims=test.d)
    if train.extra.shape[1] == 0:
        raise InputError(f"{cfg.input}: expected a target column after {test.d} coordinates")
    if train.extra.shape[1] > 2:
        raise InputError(f"{cfg.input}: dimension mismatch with {cfg.test} ({train.extra.shape[1] + test.d} columns)")
    y = train.extra[:, 0]
    noise = train.extra[:, 1] if train.extra.shape[1] == 2 else cfg.noise
    kernel = _kernel(cfg)
    cfg.dim, cfg.n = test.d, train.n
    t0 = time.perf_counter()
    pred = gp_posterior_mean(
        train.points,
        y,
        noise,
        kernel,
        test.points,
        p=cfg.p,
        theta=cfg.theta,
        leaf_capacity=cfg.leaf_capacity,
        compress=cfg.compress,
        threads=cfg.threads,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
    )
    seconds = time.perf_counter() - t0
    if not np.all(np.isfinite(pred.mean)):
        raise NumericalError("non-finite predictions")
    row = base_row(cfg, method="fkt-cg", N=train.n, multiply_seconds=seconds)
    summary = {
        "iterations": pred.diagnostics.iterations,
        "residual": pred.diagnostics.residual,
        "converged": pred.diagnostics.converged,
        "restarts": pred.diagnostics.restarts,
    }
    if cfg.dense:
        ref, _ = gp_posterior_dense(train.points, y, noise, kernel, test.points)
        row["rel_error"] = relative_error(pred.mean, ref)
        summary["rel_error"] = row["rel_error"]
    if cfg.output:
        np.savetxt(cfg.output, pred.mean, delimiter=",", header="mean", comments="")
    return ResultRecord(asdict(cfg), [row], summary)


COMMANDS = {"mvm": cmd_mvm, "benchmark": cmd_benchmark, "error-study": cmd_error_study, "gp-predict": cmd_gp_predict}


# ---------------------------------------------------------------- parsing


def _int_list(text: str) -> list:
    return [int(float(t)) for t in text.split(",") if t]


def _float_list(text: str) -> list:
    return [float(t) for t in text.split(",") if t]


def _str_list(text: str) -> list:
    return [t for t in text.split(",") if t]


def _kernel_param(text: str) -> tuple:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"kernel parameter {key!r} needs a number") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fkt", description="Fast kernel matrix-vector products and GP prediction")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS  # unset flags stay absent so the config file can fill them
    common.add_argument("--config", default=S, help="JSON file with RunConfig fields")
    common.add_argument("--kernel", default=S, choices=sorted(KERNELS))
    common.add_argument("--kernel-param", dest="kernel_params", action="append", type=_kernel_param, default=S)
    common.add_argument("--dim", type=int, default=S)
    common.add_argument("--n", type=int, default=S, help="synthetic point count")
    common.add_argument("--generator", default=S, choices=sorted(GENERATORS))
    common.add_argument("--p", type=int, default=S)
    common.add_argument("--theta", type=float, default=S)
    common.add_argument("--leaf-capacity", type=int, default=S)
    common.add_argument("--compress", default=S, choices=["auto", "on", "off"])
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--threads", type=int, default=S)
    common.add_argument("--dense", action="store_true", default=S, help="also run the dense oracle")
    common.add_argument("--input", default=S)
    common.add_argument("--output", default=S)
    common.add_argument("--record", default=S, help="write the JSON run record here")
    common.add_argument("--repetitions", type=int, default=S)

    mvm = sub.add_parser("mvm", parents=[common], help="one product z = K y")
    mvm.add_argument("--y", default=S, help="CSV with one value per point")
    bench = sub.add_parser("benchmark", parents=[common], help="time over an N sweep")
    bench.add_argument("--sizes", type=_int_list, default=S)
    bench.add_argument("--dense-max", type=int, default=S)
    err = sub.add_parser("error-study", parents=[common], help="expansion or product errors over p / theta")
    err.add_argument("--mode", choices=["expansion", "mvm"], default=S)
    err.add_argument("--ps", type=_int_list, default=S)
    err.add_argument("--thetas", type=_float_list, default=S)
    err.add_argument("--kernels", type=_str_list, default=S)
    err.add_argument("--dims", type=_int_list, default=S)
    err.add_argument("--pairs", type=int, default=S)
    gp = sub.add_parser("gp-predict", parents=[common], help="posterior mean at test points")
    gp.add_argument("--test", default=S)
    gp.add_argument("--noise", type=float, default=S, help="noise variance when the train file has no noise column")
    gp.add_argument("--tol", type=float, default=S)
    gp.add_argument("--max-iter", type=int, default=S)
    gp.add_argument("--lat-lon", action="store_true", default=S, help="first two columns are latitude, longitude in degrees")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = vars(args).copy()
    values.pop("verbose", None)
    command = values.pop("command")
    merged: dict = {}
    config_path = values.pop("config", None)
    if config_path:
        try:
            merged.update(json.loads(Path(config_path).read_text()))
        except FileNotFoundError:
            raise InputError(f"{config_path}: no such file") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{config_path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    if "kernel_params" in values:
        values["kernel_params"] = {**merged.get("kernel_params", {}), **dict(values["kernel_params"])}
    merged.update(values)
    merged.pop("command", None)
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(command=command, **merged).validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
        record = COMMANDS[cfg.command](cfg)
        if cfg.record:
            Path(cfg.record).write_text(record.to_json())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"command": cfg.command, "rows": len(record.rows), **_jsonable(record.summary)}))
    return EXIT_OK


def _jsonable(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


if __name__ == "__main__":
    sys.exit(main())
