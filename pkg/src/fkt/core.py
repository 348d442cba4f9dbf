"""Fast kernel matrix-vector products.

``z = K y`` is split into dense near-field blocks (one per leaf) and low-rank
far-field blocks ``m2t @ (s2m @ y[node])`` (one per node with a nonempty far
set).  A plan holds the tree and, in eager mode, every operator, so repeated
multiplies only pay for the matrix products.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .expansion import (
    MAX_ORDER,
    NotRecurrenceKernel,
    OrderTooLarge,
    build_coefficient_table,
    build_m2t,
    build_s2m,
    expansion_layout,
    radial_compression,
)
from .kernels import IsotropicKernel, eval_kernel
from .tree import DEFAULT_LEAF_CAPACITY, DEFAULT_THETA, build_tree, compute_interaction_sets

log = logging.getLogger(__name__)

# eager plans hold at most this many float64 entries before switching to streaming
EAGER_ENTRY_BUDGET = 60_000_000


class DimensionMismatch(ValueError):
    pass


class ZeroReference(ValueError):
    pass


@dataclass
class FarOperator:
    node: int
    sources: np.ndarray
    targets: np.ndarray
    s2m: np.ndarray | None = None
    m2t: np.ndarray | None = None


@dataclass
class NearBlock:
    sources: np.ndarray
    targets: np.ndarray
    matrix: np.ndarray | None = None


@dataclass
class FktPlan:
    tree: object
    kernel: IsotropicKernel
    p: int
    table: object
    layout: object
    compression: list | None
    far_ops: list = field(default_factory=list)
    near_blocks: list = field(default_factory=list)
    mode: str = "eager"
    threads: int = 1

    @property
    def n(self) -> int:
        return len(self.tree.points)

    @property
    def d(self) -> int:
        return self.tree.points.shape[1]

    @property
    def expansion_terms(self) -> int:
        return self.layout.size

    def stats(self) -> dict:
        return {
            "N": self.n,
            "d": self.d,
            "p": self.p,
            "nodes": len(self.tree.nodes),
            "leaves": len(self.near_blocks),
            "far_blocks": len(self.far_ops),
            "expansion_terms": self.expansion_terms,
            "far_entries": sum(len(op.targets) for op in self.far_ops),
            "near_entries": sum(len(b.targets) * len(b.sources) for b in self.near_blocks),
            "mode": self.mode,
        }


def _want_compression(kernel: IsotropicKernel, compress) -> bool:
    if compress in ("auto", None):
        return kernel.recurrence is not None
    if compress in ("on", True):
        if kernel.recurrence is None:
            raise NotRecurrenceKernel(f"{kernel.name} has no registered derivative recurrence")
        return True
    if compress in ("off", False):
        return False
    raise ValueError(f"compress must be auto, on or off, not {compress!r}")


def plan(
    points,
    kernel: IsotropicKernel,
    p: int = 4,
    theta: float = DEFAULT_THETA,
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY,
    *,
    compress="auto",
    center_of_mass: bool = False,
    mode: str = "auto",
    threads: int = 1,
) -> FktPlan:
    """Build the tree, interaction sets and (in eager mode) all block operators.

    ``center_of_mass=True`` with ``p=0`` gives the classic Barnes-Hut scheme.
    ``mode`` is ``"eager"``, ``"streaming"`` (operators rebuilt per multiply),
    or ``"auto"`` (eager unless the operators would exceed the memory budget).
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise DimensionMismatch("points must be an (N, d) array")
    if points.shape[1] < 2:
        raise DimensionMismatch("the expansion needs d >= 2")
    if not 0 <= p <= MAX_ORDER:
        raise OrderTooLarge(f"p must lie in [0, {MAX_ORDER}]")
    if center_of_mass and p != 0:
        raise ValueError("center-of-mass expansion centers are only valid for p = 0")
    if mode not in ("auto", "eager", "streaming"):
        raise ValueError("mode must be auto, eager or streaming")
    tree = build_tree(points, leaf_capacity, center="mass" if center_of_mass else "box")
    compute_interaction_sets(tree, theta)
    table = build_coefficient_table(points.shape[1], p)
    compression = radial_compression(kernel, table, p) if _want_compression(kernel, compress) else None
    layout = expansion_layout(points.shape[1], p, compression)
    result = FktPlan(tree, kernel, p, table, layout, compression, threads=max(1, int(threads)))
    for node in tree.nodes:
        if len(node.far):
            result.far_ops.append(FarOperator(node.index, tree.indices(node), node.far))
        if node.is_leaf and len(node.near):
            result.near_blocks.append(NearBlock(tree.indices(node), node.near))
    result.mode = "streaming"
    if mode == "eager" or (mode == "auto" and operator_entries(result) <= EAGER_ENTRY_BUDGET):
        build_operators(result)
    log.debug("plan %s", result.stats())
    return result


def operator_entries(plan_: FktPlan) -> int:
    """float64 entries an eager plan stores (s2m + m2t + dense blocks)."""
    far = sum((len(op.sources) + len(op.targets)) * plan_.layout.size for op in plan_.far_ops)
    return far + sum(len(b.targets) * len(b.sources) for b in plan_.near_blocks)


def build_operators(plan_: FktPlan) -> FktPlan:
    """Precompute every far operator pair and near block (eager mode)."""
    for op in plan_.far_ops:
        op.s2m, op.m2t = _far_matrices(plan_, op)
    for block in plan_.near_blocks:
        block.matrix = _near_matrix(plan_, block)
    plan_.mode = "eager"
    return plan_


def _far_matrices(plan_: FktPlan, op: FarOperator):
    X = plan_.tree.points
    c = plan_.tree.nodes[op.node].center
    s2m = build_s2m(X[op.sources] - c, plan_.kernel, plan_.table, plan_.p, layout=plan_.layout)
    m2t = build_m2t(X[op.targets] - c, plan_.kernel, plan_.table, plan_.p, layout=plan_.layout)
    return s2m, m2t


def _near_matrix(plan_: FktPlan, block: NearBlock) -> np.ndarray:
    X = plan_.tree.points
    return eval_kernel(plan_.kernel, cdist(X[block.targets], X[block.sources]))


def multiply(plan_: FktPlan, y) -> np.ndarray:
    """Approximate ``K @ y`` (``y`` of shape (N,) or (N, k))."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != plan_.n:
        raise DimensionMismatch(f"expected {plan_.n} rows, got {y.shape[0]}")
    z = np.zeros(y.shape)

    def far(op):
        if op.s2m is None:
            s2m, m2t = _far_matrices(plan_, op)
        else:
            s2m, m2t = op.s2m, op.m2t
        return op.targets, m2t @ (s2m @ y[op.sources])

    def near(block):
        mat = block.matrix if block.matrix is not None else _near_matrix(plan_, block)
        return block.targets, mat @ y[block.sources]

    tasks = [(far, op) for op in plan_.far_ops] + [(near, b) for b in plan_.near_blocks]
    if plan_.threads > 1:
        with ThreadPoolExecutor(plan_.threads) as pool:
            results = pool.map(lambda t: t[0](t[1]), tasks)
            # fixed reduction order keeps the sum deterministic
            for targets, values in results:
                z[targets] += values
    else:
        for fn, item in tasks:
            targets, values = fn(item)
            z[targets] += values
    return z


def dense_multiply(points, kernel: IsotropicKernel, y, block: int = 2048) -> np.ndarray:
    """Exact O(N^2) product, assembled in row blocks."""
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != len(points):
        raise DimensionMismatch(f"expected {len(points)} rows, got {y.shape[0]}")
    z = np.empty(y.shape)
    for start in range(0, len(points), block):
        rows = points[start : start + block]
        z[start : start + block] = eval_kernel(kernel, cdist(rows, points)) @ y
    return z


def dense_matrix(points, kernel: IsotropicKernel, other=None) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    other = points if other is None else np.asarray(other, dtype=float)
    return eval_kernel(kernel, cdist(points, other))


def barnes_hut_plan(points, kernel: IsotropicKernel, theta=DEFAULT_THETA, leaf_capacity=DEFAULT_LEAF_CAPACITY, **kw):
    return plan(points, kernel, 0, theta, leaf_capacity, compress="off", center_of_mass=True, **kw)


def barnes_hut_multiply(plan_: FktPlan, y) -> np.ndarray:
    """Far blocks as K(|r_i - r_cm|) * sum(y_b); needs a center-of-mass p = 0 plan."""
    if plan_.p != 0:
        raise ValueError("Barnes-Hut needs a p = 0 plan")
    return multiply(plan_, y)


def relative_error(z_approx, z_exact) -> float:
    z_approx = np.asarray(z_approx, dtype=float)
    z_exact = np.asarray(z_exact, dtype=float)
    if z_approx.shape != z_exact.shape:
        raise DimensionMismatch("vectors differ in shape")
    ref = np.linalg.norm(z_exact)
    if ref == 0:
        raise ZeroReference("reference vector is zero")
    return float(np.linalg.norm(z_approx - z_exact) / ref)
