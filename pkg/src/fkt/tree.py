"""Binary space partitioning with far/near interaction sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_THETA = 0.75
DEFAULT_LEAF_CAPACITY = 512


@dataclass
class PartitionNode:
    index: int
    lo: np.ndarray
    hi: np.ndarray
    start: int
    stop: int
    depth: int
    center: np.ndarray = None
    radius: float = 0.0
    children: tuple | None = None
    far: np.ndarray | None = None
    near: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def count(self) -> int:
        return self.stop - self.start

    @property
    def aspect_ratio(self) -> float:
        sides = self.hi - self.lo
        if sides.max() == 0:
            return 1.0
        return float(sides.max() / sides.min())


@dataclass
class PartitionTree:
    points: np.ndarray
    perm: np.ndarray
    nodes: list = field(default_factory=list)
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY
    theta: float | None = None

    @property
    def root(self) -> PartitionNode:
        return self.nodes[0]

    @property
    def leaves(self) -> list:
        return [n for n in self.nodes if n.is_leaf]

    def indices(self, node: PartitionNode) -> np.ndarray:
        return self.perm[node.start : node.stop]


def _regular_box(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tight bounding box, short sides widened symmetrically to half the longest."""
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    sides = hi - lo
    floor = sides.max() / 2
    grow = np.maximum(floor - sides, 0.0) / 2
    return lo - grow, hi + grow


def build_tree(points, leaf_capacity: int = DEFAULT_LEAF_CAPACITY, center: str = "box") -> PartitionTree:
    """Split the longest side at the median, clamped so children keep aspect <= 2.

    ``center="mass"`` places node centers at the centroid of the owned points
    (the Barnes-Hut convention) instead of the box center.
    """
    points = np.ascontiguousarray(points, dtype=float)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a nonempty (N, d) array")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    if leaf_capacity < 1:
        raise ValueError("leaf_capacity must be >= 1")
    if center not in ("box", "mass"):
        raise ValueError("center must be 'box' or 'mass'")
    perm = np.arange(len(points))
    tree = PartitionTree(points, perm, [], leaf_capacity)
    stack = [(0, len(points), 0, None, 0)]
    while stack:
        start, stop, depth, parent, slot = stack.pop()
        own = perm[start:stop]
        pts = points[own]
        lo, hi = _regular_box(pts)
        node = PartitionNode(len(tree.nodes), lo, hi, start, stop, depth)
        tree.nodes.append(node)
        if parent is not None:
            kids = list(tree.nodes[parent].children)
            kids[slot] = node.index
            tree.nodes[parent].children = tuple(kids)
        node.center = pts.mean(axis=0) if center == "mass" else (lo + hi) / 2
        node.radius = float(np.sqrt(((pts - node.center) ** 2).sum(axis=1).max()))
        if len(own) <= leaf_capacity or np.ptp(pts, axis=0).max() == 0:
            continue
        sides = hi - lo
        axis = int(np.argmax(sides))
        others = np.delete(sides, axis).max()
        coord = pts[:, axis]
        split = float(np.median(coord))
        split = min(max(split, lo[axis] + others / 2), hi[axis] - others / 2)
        lower = coord <= split
        if lower.all() or not lower.any():
            # guard against a degenerate clamp from rounding
            split = (coord.min() + coord.max()) / 2
            lower = coord <= split
        perm[start:stop] = np.concatenate([own[lower], own[~lower]])
        mid = start + int(lower.sum())
        node.children = (-1, -1)
        # lower child popped first, so node numbering is preorder
        stack.append((mid, stop, depth + 1, node.index, 1))
        stack.append((start, mid, depth + 1, node.index, 0))
    return tree


def compute_interaction_sets(tree: PartitionTree, theta: float = DEFAULT_THETA) -> PartitionTree:
    """Top-down sweep assigning far sets to every node and near sets to leaves.

    A candidate point r is far from node b when radius_b / |r - c_b| < theta.
    Children inherit the candidates their parent did not claim, so each
    (point, leaf) interaction is covered exactly once along the root-to-leaf path.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    X = tree.points
    pending = {0: np.arange(len(X))}
    for node in tree.nodes:  # preorder: parents before children
        cand = pending.pop(node.index)
        dist = np.sqrt(((X[cand] - node.center) ** 2).sum(axis=1))
        far = node.radius < theta * dist
        node.far = cand[far]
        rest = cand[~far]
        if node.is_leaf:
            node.near = rest
        else:
            for child in node.children:
                pending[child] = rest
    tree.theta = theta
    return tree
