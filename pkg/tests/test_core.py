import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fkt.core import (
    DimensionMismatch,
    ZeroReference,
    barnes_hut_multiply,
    barnes_hut_plan,
    dense_matrix,
    dense_multiply,
    multiply,
    plan,
    relative_error,
)
from fkt.expansion import OrderTooLarge, build_coefficient_table, truncated_kernel
from fkt.kernels import make_kernel

from .conftest import sphere_points


def test_single_leaf_is_exact(rng):
    pts = rng.uniform(size=(300, 3))
    k = make_kernel("cauchy")
    y = rng.uniform(size=300)
    fast = multiply(plan(pts, k, 4, leaf_capacity=512), y)
    assert np.array_equal(fast, dense_matrix(pts, k) @ y)


def test_zero_vector_and_single_point(rng):
    pts = rng.uniform(size=(2000, 3))
    pl = plan(pts, make_kernel("exponential"), 4, leaf_capacity=64)
    assert np.array_equal(multiply(pl, np.zeros(2000)), np.zeros(2000))
    one = plan(np.array([[0.3, 0.4]]), make_kernel("exponential"), 4)
    assert multiply(one, np.array([2.0])) == pytest.approx([2.0])


def test_two_point_example():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    z = multiply(plan(pts, make_kernel("exponential"), 4, leaf_capacity=1), np.array([1.0, 0.0]))
    # every leaf holds one point, so the far products are exact to truncation order
    assert z[0] == pytest.approx(1.0)
    assert z[1] == pytest.approx(np.exp(-5.0), rel=1e-3)


def test_matches_explicit_sum_of_truncated_blocks(rng):
    # oracle: near pairs exact, far pairs by the truncated expansion about the node center
    pts = rng.uniform(size=(400, 3))
    k = make_kernel("matern32")
    p = 3
    pl = plan(pts, k, p, 0.6, 40, compress="off")
    table = build_coefficient_table(3, p)
    M = np.zeros((400, 400))
    for node in pl.tree.nodes:
        src = pl.tree.indices(node)
        for t in node.far:
            M[t, src] = truncated_kernel(k, table, p, pts[src] - node.center, pts[t] - node.center)
        if node.is_leaf:
            M[np.ix_(node.near, src)] = dense_matrix(pts[node.near], k, pts[src])
    y = rng.uniform(size=400)
    assert np.allclose(multiply(pl, y), M @ y, rtol=1e-12, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(600, 2))
    pl = plan(pts, make_kernel("gaussian", lengthscale=0.5), 5, 0.7, 50)
    y1, y2 = rng.uniform(size=600), rng.uniform(size=600)
    lhs = multiply(pl, a * y1 + b * y2)
    rhs = a * multiply(pl, y1) + b * multiply(pl, y2)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + np.abs(rhs).max()))


def test_matrix_valued_right_hand_side(rng):
    pts = rng.uniform(size=(500, 3))
    pl = plan(pts, make_kernel("exponential"), 4, 0.6, 50)
    Y = rng.uniform(size=(500, 3))
    Z = multiply(pl, Y)
    for j in range(3):
        assert np.allclose(Z[:, j], multiply(pl, Y[:, j]), atol=1e-13)


def test_approximate_symmetry(rng):
    pts = rng.uniform(size=(800, 3))
    pl = plan(pts, make_kernel("exponential"), 6, 0.5, 64)
    u, v = rng.uniform(size=800), rng.uniform(size=800)
    assert u @ multiply(pl, v) == pytest.approx(v @ multiply(pl, u), rel=1e-5)


def test_streaming_and_threads_agree_with_eager(rng):
    pts = sphere_points(rng, 3000, 3)
    k = make_kernel("cauchy")
    y = rng.uniform(size=3000)
    eager = multiply(plan(pts, k, 4, leaf_capacity=128, mode="eager"), y)
    stream = plan(pts, k, 4, leaf_capacity=128, mode="streaming")
    assert stream.far_ops[0].s2m is None
    assert np.allclose(multiply(stream, y), eager, rtol=1e-14, atol=0)
    threaded = plan(pts, k, 4, leaf_capacity=128, threads=4)
    a, b = multiply(threaded, y), multiply(threaded, y)
    assert np.array_equal(a, b) and np.array_equal(a, eager)


def test_error_shrinks_with_order(rng):
    pts = sphere_points(rng, 4000, 3)
    k = make_kernel("exponential")
    y = rng.uniform(size=4000)
    exact = dense_multiply(pts, k, y)
    errs = [relative_error(multiply(plan(pts, k, p, 0.75, 256), y), exact) for p in (0, 2, 4, 6)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_node_count(rng):
    pts = sphere_points(rng, 10_000, 3)
    pl = plan(pts, make_kernel("exponential"), 2, mode="streaming")
    leaves = len(pl.tree.leaves)
    assert np.ceil(10_000 / 512) <= leaves <= 2 * np.ceil(10_000 / 512)
    assert len(pl.tree.nodes) == 2 * leaves - 1


def test_barnes_hut(rng):
    one = barnes_hut_plan(np.array([[1.0, 2.0, 3.0]]), make_kernel("exponential"))
    assert barnes_hut_multiply(one, np.array([3.0])) == pytest.approx([3.0])
    pts = rng.uniform(size=(3000, 2))
    k = make_kernel("cauchy")
    y = rng.uniform(size=3000)
    exact = dense_multiply(pts, k, y)
    bh = relative_error(barnes_hut_multiply(barnes_hut_plan(pts, k, 0.5, 64), y), exact)
    fkt = relative_error(multiply(plan(pts, k, 2, 0.5, 64), y), exact)
    assert fkt < bh
    with pytest.raises(ValueError):
        barnes_hut_multiply(plan(pts, k, 2, 0.5, 64), y)


def test_relative_error():
    assert relative_error([1.0, 1.0], [1.0, 1.0]) == 0
    assert relative_error([1.1, 0.0], [1.0, 0.0]) == pytest.approx(0.1)
    with pytest.raises(ZeroReference):
        relative_error([1.0], [0.0])
    with pytest.raises(DimensionMismatch):
        relative_error([1.0], [1.0, 2.0])


def test_argument_validation(rng):
    pts = rng.uniform(size=(20, 3))
    k = make_kernel("exponential")
    with pytest.raises(DimensionMismatch):
        multiply(plan(pts, k), np.ones(19))
    with pytest.raises(DimensionMismatch):
        plan(rng.uniform(size=(20, 1)), k)
    with pytest.raises(OrderTooLarge):
        plan(pts, k, 21)
    with pytest.raises(ValueError):
        plan(pts, k, 2, center_of_mass=True)
    with pytest.raises(DimensionMismatch):
        dense_multiply(pts, k, np.ones(3))
