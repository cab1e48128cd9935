import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forest_smoothing import (
    EstimateAccumulator,
    RngStream,
    build_graph,
    dense_kernel,
    enumerate_forests,
    estimate_bar,
    estimate_tilde,
    merge,
    sample_forest,
    sample_parents,
    smooth,
)
from forest_smoothing.estimators import averaging_matrix
from forest_smoothing.oracle import variance_functionals, variance_weights
from forest_smoothing.sampler import RootedForest

from conftest import NONUNIFORM_Q, SMALL_GRAPHS, TEN_NODE_SIGNAL, path, ten_node_graph


def _forests(g, q, count, seed):
    parents, _ = sample_parents(g, q, count, seed)
    return [RootedForest.from_parents(p) for p in parents]


def test_constant_signal_exact_per_forest(small_graph):
    y = np.full(small_graph.n, 2.75)
    for f in _forests(small_graph, 0.4, 50, 1):
        np.testing.assert_array_equal(estimate_tilde(f, y), y)
        np.testing.assert_array_equal(estimate_bar(f, y), y)


def test_all_roots_gives_signal():
    f = RootedForest.from_parents(np.full(4, -1))
    y = np.array([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_array_equal(estimate_tilde(f, y), y)
    np.testing.assert_array_equal(estimate_bar(f, y), y)


def test_single_tree_gives_mean():
    f = RootedForest.from_parents(np.array([-1, 0, 1, 1]))
    y = np.array([1.0, 2.0, 3.0, 6.0])
    np.testing.assert_allclose(estimate_bar(f, y), 3.0)
    np.testing.assert_array_equal(estimate_tilde(f, y), 1.0)


def test_length_mismatch():
    f = RootedForest.from_parents(np.array([-1, 0]))
    with pytest.raises(ValueError):
        estimate_bar(f, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        estimate_tilde(f, [1.0])


def test_two_node_expectation_by_enumeration():
    # per-forest bar values are (1, 0) when both are roots and (1/2, 1/2) otherwise
    y = np.array([1.0, 0.0])
    fs = enumerate_forests(path(2), 1.0)
    e_bar = sum(p * estimate_bar(f, y) for f, p in fs)
    e_tilde = sum(p * estimate_tilde(f, y) for f, p in fs)
    np.testing.assert_allclose(e_bar, [2 / 3, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(e_tilde, [2 / 3, 1 / 3], atol=1e-15)


@pytest.mark.parametrize("q", [0.1, 1.0, "diag"])
def test_exact_unbiasedness_and_variance_by_enumeration(small_graph, q):
    """Expectations over the full forest distribution equal the closed forms."""
    g = small_graph
    q = NONUNIFORM_Q[g.n] if q == "diag" else q
    y = np.random.default_rng(g.n).standard_normal(g.n)
    K = dense_kernel(g, q).K
    fs = enumerate_forests(g, q)
    w = variance_weights(q, g.n)
    ES = sum(p * averaging_matrix(f, q) for f, p in fs)
    np.testing.assert_allclose(ES, K, atol=1e-10)

    def bar(f, y):
        return estimate_bar(f, y, q)

    for est, target in ((estimate_tilde, 0), (bar, 1)):
        mean = sum(p * est(f, y) for f, p in fs)
        np.testing.assert_allclose(mean, K @ y, atol=1e-10)
        var = sum(p * np.sum(w * (est(f, y) - K @ y) ** 2) for f, p in fs)
        assert var == pytest.approx(variance_functionals(g, q, y)[target], rel=1e-8, abs=1e-12)


def test_plain_tree_mean_is_biased_for_nonuniform_q():
    """Roots are drawn proportionally to q within a tree, so the plain mean misses K y."""
    g = SMALL_GRAPHS["weighted6"]
    q = NONUNIFORM_Q[6]
    K = dense_kernel(g, q).K
    fs = enumerate_forests(g, q)
    plain = sum(p * averaging_matrix(f) for f, p in fs)
    weighted = sum(p * averaging_matrix(f, q) for f, p in fs)
    assert np.max(np.abs(plain - K)) > 1e-3
    np.testing.assert_allclose(weighted, K, atol=1e-12)


def test_weighted_averaging_matrix_is_q_self_adjoint_projection():
    g = SMALL_GRAPHS["weighted6"]
    q = NONUNIFORM_Q[6]
    for f in _forests(g, q, 20, 5):
        S = averaging_matrix(f, q)
        np.testing.assert_allclose(S @ S, S, atol=1e-14)
        np.testing.assert_allclose(q[:, None] * S, (q[:, None] * S).T, atol=1e-14)
        np.testing.assert_allclose(S.sum(axis=1), 1.0, atol=1e-14)


def test_bar_is_averaging_matrix_and_idempotent(small_graph):
    y = np.random.default_rng(0).standard_normal(small_graph.n)
    for f in _forests(small_graph, 0.5, 30, 4):
        S = averaging_matrix(f)
        np.testing.assert_allclose(estimate_bar(f, y), S @ y, atol=1e-14)
        np.testing.assert_allclose(estimate_bar(f, estimate_bar(f, y)), estimate_bar(f, y), atol=1e-14)
        np.testing.assert_allclose(S.T @ S, S, atol=1e-14)


def test_smooth_matches_per_forest_functions():
    g = ten_node_graph()
    y = TEN_NODE_SIGNAL
    fs = [sample_forest(g, 0.5, RngStream(7, s)) for s in range(50)]
    for name, fn in (("tilde", estimate_tilde), ("bar", estimate_bar)):
        res = smooth(g, 0.5, y, 50, name, seed=7)
        vals = np.array([fn(f, y) for f in fs])
        np.testing.assert_allclose(res.mean, vals.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(res.variance, vals.var(axis=0, ddof=1), atol=1e-12)
        assert res.diagnostics["walk_steps"] == sum(f.walk_steps for f in fs)


def test_smooth_single_node():
    res = smooth(build_graph([], 1), 1.0, [3.0], 1, "bar")
    assert res.mean.tolist() == [3.0] and res.variance.tolist() == [0.0]


@pytest.mark.parametrize("estimator", ["tilde", "bar"])
def test_smooth_constant(estimator):
    res = smooth(ten_node_graph(), 0.2, np.full(10, -1.5), 300, estimator, seed=3)
    np.testing.assert_array_equal(res.mean, -1.5)
    np.testing.assert_array_equal(res.variance, 0.0)


def test_smooth_two_node_path_bar():
    N = 10**6
    res = smooth(path(2), 1.0, [1.0, 0.0], N, "bar", seed=12)
    se = np.sqrt(res.variance / N)
    assert np.all(np.abs(res.mean - [2 / 3, 1 / 3]) < 3 * se)
    assert res.variance.sum() == pytest.approx(1 / 9, rel=0.05)


def test_smooth_columns_share_forests():
    g = ten_node_graph()
    Y = np.column_stack([TEN_NODE_SIGNAL, -TEN_NODE_SIGNAL, np.ones(10)])
    res = smooth(g, 0.8, Y, 500, "bar", seed=2)
    single = smooth(g, 0.8, TEN_NODE_SIGNAL, 500, "bar", seed=2)
    np.testing.assert_allclose(res.mean[:, 0], single.mean, atol=1e-14)
    np.testing.assert_allclose(res.mean[:, 1], -single.mean, atol=1e-14)
    np.testing.assert_array_equal(res.mean[:, 2], 1.0)


def test_smooth_independent_of_threads():
    g = ten_node_graph()
    a = smooth(g, 0.5, TEN_NODE_SIGNAL, 5000, "bar", seed=9, threads=1)
    b = smooth(g, 0.5, TEN_NODE_SIGNAL, 5000, "bar", seed=9, threads=4)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.variance, b.variance)


def test_smooth_argument_errors():
    g = path(3)
    with pytest.raises(ValueError):
        smooth(g, 1.0, [1.0, 2.0], 10)
    with pytest.raises(ValueError):
        smooth(g, 1.0, [1.0, 2.0, 3.0], 0)
    with pytest.raises(ValueError):
        smooth(g, 1.0, [1.0, 2.0, 3.0], 10, "median")


def test_merge_identity_and_pairs():
    a = EstimateAccumulator.empty(3)
    u, v = np.array([1.0, 2.0, 3.0]), np.array([3.0, 2.0, -1.0])
    b = EstimateAccumulator.empty(3)
    b.add(u)
    m = merge(a, b)
    assert m.count == 1 and np.array_equal(m.mean, u)
    c = EstimateAccumulator.empty(3)
    c.add(v)
    np.testing.assert_allclose(merge(b, c).mean, (u + v) / 2)
    with pytest.raises(ValueError):
        merge(b, EstimateAccumulator.empty(4))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 40), min_size=1, max_size=6), st.integers(0, 2**32 - 1))
def test_merge_equals_concatenated_stream(sizes, seed):
    rng = np.random.default_rng(seed)
    chunks = [rng.normal(3.0, 2.0, size=(s, 4)) for s in sizes]
    whole = EstimateAccumulator.empty(4)
    for row in np.concatenate(chunks):
        whole.add(row)
    parts = []
    for ch in chunks:
        acc = EstimateAccumulator.empty(4)
        for row in ch:
            acc.add(row)
        parts.append(acc)
    forward = parts[0]
    for p in parts[1:]:
        forward = merge(forward, p)
    backward = parts[-1]
    for p in reversed(parts[:-1]):
        backward = merge(p, backward)
    for m in (forward, backward):
        assert m.count == whole.count
        np.testing.assert_allclose(m.mean, whole.mean, rtol=1e-10)
        np.testing.assert_allclose(m.m2, whole.m2, rtol=1e-10, atol=1e-10)
    data = np.concatenate(chunks)
    if data.shape[0] > 1:
        np.testing.assert_allclose(forward.variance, data.var(axis=0, ddof=1), rtol=1e-10)


@pytest.mark.parametrize("q", [0.4, "diag"])
def test_unbiased_within_four_standard_errors(q):
    g = ten_node_graph()
    q = np.linspace(0.2, 2.0, 10) if q == "diag" else q
    target = dense_kernel(g, q).K @ TEN_NODE_SIGNAL
    N = 10**5
    for name in ("tilde", "bar"):
        res = smooth(g, q, TEN_NODE_SIGNAL, N, name, seed=21)
        se = np.sqrt(res.variance / N)
        assert np.all(np.abs(res.mean - target) <= 4 * se), name


def test_empirical_mean_of_averaging_matrix():
    g = SMALL_GRAPHS["weighted6"]
    K = dense_kernel(g, 0.6).K
    N = 100_000
    # columns of S are the bar estimates of the unit vectors
    res = smooth(g, 0.6, np.eye(6), N, "bar", seed=31)
    se = np.sqrt(res.variance / N)
    assert np.all(np.abs(res.mean - K) <= 3 * se + 1e-12)
