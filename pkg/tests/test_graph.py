import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forest_smoothing import build_graph, degree_vector, laplacian_apply, read_graph, write_graph
from forest_smoothing.graph import Graph, GraphFormatError, quadratic_form


def test_single_edge():
    g = build_graph([(0, 1, 1.0)], 2)
    assert g.m == 1
    np.testing.assert_array_equal(degree_vector(g), [1.0, 1.0])


def test_isolated_node():
    g = build_graph([], 1)
    assert g.n == 1 and g.m == 0
    np.testing.assert_array_equal(degree_vector(g), [0.0])


@pytest.mark.parametrize(
    "edges, match",
    [
        ([(0, 1, 1.0), (1, 0, 1.0)], "duplicate"),
        ([(0, 0, 1.0)], "self-loop"),
        ([(0, 1, 0.0)], "positive"),
        ([(0, 1, -2.0)], "positive"),
        ([(0, 3, 1.0)], "out of range"),
    ],
)
def test_rejects_bad_edges(edges, match):
    with pytest.raises(ValueError, match=match):
        build_graph(edges, 2)


def test_degrees():
    np.testing.assert_array_equal(degree_vector(build_graph([(0, 1, 1), (1, 2, 1)])), [1, 2, 1])
    tri = build_graph([(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)])
    np.testing.assert_array_equal(degree_vector(tri), [1, 1, 1])


def test_neighbors_sorted():
    g = build_graph([(3, 0, 1.0), (0, 2, 2.0), (1, 0, 3.0)], 4)
    ids, ws = g.neighbors(0)
    np.testing.assert_array_equal(ids, [1, 2, 3])
    np.testing.assert_array_equal(ws, [3.0, 2.0, 1.0])


def test_laplacian_path():
    g = build_graph([(0, 1, 1.0)])
    np.testing.assert_array_equal(laplacian_apply(g, [1.0, 0.0]), [1.0, -1.0])


def test_laplacian_length_mismatch():
    with pytest.raises(ValueError):
        laplacian_apply(build_graph([(0, 1, 1.0)]), [1.0, 2.0, 3.0])


def _random_graph(rng, n, p=0.5):
    edges = [(i, j, float(rng.uniform(0.1, 3))) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    return build_graph(edges, n), edges


def test_laplacian_matches_dense():
    rng = np.random.default_rng(4)
    g, edges = _random_graph(rng, 5, p=0.7)
    W = np.zeros((5, 5))
    for i, j, w in edges:
        W[i, j] = W[j, i] = w
    L = np.diag(W.sum(axis=1)) - W
    z = rng.standard_normal(5)
    np.testing.assert_allclose(laplacian_apply(g, z), L @ z, rtol=1e-13, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_constant_in_nullspace_and_psd(n, seed):
    rng = np.random.default_rng(seed)
    g, _ = _random_graph(rng, n)
    c = rng.uniform(-5, 5)
    out = laplacian_apply(g, np.full(n, c))
    assert np.max(np.abs(out)) <= 1e-12 * max(1.0, g.degrees.max()) * max(1.0, abs(c))
    z = rng.standard_normal(n)
    qf = quadratic_form(g, z)
    assert qf >= 0
    np.testing.assert_allclose(z @ laplacian_apply(g, z), qf, rtol=1e-10, atol=1e-12)


def test_symmetry():
    rng = np.random.default_rng(1)
    g, _ = _random_graph(rng, 9)
    W = g.adjacency.toarray()
    np.testing.assert_array_equal(W, W.T)
    assert g.m == np.count_nonzero(np.triu(W))


def test_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    g, _ = _random_graph(rng, 8)
    p = tmp_path / "g.txt"
    write_graph(g, p)
    h = read_graph(p)
    assert h == g
    write_graph(h, tmp_path / "h.txt")
    assert (tmp_path / "h.txt").read_bytes() == p.read_bytes()


@pytest.mark.parametrize(
    "text, line",
    [
        ("3 2\n0 1 1.0\n1 x 1.0\n", 3),
        ("3 1\n1 0 1.0\n", 2),
        ("3 1\n0 1 -1\n", 2),
        ("3\n", 1),
        ("3 2\n0 1 1.0\n", 3),
        ("2 1\n0 1 1.0 5\n", 2),
    ],
)
def test_reader_reports_line(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(GraphFormatError, match=f"line {line}"):
        read_graph(p)


def test_reader_rejects_duplicates(tmp_path):
    p = tmp_path / "dup.txt"
    p.write_text("3 2\n0 1 1.0\n0 1 2.0\n")
    with pytest.raises(GraphFormatError, match="duplicate"):
        read_graph(p)


def test_immutable():
    g = build_graph([(0, 1, 1.0)])
    with pytest.raises(ValueError):
        g.weights[0] = 3.0


def test_from_arrays_matches_build_graph():
    edges = [(2, 0, 1.5), (1, 2, 0.5), (0, 3, 2.0)]
    a = build_graph(edges, 4)
    b = Graph.from_arrays(4, [e[0] for e in edges], [e[1] for e in edges], [e[2] for e in edges])
    assert a == b
