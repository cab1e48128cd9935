"""Immutable weighted undirected graphs stored as sorted CSR arrays."""

from __future__ import annotations

import os
from typing import Iterable

import numba as nb
import numpy as np
from scipy import sparse


class GraphFormatError(ValueError):
    """Malformed graph text file."""


@nb.njit(cache=True)
def _row_cumsum(indptr, weights):
    cum = np.empty_like(weights)
    deg = np.zeros(indptr.shape[0] - 1)
    for i in range(indptr.shape[0] - 1):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += weights[k]
            cum[k] = acc
        deg[i] = acc
    return cum, deg


class Graph:
    """Sparse undirected graph with positive edge weights.

    Neighbour lists are stored in CSR form, sorted by neighbour id.  Each
    undirected edge appears twice (once per endpoint) with identical weight.
    Instances are read-only; use :func:`build_graph` or
    :meth:`Graph.from_arrays` to create them.

    Attributes
    ----------
    n : int
        Number of nodes, ids ``0..n-1``.
    m : int
        Number of undirected edges.
    indptr, indices, weights : ndarray
        CSR adjacency.
    cumweights : ndarray
        Per-row running sums of ``weights`` (used for neighbour sampling).
    degrees : ndarray
        Weighted degrees; ``degrees[i]`` is the last entry of row ``i`` of
        ``cumweights``.
    """

    def __init__(self, n, indptr, indices, weights):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.m = self.indices.shape[0] // 2
        self.cumweights, self.degrees = _row_cumsum(self.indptr, self.weights)
        for a in (self.indptr, self.indices, self.weights, self.cumweights, self.degrees):
            a.flags.writeable = False
        self._adjacency = None

    @classmethod
    def from_arrays(cls, n: int, i, j, w=None) -> Graph:
        """Build from parallel edge arrays, one entry per undirected edge.

        Raises ``ValueError`` for self-loops, nonpositive or non-finite
        weights, out-of-range ids and duplicated undirected edges.
        """
        n = int(n)
        if n < 1:
            raise ValueError("graph needs at least one node")
        i = np.asarray(i, dtype=np.int64).ravel()
        j = np.asarray(j, dtype=np.int64).ravel()
        w = np.ones(i.shape[0]) if w is None else np.asarray(w, dtype=np.float64).ravel()
        if not (i.shape == j.shape == w.shape):
            raise ValueError("edge arrays must have equal lengths")
        if i.size:
            if i.min() < 0 or j.min() < 0 or i.max() >= n or j.max() >= n:
                raise ValueError(f"node id out of range [0, {n})")
            loops = np.flatnonzero(i == j)
            if loops.size:
                raise ValueError(f"self-loop at node {i[loops[0]]}")
            bad = np.flatnonzero(~(np.isfinite(w) & (w > 0)))
            if bad.size:
                k = bad[0]
                raise ValueError(f"weight of edge ({i[k]}, {j[k]}) must be positive, got {w[k]}")
            lo, hi = np.minimum(i, j), np.maximum(i, j)
            key = lo * n + hi
            order = np.argsort(key, kind="stable")
            dup = np.flatnonzero(key[order][1:] == key[order][:-1])
            if dup.size:
                k = order[dup[0]]
                raise ValueError(f"duplicate edge ({lo[k]}, {hi[k]})")
        src = np.concatenate([i, j])
        dst = np.concatenate([j, i])
        ww = np.concatenate([w, w])
        order = np.argsort(src * n + dst, kind="stable")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst[order], ww[order])

    def neighbors(self, i: int):
        """``(ids, weights)`` of the neighbours of node ``i``."""
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.weights[a:b]

    def edges(self):
        """Edge arrays ``(i, j, w)`` with ``i < j``, sorted by ``(i, j)``."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        keep = src < self.indices
        return src[keep], self.indices[keep], self.weights[keep]

    @property
    def adjacency(self) -> sparse.csr_matrix:
        """Weighted adjacency ``W`` as a scipy CSR matrix (shared buffers)."""
        if self._adjacency is None:
            self._adjacency = sparse.csr_matrix(
                (self.weights, self.indices, self.indptr), shape=(self.n, self.n)
            )
        return self._adjacency

    def laplacian(self) -> sparse.csr_matrix:
        return (sparse.diags(self.degrees) - self.adjacency).tocsr()

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


def build_graph(edges: Iterable[tuple[int, int, float]], n: int | None = None) -> Graph:
    """Graph from a list of ``(i, j, w)`` triples.

    ``n`` defaults to one more than the largest id mentioned.
    """
    edges = list(edges)
    if n is None:
        n = 1 + max((max(e[0], e[1]) for e in edges), default=0)
    if not edges:
        return Graph.from_arrays(n, [], [], [])
    i, j, w = zip(*edges)
    return Graph.from_arrays(n, i, j, w)


def degree_vector(g: Graph) -> np.ndarray:
    return g.degrees.copy()


def as_signal(g: Graph, z, name="signal") -> np.ndarray:
    """Validate a node signal (1-D) or a stack of signals (2-D, one column each)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim not in (1, 2) or z.shape[0] != g.n:
        raise ValueError(f"{name} must have length {g.n}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} has non-finite entries")
    return z


def laplacian_apply(g: Graph, z) -> np.ndarray:
    """``L z = D z - W z``."""
    z = as_signal(g, z)
    d = g.degrees if z.ndim == 1 else g.degrees[:, None]
    return d * z - g.adjacency @ z


def quadratic_form(g: Graph, z) -> float:
    """``z^T L z`` evaluated edge-wise as ``sum w_ij (z_i - z_j)^2``."""
    z = as_signal(g, z)
    i, j, w = g.edges()
    return float(np.sum(w * (z[i] - z[j]) ** 2))


def write_graph(g: Graph, path) -> None:
    """Write the text format: ``n m`` then one ``i j w`` line per edge (i < j)."""
    i, j, w = g.edges()
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{g.n} {g.m}\n")
        fh.writelines(f"{a} {b} {c!r}\n" for a, b, c in zip(i.tolist(), j.tolist(), w.tolist()))


def read_graph(path: str | os.PathLike) -> Graph:
    """Parse the text format written by :func:`write_graph`.

    Raises :class:`GraphFormatError` naming the offending line.
    """
    with open(path) as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GraphFormatError(f"{path}: line 1: empty file, expected header 'n m'")
    head = lines[0].split(" ")
    try:
        if len(head) != 2:
            raise ValueError
        n, m = int(head[0]), int(head[1])
        if n < 1 or m < 0:
            raise ValueError
    except ValueError:
        raise GraphFormatError(f"{path}: line 1: bad header {lines[0]!r}, expected 'n m'") from None
    if len(lines) - 1 != m:
        raise GraphFormatError(
            f"{path}: line {len(lines) + 1}: header announces {m} edges, found {len(lines) - 1}"
        )
    ii = np.empty(m, dtype=np.int64)
    jj = np.empty(m, dtype=np.int64)
    ww = np.empty(m)
    for k, line in enumerate(lines[1:]):
        parts = line.split(" ")
        try:
            if len(parts) != 3:
                raise ValueError
            a, b, c = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFormatError(f"{path}: line {k + 2}: expected 'i j w', got {line!r}") from None
        if not 0 <= a < b < n:
            raise GraphFormatError(f"{path}: line {k + 2}: need 0 <= i < j < {n}, got {line!r}")
        if not (np.isfinite(c) and c > 0):
            raise GraphFormatError(f"{path}: line {k + 2}: weight must be positive, got {line!r}")
        ii[k], jj[k], ww[k] = a, b, c
    try:
        return Graph.from_arrays(n, ii, jj, ww)
    except ValueError as exc:
        raise GraphFormatError(f"{path}: {exc}") from None
