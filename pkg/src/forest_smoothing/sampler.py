"""Random spanning forests via loop-erased random walks with absorption.

The graph is implicitly augmented with an absorbing node connected to every
node ``i`` with weight ``q[i]``.  Wilson's algorithm on the augmented graph,
rooted at the absorbing node, yields a weighted uniform spanning tree; cutting
the absorbing edges leaves a rooted spanning forest ``phi`` drawn with
probability proportional to ``prod_{r in roots} q_r * prod_{(i,j) in phi} W_ij``.
The absorbing node is never stored: from node ``i`` the walk stops with
probability ``q_i / (d_i + q_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .graph import Graph
from .rng import RngStream, next_uniform, stream_state


class QVector:
    """Per-node absorption rates, all strictly positive and finite."""

    def __init__(self, values):
        values = np.array(values, dtype=np.float64, ndmin=1)
        if values.ndim != 1:
            raise ValueError("q must be one-dimensional")
        if not np.all(np.isfinite(values) & (values > 0)):
            bad = np.flatnonzero(~(np.isfinite(values) & (values > 0)))[0]
            raise ValueError(f"q must be positive and finite, q[{bad}] = {values[bad]}")
        values.flags.writeable = False
        self.values = values

    @classmethod
    def uniform(cls, q: float, n: int) -> QVector:
        return cls(np.full(n, float(q)))

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        if self.is_uniform:
            return f"QVector.uniform({self.values[0]!r}, {len(self)})"
        return f"QVector({self.values!r})"


def as_qvector(q, n: int) -> QVector:
    """Accept a scalar, an array or a :class:`QVector` and check its length."""
    if isinstance(q, QVector):
        qv = q
    elif np.ndim(q) == 0:
        qv = QVector.uniform(float(q), n)
    else:
        qv = QVector(q)
    if len(qv) != n:
        raise ValueError(f"q has length {len(qv)}, graph has {n} nodes")
    return qv


@dataclass(frozen=True, eq=False)
class RootedForest:
    """One rooted spanning forest.

    ``parent_of[i]`` is ``-1`` for roots.  Trees are numbered by increasing
    root id, so ``roots[tree_id[i]] == root_of[i]``.
    """

    parent_of: np.ndarray
    root_of: np.ndarray
    walk_steps: int = 0
    tree_id: np.ndarray = field(init=False)
    roots: np.ndarray = field(init=False)

    def __post_init__(self):
        roots = np.flatnonzero(self.parent_of < 0)
        index = np.empty(self.parent_of.shape[0], dtype=np.int64)
        index[roots] = np.arange(roots.shape[0])
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "tree_id", index[self.root_of])

    @classmethod
    def from_parents(cls, parent_of, walk_steps: int = 0) -> RootedForest:
        parent_of = np.asarray(parent_of, dtype=np.int64)
        return cls(parent_of, _roots_from_parents(parent_of), walk_steps)

    @property
    def n(self) -> int:
        return self.parent_of.shape[0]

    @property
    def n_trees(self) -> int:
        return self.roots.shape[0]

    @property
    def tree_sizes(self) -> np.ndarray:
        return np.bincount(self.tree_id, minlength=self.n_trees)

    @property
    def tree_members(self) -> list[np.ndarray]:
        order = np.argsort(self.tree_id, kind="stable")
        return np.split(order, np.cumsum(self.tree_sizes)[:-1])

    def key(self) -> tuple[int, ...]:
        """Hashable identity: the parent table."""
        return tuple(self.parent_of.tolist())

    def validate(self, g: Graph) -> None:
        """Raise ``AssertionError`` if any forest invariant fails."""
        n = g.n
        p, r = self.parent_of, self.root_of
        assert p.shape == r.shape == self.tree_id.shape == (n,)
        assert np.all(r[self.roots] == self.roots)
        assert np.array_equal(np.flatnonzero(p < 0), self.roots)
        for i in range(n):
            seen = set()
            u = i
            while p[u] >= 0:
                assert u not in seen, f"cycle through node {u}"
                seen.add(u)
                nb_ids, _ = g.neighbors(u)
                k = np.searchsorted(nb_ids, p[u])
                assert k < nb_ids.shape[0] and nb_ids[k] == p[u], f"({u}, {p[u]}) is not an edge"
                u = p[u]
            assert u == r[i], f"node {i} reaches {u}, root_of says {r[i]}"
        members = self.tree_members
        assert len(members) == self.n_trees
        allm = np.concatenate(members)
        assert np.array_equal(np.sort(allm), np.arange(n))
        for t, mem in enumerate(members):
            assert np.all(self.tree_id[mem] == t)

    def dump(self) -> str:
        """Debug text: one ``node parent_or_dash root tree_id`` line per node."""
        return "".join(
            f"{i} {'-' if p < 0 else p} {r} {t}\n"
            for i, (p, r, t) in enumerate(
                zip(self.parent_of.tolist(), self.root_of.tolist(), self.tree_id.tolist())
            )
        )


@nb.njit(cache=True, nogil=True)
def _roots_from_parents(parent):
    n = parent.shape[0]
    root = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        u = i
        while root[u] < 0 and parent[u] >= 0:
            u = parent[u]
        r = root[u] if root[u] >= 0 else u
        u = i
        while root[u] < 0:
            root[u] = r
            if parent[u] < 0:
                break
            u = parent[u]
    return root


@nb.njit(cache=True, nogil=True)
def _wilson(indptr, indices, cumw, deg, q, state, parent, nxt, in_forest):
    """Fill ``parent`` with one forest; return the number of walk steps.

    ``nxt`` and ``in_forest`` are scratch arrays of length n.  At each step one
    uniform decides absorption, a second picks the neighbour by inverting the
    cumulative weights of the sorted neighbour list.
    """
    n = indptr.shape[0] - 1
    in_forest[:] = False
    steps = 0
    for start in range(n):
        if in_forest[start]:
            continue
        u = start
        while not in_forest[u]:
            steps += 1
            du = deg[u]
            qu = q[u]
            if next_uniform(state) * (du + qu) < qu:
                nxt[u] = -1
                break
            target = next_uniform(state) * du
            lo = indptr[u]
            hi = indptr[u + 1] - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if cumw[mid] > target:
                    hi = mid
                else:
                    lo = mid + 1
            v = indices[lo]
            nxt[u] = v
            u = v
        # Retrace the last-exit pointers: this is the loop-erased path.
        u = start
        while True:
            in_forest[u] = True
            parent[u] = nxt[u]
            if nxt[u] < 0:
                break
            u = nxt[u]
            if in_forest[u]:
                break
    return steps


@nb.njit(cache=True, nogil=True)
def _sample_parents_batch(indptr, indices, cumw, deg, q, seed, first_stream, count):
    n = indptr.shape[0] - 1
    out = np.empty((count, n), dtype=np.int64)
    steps = np.empty(count, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    in_forest = np.empty(n, dtype=np.bool_)
    state = np.empty(1, dtype=np.uint64)
    for s in range(count):
        state[0] = stream_state(seed, first_stream + np.uint64(s))
        steps[s] = _wilson(indptr, indices, cumw, deg, q, state, out[s], nxt, in_forest)
    return out, steps


@nb.njit(cache=True, nogil=True)
def _root_counts(indptr, indices, cumw, deg, q, seed, first_stream, count, node):
    n = indptr.shape[0] - 1
    counts = np.zeros(n, dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    in_forest = np.empty(n, dtype=np.bool_)
    state = np.empty(1, dtype=np.uint64)
    for s in range(count):
        state[0] = stream_state(seed, first_stream + np.uint64(s))
        _wilson(indptr, indices, cumw, deg, q, state, parent, nxt, in_forest)
        u = node
        while parent[u] >= 0:
            u = parent[u]
        counts[u] += 1
    return counts


def _kernel_args(g: Graph, q: QVector):
    return g.indptr, g.indices, g.cumweights, g.degrees, q.values


def sample_forest(g: Graph, q, rng: RngStream) -> RootedForest:
    """Draw one rooted spanning forest.

    Parameters
    ----------
    g : Graph
    q : float, array or QVector
        Absorption rates.  A scalar gives the single-parameter forest
        distribution.
    rng : RngStream
        Fixes the random numbers; equal streams give equal forests.
    """
    qv = as_qvector(q, g.n)
    parents, steps = sample_parents(g, qv, 1, rng.seed, first_stream=rng.stream)
    return RootedForest.from_parents(parents[0], int(steps[0]))


def sample_parents(g: Graph, q, count: int, seed: int, first_stream: int = 0):
    """Parent tables of ``count`` forests drawn on streams ``first_stream, ...``.

    Returns ``(parents, steps)`` with shapes ``(count, n)`` and ``(count,)``.
    Row ``k`` equals ``sample_forest(g, q, RngStream(seed, first_stream + k))``.
    """
    qv = as_qvector(q, g.n)
    return _sample_parents_batch(
        *_kernel_args(g, qv), np.uint64(seed), np.uint64(first_stream), int(count)
    )


def root_histogram(g: Graph, q, node: int, n_samples: int, seed: int) -> np.ndarray:
    """Empirical distribution of the root of ``node`` over ``n_samples`` forests.

    Converges to row ``node`` of ``K = (Q + L)^{-1} Q``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 0 <= node < g.n:
        raise ValueError(f"node {node} out of range")
    qv = as_qvector(q, g.n)
    counts = _root_counts(
        *_kernel_args(g, qv), np.uint64(seed), np.uint64(0), int(n_samples), int(node)
    )
    return counts / n_samples
