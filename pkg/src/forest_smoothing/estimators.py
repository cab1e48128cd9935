"""Monte-Carlo smoothing estimators built on random spanning forests.

For a forest ``phi`` and a signal ``y``:

* ``estimate_tilde``: every node takes the value of ``y`` at its root.
* ``estimate_bar``: every node takes the mean of ``y`` over its tree.

Both are unbiased for ``K y`` with ``K = (Q + L)^{-1} Q``; the tree average
is the conditional expectation of the root value given the tree partition,
so its variance is never larger.  Given the partition, the root of a tree is
drawn with probability proportional to ``q``, so with non-uniform ``q`` the
tree mean is weighted by ``q`` (with uniform ``q`` it is the plain mean).
:func:`smooth` averages ``N`` independent forests.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .graph import Graph, as_signal
from .rng import stream_state
from .sampler import RootedForest, _wilson, as_qvector

ESTIMATORS = ("tilde", "bar")
BLOCK_SIZE = 1024  # forests per work unit; fixed so results do not depend on threading


def estimate_tilde(forest: RootedForest, y) -> np.ndarray:
    y = _check_len(forest, y)
    return y[forest.root_of]


def estimate_bar(forest: RootedForest, y, q=None) -> np.ndarray:
    """Tree averages of ``y``; pass the sampling ``q`` when it is not uniform."""
    y = _check_len(forest, y)
    w = _tree_weights(forest, q)
    if w is None:
        sums = np.zeros((forest.n_trees,) + y.shape[1:])
        np.add.at(sums, forest.tree_id, y)
        sizes = forest.tree_sizes
    else:
        sums = np.zeros((forest.n_trees,) + y.shape[1:])
        np.add.at(sums, forest.tree_id, w[:, None] * y if y.ndim == 2 else w * y)
        sizes = np.bincount(forest.tree_id, weights=w, minlength=forest.n_trees)
    means = sums / (sizes if y.ndim == 1 else sizes[:, None])
    return means[forest.tree_id]


def averaging_matrix(forest: RootedForest, q=None) -> np.ndarray:
    """Dense ``S`` with ``estimate_bar(forest, y, q) == S @ y``.

    ``S_ij = [t(i) == t(j)] q_j / sum of q over the tree of i``; with uniform
    ``q`` the entries are ``1 / |tree of i|``.
    """
    w = _tree_weights(forest, q)
    w = np.ones(forest.n) if w is None else w
    same = forest.tree_id[:, None] == forest.tree_id[None, :]
    totals = np.bincount(forest.tree_id, weights=w, minlength=forest.n_trees)
    return same * w[None, :] / totals[forest.tree_id][:, None]


def _tree_weights(forest, q):
    if q is None:
        return None
    qv = as_qvector(q, forest.n)
    return None if qv.is_uniform else qv.values


def _check_len(forest, y):
    y = np.asarray(y, dtype=np.float64)
    if y.shape[:1] != (forest.n,):
        raise ValueError(f"signal must have length {forest.n}, got shape {y.shape}")
    return y


@dataclass
class EstimateAccumulator:
    """Running mean and sum of squared deviations of per-forest estimates."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, shape) -> EstimateAccumulator:
        return cls(0, np.zeros(shape), np.zeros(shape))

    def add(self, estimate) -> None:
        estimate = np.asarray(estimate, dtype=np.float64)
        self.count += 1
        delta = estimate - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (estimate - self.mean)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased (``N - 1``) per-entry variance; zeros when ``N < 2``."""
        if self.count < 2:
            return np.zeros_like(self.mean)
        return self.m2 / (self.count - 1)

    @property
    def total_variance(self):
        """Variance summed over nodes (per column for stacked signals)."""
        return self.variance.sum(axis=0)

    def merged(self, other: EstimateAccumulator) -> EstimateAccumulator:
        return merge(self, other)


def merge(a: EstimateAccumulator, b: EstimateAccumulator) -> EstimateAccumulator:
    """Combine two accumulators (pairwise update of Chan et al.)."""
    if a.mean.shape != b.mean.shape:
        raise ValueError(f"cannot merge accumulators of shapes {a.mean.shape} and {b.mean.shape}")
    if a.count == 0:
        return EstimateAccumulator(b.count, b.mean.copy(), b.m2.copy())
    if b.count == 0:
        return EstimateAccumulator(a.count, a.mean.copy(), a.m2.copy())
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * (b.count / n)
    m2 = a.m2 + b.m2 + delta**2 * (a.count * b.count / n)
    return EstimateAccumulator(n, mean, m2)


@nb.njit(cache=True, nogil=True)
def _accumulate(indptr, indices, cumw, deg, q, y, seed, first_stream, count, use_bar, weighted):
    n, k = y.shape
    mean = np.zeros((n, k))
    m2 = np.zeros((n, k))
    parent = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    in_forest = np.empty(n, dtype=np.bool_)
    root = np.empty(n, dtype=np.int64)
    sums = np.zeros((n, k))
    sizes = np.zeros(n)
    est = np.empty(k)
    state = np.empty(1, dtype=np.uint64)
    steps = 0
    zero_nodes = 0
    for s in range(count):
        state[0] = stream_state(seed, first_stream + np.uint64(s))
        steps += _wilson(indptr, indices, cumw, deg, q, state, parent, nxt, in_forest)
        # roots: follow parents with path compression through ``root``
        root[:] = -1
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
        if use_bar:
            for i in range(n):
                r = root[i]
                wi = q[i] if weighted else 1.0
                sizes[r] += wi
                for c in range(k):
                    sums[r, c] += wi * y[i, c] if weighted else y[i, c]
        cnt = s + 1
        for i in range(n):
            r = root[i]
            allzero = True
            for c in range(k):
                if use_bar:
                    v = sums[r, c] / sizes[r]
                else:
                    v = y[r, c]
                if v != 0.0:
                    allzero = False
                d = v - mean[i, c]
                mean[i, c] += d / cnt
                m2[i, c] += d * (v - mean[i, c])
            if allzero:
                zero_nodes += 1
        if use_bar:
            for i in range(n):
                r = root[i]
                sizes[r] = 0.0
                for c in range(k):
                    sums[r, c] = 0.0
    return mean, m2, steps, zero_nodes


def default_threads() -> int:
    env = os.environ.get("FOREST_SMOOTH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class SmoothResult:
    """Outcome of :func:`smooth`; arrays have the shape of the input signal."""

    mean: np.ndarray
    variance: np.ndarray
    accumulator: EstimateAccumulator
    diagnostics: dict = field(default_factory=dict)


def smooth(g: Graph, q, y, n_forests: int, estimator: str = "bar", seed: int = 0,
           first_stream: int = 0, threads: int | None = None) -> SmoothResult:
    """Estimate ``K y`` by averaging over ``n_forests`` independent forests.

    Parameters
    ----------
    g : Graph
    q : float, array or QVector
        Absorption rates (``K = (Q + L)^{-1} Q``).
    y : array, shape (n,) or (n, k)
        Signal, or ``k`` signals as columns smoothed with the same forests.
    n_forests : int
    estimator : {"bar", "tilde"}
    seed : int
        Forest ``s`` uses random stream ``first_stream + s``.  The output is
        identical for any ``threads``.
    threads : int, optional
        Worker cap; defaults to ``FOREST_SMOOTH_THREADS`` or the CPU count.

    Returns
    -------
    SmoothResult
        ``diagnostics`` holds ``n_forests``, ``walk_steps``,
        ``zero_estimate_nodes`` (mean number of nodes per forest whose estimate
        is exactly zero in every column, e.g. trees without labelled nodes) and
        ``wall_time``.
    """
    if n_forests < 1:
        raise ValueError("n_forests must be >= 1")
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    qv = as_qvector(q, g.n)
    y = as_signal(g, y)
    y2 = np.ascontiguousarray(y.reshape(g.n, -1))
    threads = threads or default_threads()
    blocks = [(s, min(BLOCK_SIZE, n_forests - s)) for s in range(0, n_forests, BLOCK_SIZE)]
    args = (g.indptr, g.indices, g.cumweights, g.degrees, qv.values, y2, np.uint64(seed))
    use_bar = estimator == "bar"
    weighted = not qv.is_uniform

    def run(block):
        start, count = block
        return _accumulate(*args, np.uint64(first_stream + start), count, use_bar, weighted)

    t0 = time.perf_counter()
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    acc = EstimateAccumulator.empty(y2.shape)
    steps = zero = 0
    for (start, count), (mean, m2, st, zn) in zip(blocks, parts):
        acc = merge(acc, EstimateAccumulator(count, mean, m2))
        steps += int(st)
        zero += int(zn)
    wall = time.perf_counter() - t0
    acc = EstimateAccumulator(acc.count, acc.mean.reshape(y.shape), acc.m2.reshape(y.shape))
    diagnostics = {
        "n_forests": n_forests,
        "estimator": estimator,
        "walk_steps": steps,
        "zero_estimate_nodes": zero / n_forests,
        "wall_time": wall,
    }
    return SmoothResult(acc.mean, acc.variance, acc, diagnostics)
