"""Input generators: grid graphs, block models, random graphs, noise, labels."""

from __future__ import annotations

import numpy as np

from .graph import Graph


def grid_graph(rows: int, cols: int) -> Graph:
    """Unit-weight 4-neighbour grid; node ``r * cols + c`` is pixel ``(r, c)``."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    ids = np.arange(rows * cols).reshape(rows, cols)
    i = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    j = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    return Graph.from_arrays(rows * cols, i, j)


def sbm_graph(n: int, k: int, p_in: float, p_out: float, rng: np.random.Generator):
    """Stochastic block model with ``k`` equal blocks of consecutive nodes.

    Each unordered pair is an edge independently, with probability ``p_in``
    inside a block and ``p_out`` across blocks.  Returns ``(graph, classes)``.
    """
    if k < 1 or n % k:
        raise ValueError(f"n={n} is not divisible into k={k} equal blocks")
    for p in (p_in, p_out):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"edge probability {p} outside [0, 1]")
    classes = np.repeat(np.arange(k), n // k)
    src, dst = [], []
    for i in range(n - 1):
        others = np.arange(i + 1, n)
        p = np.where(classes[others] == classes[i], p_in, p_out)
        hit = others[rng.random(others.shape[0]) < p]
        src.append(np.full(hit.shape[0], i))
        dst.append(hit)
    i = np.concatenate(src) if src else np.empty(0, dtype=np.int64)
    j = np.concatenate(dst) if dst else np.empty(0, dtype=np.int64)
    return Graph.from_arrays(n, i, j), classes


def random_graph(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Uniform graph with exactly ``m`` distinct unit-weight edges, G(n, m)."""
    if m > n * (n - 1) // 2:
        raise ValueError(f"{m} edges do not fit in a simple graph on {n} nodes")
    keys = np.empty(0, dtype=np.int64)
    while keys.shape[0] < m:
        need = m - keys.shape[0]
        a = rng.integers(0, n, size=int(need * 1.1) + 16)
        b = rng.integers(0, n, size=a.shape[0])
        ok = a != b
        new = np.minimum(a, b)[ok] * n + np.maximum(a, b)[ok]
        keys = np.concatenate([keys, new])
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)]
    keys = keys[:m]
    return Graph.from_arrays(n, keys // n, keys % n)


def add_gaussian_noise(x, gamma: float, rng: np.random.Generator) -> np.ndarray:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    if gamma == 0:
        return x.copy()
    return x + gamma * rng.standard_normal(x.shape)


def sample_labels(classes, m: int, rng: np.random.Generator, k: int | None = None) -> np.ndarray:
    """Label matrix ``Y`` (n x k, 0/1) with ``m`` known nodes per class.

    Known nodes are drawn uniformly without replacement inside each class.
    """
    classes = np.asarray(classes)
    k = int(classes.max()) + 1 if k is None else k
    Y = np.zeros((classes.shape[0], k), dtype=np.int8)
    for c in range(k):
        members = np.flatnonzero(classes == c)
        if m > members.shape[0]:
            raise ValueError(f"cannot label {m} nodes in class {c} of size {members.shape[0]}")
        Y[rng.choice(members, size=m, replace=False), c] = 1
    return Y


def shapes_image(size: int = 64) -> np.ndarray:
    """Piecewise-smooth 8-bit test picture: shaded background, disc, square, wedge."""
    r, c = np.mgrid[0:size, 0:size] / (size - 1)
    img = 60 + 80 * c + 30 * r
    img[(r - 0.35) ** 2 + (c - 0.3) ** 2 < 0.2**2] = 220
    img[(abs(r - 0.7) < 0.17) & (abs(c - 0.7) < 0.17)] = 30
    img[(r > 0.55) & (c < 0.45) & (c > 0.05) & (r - 0.55 > 0.45 - c)] = 170
    img[(r < 0.25) & (c > 0.6)] = 120 + 100 * (c[(r < 0.25) & (c > 0.6)] - 0.6)
    return np.clip(np.round(img), 0, 255).astype(np.uint8)
