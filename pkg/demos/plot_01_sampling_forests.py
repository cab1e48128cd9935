"""
Sampling random spanning forests
================================

Draw rooted spanning forests of a small graph, look at one, and check that the
root of each node lands on ``j`` with probability ``K[i, j]``.
"""

import numpy as np

from forest_smoothing import RngStream, build_graph, dense_kernel, root_histogram, sample_forest

# a 6-node weighted graph; every node is absorbed at rate q
g = build_graph([(0, 1, 0.5), (0, 2, 2.0), (1, 2, 1.5), (2, 3, 0.25), (3, 4, 3.0), (1, 4, 0.75),
                 (4, 5, 1.0)])
q = 0.8

# one forest: each line is  node, parent (or '-' for a root), root, tree id
forest = sample_forest(g, q, RngStream(seed=1))
print(forest.dump())
print("trees:", forest.n_trees, "walk steps:", forest.walk_steps)

# root frequencies of node 0 over many forests versus the first row of K
K = dense_kernel(g, q).K
counts = root_histogram(g, q, node=0, n_samples=200_000, seed=2)
print("empirical:", np.round(counts / counts.sum(), 4))
print("exact K_0:", np.round(K[0], 4))
