"""
Root values versus tree averages
================================

Both forest estimators average to ``K y``.  The tree average has the smaller
variance: its total is ``y'(K - K^2)y`` against ``y'(I - K^2)y`` for the
root value.
"""

import numpy as np

from forest_smoothing import build_graph, dense_kernel, smooth, variance_functionals

edges = [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (3, 4, 1.0), (4, 0, 0.7), (0, 5, 1.3),
         (5, 6, 1.0), (6, 7, 0.4), (7, 8, 1.1), (8, 9, 2.2), (9, 5, 0.9), (2, 7, 0.6), (4, 9, 1.5)]
g = build_graph(edges)
y = np.array([1.0, -2.0, 0.5, 3.0, 0.0, 1.5, -1.0, 2.5, 0.25, -0.75])
q = 1.0

exact = dense_kernel(g, q).K @ y
v_tilde, v_bar = variance_functionals(g, q, y)

for name, v in (("tilde", v_tilde), ("bar", v_bar)):
    res = smooth(g, q, y, n_forests=100_000, estimator=name, seed=0)
    err = np.max(np.abs(res.mean - exact))
    print(f"{name:5s} max error {err:.4f}  total variance {res.variance.sum():.4f}"
          f"  (closed form {v:.4f})")

# several signals can share the same forests: pass them as columns
Y = np.column_stack([y, y**2])
res = smooth(g, q, Y, n_forests=1000, seed=0)
print("two signals at once:", res.mean.shape)
