"""
Cost of one forest
==================

One forest estimate costs a number of walk steps given exactly by
``tr((D + Q)(Q + L)^{-1})``; the wall time follows the edge count.  When q is
small next to the degrees the step count hardly depends on q.
"""

import numpy as np

from forest_smoothing import smooth
from forest_smoothing.oracle import expected_walk_steps
from forest_smoothing.pipelines import scaling_benchmark
from forest_smoothing.synthetic import random_graph

for row in scaling_benchmark([10**5, 10**6], q=1.0, seed=0):
    print(f"|E|={row.m:>8d}  n={row.n:>7d}  time={row.wall_time * 1e3:7.2f} ms  steps={row.walk_steps}")

# measured steps against the trace formula on a small graph
g = random_graph(300, 3000, np.random.default_rng(0))
for q in (1.0, 0.1, 0.01):
    res = smooth(g, q, np.zeros(g.n), 2000, seed=1)
    print(f"q={q:<5g} mean steps {res.diagnostics['walk_steps'] / 2000:9.1f}"
          f"   predicted {expected_walk_steps(g, q):9.1f}")
