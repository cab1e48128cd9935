"""Graph signal smoothing by averaging over random spanning forests."""

__version__ = "0.1.0"

from .graph import Graph, build_graph, degree_vector, laplacian_apply, read_graph, write_graph
from .sampler import QVector, RootedForest, root_histogram, sample_forest, sample_parents
from .rng import RngStream
from .estimators import EstimateAccumulator, estimate_bar, estimate_tilde, merge, smooth
from .oracle import (
    dense_kernel,
    enumerate_forests,
    exact_smooth,
    expected_mse_under_noise,
    variance_functionals,
)

__all__ = [
    "Graph", "build_graph", "degree_vector", "laplacian_apply", "read_graph", "write_graph",
    "QVector", "RootedForest", "RngStream", "root_histogram", "sample_forest", "sample_parents",
    "EstimateAccumulator", "estimate_bar", "estimate_tilde", "merge", "smooth",
    "dense_kernel", "enumerate_forests", "exact_smooth", "expected_mse_under_noise",
    "variance_functionals",
]
