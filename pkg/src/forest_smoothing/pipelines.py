"""End-to-end experiments: image denoising, semi-supervised classification, scaling."""

from __future__ import annotations

import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .estimators import smooth
from .graph import Graph, laplacian_apply
from .oracle import exact_smooth
from .rng import derive_seed, numpy_rng
from .synthetic import add_gaussian_noise, grid_graph, random_graph, sample_labels, sbm_graph

SSL_METHODS = ("exact", "tilde", "bar")


def psnr(reference, candidate, max_value: float) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the inputs are identical."""
    reference = np.asarray(reference, dtype=np.float64).ravel()
    candidate = np.asarray(candidate, dtype=np.float64).ravel()
    if reference.shape != candidate.shape:
        raise ValueError(f"length mismatch: {reference.shape[0]} vs {candidate.shape[0]}")
    if max_value <= 0:
        raise ValueError("max_value must be positive")
    mse = np.mean((reference - candidate) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(max_value**2 / mse))


def adjusted_rand_index(pred, truth) -> float:
    """Pair-counting agreement between two labelings, corrected for chance."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} vs {truth.shape[0]}")
    n = pred.shape[0]
    _, a = np.unique(pred, return_inverse=True)
    _, b = np.unique(truth, return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)

    def pairs(x):
        x = np.asarray(x, dtype=np.float64)
        return np.sum(x * (x - 1) / 2)

    index = pairs(table)
    rows, cols = pairs(table.sum(axis=1)), pairs(table.sum(axis=0))
    total = n * (n - 1) / 2
    expected = rows * cols / total if total else 0.0
    max_index = (rows + cols) / 2
    if max_index == expected:
        # both labelings trivial (single cluster or all singletons)
        return 1.0
    return float((index - expected) / (max_index - expected))


def bootstrap_mean_ci(values, level: float = 0.95, n_boot: int = 4000, seed: int = 0):
    """Percentile bootstrap interval for the mean of ``values``."""
    values = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.shape[0], size=(n_boot, values.shape[0]))
    means = values[idx].mean(axis=1)
    alpha = (1 - level) / 2
    return float(np.quantile(means, alpha)), float(np.quantile(means, 1 - alpha))


def is_unimodal(values) -> bool:
    """True if ``values`` rises (weakly) to its maximum and then falls (weakly)."""
    v = np.asarray(values)
    k = int(np.argmax(v))
    return bool(np.all(np.diff(v[: k + 1]) >= 0) and np.all(np.diff(v[k:]) <= 0))


# ---------------------------------------------------------------------------
# Denoising


@dataclass
class DenoiseReport:
    q_grid: list
    gamma: float
    n_forests: int
    realizations: int
    seed: int
    max_value: float
    shape: tuple
    # arrays of shape (realizations, len(q_grid)), PSNR against the clean image
    psnr_noisy: np.ndarray
    psnr_exact: np.ndarray
    psnr_tilde: np.ndarray
    psnr_bar: np.ndarray
    walk_steps: np.ndarray = None

    def mean_psnr(self, which: str) -> np.ndarray:
        return getattr(self, f"psnr_{which}").mean(axis=0)

    def best_q(self, which: str = "exact") -> float:
        return self.q_grid[int(np.argmax(self.mean_psnr(which)))]

    def to_dict(self) -> dict:
        out = {
            "experiment": "denoise",
            "version": __version__,
            "params": {
                "q_grid": list(self.q_grid),
                "gamma": self.gamma,
                "n_forests": self.n_forests,
                "realizations": self.realizations,
                "seed": self.seed,
                "max_value": self.max_value,
                "shape": list(self.shape),
            },
        }
        for which in ("noisy", "exact", "tilde", "bar"):
            arr = getattr(self, f"psnr_{which}")
            out[f"mean_psnr_{which}"] = arr.mean(axis=0).tolist()
            out[f"psnr_{which}"] = arr.tolist()
        if self.walk_steps is not None:
            out["mean_walk_steps"] = self.walk_steps.mean(axis=0).tolist()
        return out


def denoise_experiment(image, q_grid, gamma: float, n_forests: int, realizations: int,
                       seed: int, max_value: float = 255.0, threads: int | None = None) -> DenoiseReport:
    """PSNR of Tikhonov denoising on a grid graph, exact and forest-based.

    Every realization draws one noise vector shared by all ``q``; the two
    estimators at a given (realization, q) use the same forests.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("image must be 2-D")
    rows, cols = image.shape
    g = grid_graph(rows, cols)
    x = image.ravel()
    q_grid = [float(q) for q in q_grid]
    shape = (realizations, len(q_grid))
    p_noisy, p_exact, p_tilde, p_bar = (np.empty(shape) for _ in range(4))
    steps = np.empty(shape)
    for r in range(realizations):
        y = add_gaussian_noise(x, gamma, numpy_rng(seed, "noise", r))
        pn = psnr(x, y, max_value)
        for j, q in enumerate(q_grid):
            s = derive_seed(seed, "sampling", r, j)
            p_noisy[r, j] = pn
            p_exact[r, j] = psnr(x, exact_smooth(g, q, y), max_value)
            rt = smooth(g, q, y, n_forests, "tilde", seed=s, threads=threads)
            rb = smooth(g, q, y, n_forests, "bar", seed=s, threads=threads)
            p_tilde[r, j] = psnr(x, rt.mean, max_value)
            p_bar[r, j] = psnr(x, rb.mean, max_value)
            steps[r, j] = rb.diagnostics["walk_steps"] / n_forests
    return DenoiseReport(q_grid, float(gamma), n_forests, realizations, seed, float(max_value),
                         (rows, cols), p_noisy, p_exact, p_tilde, p_bar, steps)


# ---------------------------------------------------------------------------
# Semi-supervised learning


def _subgraph(g: Graph, keep: np.ndarray) -> Graph:
    relabel = np.full(g.n, -1, dtype=np.int64)
    relabel[keep] = np.arange(keep.shape[0])
    i, j, w = g.edges()
    return Graph.from_arrays(keep.shape[0], relabel[i], relabel[j], w)


def ssl_scores(g: Graph, Y, mu: float, sigma: float, method: str = "exact",
               n_forests: int = 1, seed: int = 0, threads: int | None = None):
    """Class scores ``F = D^{1-sigma} K D^{sigma-1} Y`` with ``K = (Q + L)^{-1} Q``, ``Q = mu D / 2``.

    ``method`` is ``"exact"`` (linear solve) or an estimator name, in which
    case ``K`` is applied by forest averaging.  Isolated nodes are removed
    before smoothing; their rows are NaN when ``sigma != 1`` and equal to ``Y``
    otherwise.  Returns ``(F, info)``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if sigma not in (0, 0.5, 1):
        raise ValueError("sigma must be 0, 1/2 or 1")
    if method not in SSL_METHODS:
        raise ValueError(f"method must be one of {SSL_METHODS}")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != g.n:
        raise ValueError(f"label matrix must be {g.n} x k")
    d = g.degrees
    isolated = d == 0
    active = np.flatnonzero(~isolated)
    info = {"isolated_nodes": int(isolated.sum()), "zero_estimate_nodes": 0.0, "walk_steps": 0}
    F = np.full(Y.shape, np.nan)
    if sigma == 1:
        F[isolated] = Y[isolated]
    elif isolated.any():
        warnings.warn(f"{int(isolated.sum())} isolated nodes cannot be classified", stacklevel=2)
    if active.shape[0] == 0:
        return F, info
    ga = g if active.shape[0] == g.n else _subgraph(g, active)
    da = d[active][:, None]
    Z = da ** (sigma - 1) * Y[active]
    q = mu / 2 * d[active]
    if method == "exact":
        X = exact_smooth(ga, q, Z)
    else:
        res = smooth(ga, q, Z, n_forests, method, seed=seed, threads=threads)
        X = res.mean
        info["zero_estimate_nodes"] = res.diagnostics["zero_estimate_nodes"]
        info["walk_steps"] = res.diagnostics["walk_steps"]
    F[active] = da ** (1 - sigma) * X
    return F, info


def ssl_classify(g: Graph, Y, mu: float, sigma: float, method: str = "exact",
                 n_forests: int = 1, seed: int = 0, threads: int | None = None) -> np.ndarray:
    """Assign every node to its highest-scoring class.

    Ties go to the lowest class index; nodes without a score get ``-1``.
    """
    F, _ = ssl_scores(g, Y, mu, sigma, method, n_forests, seed, threads)
    return assign_classes(F)


def assign_classes(F) -> np.ndarray:
    F = np.asarray(F)
    undefined = np.isnan(F).any(axis=1)
    pred = np.argmax(np.where(np.isnan(F), -np.inf, F), axis=1)
    pred[undefined] = -1
    return pred


@dataclass
class SslReport:
    n: int
    p_in: float
    p_out: float
    m_grid: list
    n_forests: int
    sigma: float
    mu: float
    realizations: int
    seed: int
    methods: tuple
    # method -> array (realizations, len(m_grid))
    ari: dict = field(default_factory=dict)
    zero_estimate_nodes: dict = field(default_factory=dict)
    mean_degree: list = field(default_factory=list)

    def mean_ari(self, method: str) -> np.ndarray:
        return self.ari[method].mean(axis=0)

    def to_dict(self) -> dict:
        params = {k: v for k, v in asdict(self).items()
                  if k not in ("ari", "zero_estimate_nodes", "mean_degree")}
        params["methods"] = list(self.methods)
        return {
            "experiment": "ssl",
            "version": __version__,
            "params": params,
            "mean_degree": list(self.mean_degree),
            "mean_ari": {k: self.mean_ari(k).tolist() for k in self.methods},
            "ari": {k: v.tolist() for k, v in self.ari.items()},
            "mean_zero_estimate_nodes": {
                k: v.mean(axis=0).tolist() for k, v in self.zero_estimate_nodes.items()
            },
        }


def ssl_experiment(n: int, p_in: float, p_out: float, m_grid, n_forests: int,
                   realizations: int, seed: int, sigma: float = 0, mu: float = 1.0,
                   k: int = 2, methods=SSL_METHODS, threads: int | None = None) -> SslReport:
    """Community recovery on block-model graphs from ``m`` known labels per class."""
    m_grid = [int(m) for m in m_grid]
    report = SslReport(n, p_in, p_out, m_grid, n_forests, sigma, mu, realizations, seed,
                       tuple(methods))
    shape = (realizations, len(m_grid))
    for meth in methods:
        report.ari[meth] = np.empty(shape)
        if meth != "exact":
            report.zero_estimate_nodes[meth] = np.empty(shape)
    for r in range(realizations):
        g, truth = sbm_graph(n, k, p_in, p_out, numpy_rng(seed, "sbm", r))
        report.mean_degree.append(float(g.degrees.mean()))
        for j, m in enumerate(m_grid):
            Y = sample_labels(truth, m, numpy_rng(seed, "labels", r, j), k=k)
            s = derive_seed(seed, "sampling", r, j)
            for meth in methods:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    F, info = ssl_scores(g, Y, mu, sigma, meth, n_forests, s, threads)
                report.ari[meth][r, j] = adjusted_rand_index(assign_classes(F), truth)
                if meth != "exact":
                    report.zero_estimate_nodes[meth][r, j] = info["zero_estimate_nodes"]
    return report


# ---------------------------------------------------------------------------
# Scaling


@dataclass
class BenchRow:
    n: int
    m: int
    q: float
    wall_time: float
    walk_steps: int
    matvec_time: float

    def to_dict(self):
        return asdict(self)


def scaling_benchmark(sizes, q: float = 1.0, seed: int = 0, mean_degree: float = 20.0,
                      repeats: int = 3) -> list[BenchRow]:
    """Time one tree-average estimate (``N = 1``) on random graphs with ``m`` edges.

    Graphs are uniform G(n, m) with ``n = 2 m / mean_degree``.  Reported wall
    time is the best of ``repeats`` runs on distinct forests; ``walk_steps``
    is from the first run.  ``matvec_time`` is the best time for one product
    ``L y``, for reference.
    """
    rows = []
    warm = grid_graph(2, 2)
    smooth(warm, q, np.ones(4), 1, "bar", seed=0, threads=1)
    for idx, m in enumerate(sizes):
        m = int(m)
        n = max(2, int(round(2 * m / mean_degree)))
        rng = numpy_rng(seed, "signal", idx)
        g = random_graph(n, m, rng)
        y = rng.standard_normal(n)
        times, steps = [], None
        for rep in range(repeats):
            res = smooth(g, q, y, 1, "bar", seed=derive_seed(seed, "sampling", idx), first_stream=rep,
                         threads=1)
            times.append(res.diagnostics["wall_time"])
            if steps is None:
                steps = res.diagnostics["walk_steps"]
        mv = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            laplacian_apply(g, y)
            mv.append(time.perf_counter() - t0)
        rows.append(BenchRow(n, m, float(q), min(times), int(steps), min(mv)))
        del g
    return rows
