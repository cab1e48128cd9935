"""Exact reference computations for small and medium graphs.

Everything here is deterministic and independent of the forest sampler:
dense ``K = (Q + L)^{-1} Q`` by Cholesky, a matrix-free conjugate-gradient
solve, closed-form variance functionals, and brute-force enumeration of all
rooted spanning forests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, cg

from .graph import Graph, as_signal, laplacian_apply
from .sampler import QVector, RootedForest, as_qvector

MAX_DENSE_NODES = 5000
MAX_ENUM_NODES = 8


class GuardError(ValueError):
    """Problem too large for an exact method."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def _dense_guard(g: Graph):
    if g.n > MAX_DENSE_NODES:
        raise GuardError(
            f"dense oracle limited to n <= {MAX_DENSE_NODES} (got n={g.n}); "
            "use the Monte-Carlo smoother or exact_smooth instead"
        )


@dataclass(frozen=True)
class DenseKernel:
    K: np.ndarray
    q: QVector

    def __matmul__(self, y):
        return self.K @ y


def dense_kernel(g: Graph, q) -> DenseKernel:
    qv = as_qvector(q, g.n)
    _dense_guard(g)
    A = g.laplacian().toarray()
    A[np.diag_indices_from(A)] += qv.values
    c = sla.cho_factor(A, lower=True)
    return DenseKernel(sla.cho_solve(c, np.diag(qv.values)), qv)


def exact_smooth(g: Graph, q, y, rtol: float = 1e-10, maxiter: int | None = None) -> np.ndarray:
    """Solve ``(Q + L) x = Q y`` by conjugate gradients, touching ``L`` only via products.

    ``y`` may hold several signals as columns.  Raises
    :class:`ConvergenceError` (carrying the final relative residual) if the
    iteration cap is hit.
    """
    qv = as_qvector(q, g.n)
    y = as_signal(g, y)
    if y.ndim == 2:
        return np.column_stack(
            [exact_smooth(g, qv, y[:, k], rtol=rtol, maxiter=maxiter) for k in range(y.shape[1])]
        )
    qval = qv.values
    op = LinearOperator((g.n, g.n), matvec=lambda z: laplacian_apply(g, z) + qval * z, dtype=float)
    b = qval * y
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(g.n)
    maxiter = maxiter if maxiter is not None else max(1000, 10 * g.n)
    x, info = cg(op, b, rtol=rtol, atol=0.0, maxiter=maxiter)
    res = np.linalg.norm(op @ x - b) / bnorm
    if info != 0 or res > 10 * rtol:
        raise ConvergenceError(
            f"conjugate gradient stopped after {maxiter} iterations, relative residual {res:.3e}",
            res,
        )
    return x


def variance_functionals(g: Graph, q, y) -> tuple[float, float]:
    """Total variances of the root-value and tree-average estimators.

    With uniform ``q`` returns ``(y^T (I - K^2) y, y^T (K - K^2) y)``, the
    variances summed over nodes.  With non-uniform ``q`` node ``i`` is weighted
    by ``q_i / mean(q)`` (the plain sum has no closed form in ``K`` there),
    giving ``y^T W (I - K^2) y`` and ``y^T W (K - K^2) y`` with
    ``W = diag(q) / mean(q)``.
    """
    qv = as_qvector(q, g.n)
    K = dense_kernel(g, qv).K
    y = as_signal(g, y)
    w = variance_weights(qv, g.n)
    Ky = K @ y
    KKy = K @ Ky
    wy = w * y
    return float(wy @ y - wy @ KKy), float(wy @ Ky - wy @ KKy)


def variance_weights(q, n: int) -> np.ndarray:
    """Node weights under which the variance identities hold (ones for uniform ``q``)."""
    qv = as_qvector(q, n)
    return np.ones(n) if qv.is_uniform else qv.values / qv.values.mean()


def expected_mse_under_noise(g: Graph, q, x, gamma: float, rtol: float = 1e-8) -> float:
    """Expected squared error of the tree-average estimator when ``y = x + noise``.

    Averaged over forests and over white noise of standard deviation
    ``gamma``: ``x^T (K - K^2) x + gamma^2 tr(K - K^2)`` (node-weighted by
    ``q / mean(q)`` when ``q`` is not uniform).  The value is computed twice,
    from the dense matrix and from the spectrum of ``Q^{-1/2} L Q^{-1/2}``
    (for uniform ``q`` this is the band-pass response ``sqrt(q lam) / (q + lam)``
    applied to the Laplacian spectrum), and the two must agree to ``rtol``.
    """
    x = as_signal(g, x)
    m, s = _mse_both_forms(g, q, x, gamma)
    # absolute floor for inputs whose error is zero up to rounding
    floor = 1e-12 * (float(np.dot(x, x)) + gamma**2 * g.n)
    if abs(m - s) > rtol * max(abs(m), abs(s)) + floor:
        raise ArithmeticError(f"matrix form {m!r} and spectral form {s!r} disagree")
    return m


def _mse_both_forms(g: Graph, q, x, gamma: float) -> tuple[float, float]:
    qv = as_qvector(q, g.n)
    x = as_signal(g, x)
    K = dense_kernel(g, qv).K
    w = variance_weights(qv, g.n)
    B = w[:, None] * (K - K @ K)
    matrix_form = float(x @ B @ x + gamma**2 * np.trace(B))

    L = g.laplacian().toarray()
    if qv.is_uniform:
        qq = qv.values[0]
        lam, U = np.linalg.eigh(L)
        lam = np.clip(lam, 0.0, None)
        response = np.sqrt(qq * lam) / (qq + lam)
        Fx = U @ (response * (U.T @ x))
        spectral_form = float(Fx @ Fx + gamma**2 * np.sum(response**2))
    else:
        # Q (K - K^2) = Q^{1/2} V diag(h) V^T Q^{1/2},  Q^{-1/2} L Q^{-1/2} = V diag(mu) V^T
        s = np.sqrt(qv.values)
        mu, V = np.linalg.eigh(L / np.outer(s, s))
        mu = np.clip(mu, 0.0, None)
        h = mu / (1.0 + mu) ** 2
        a = V.T @ (s * x)
        noise = np.sum(h * np.sum((s[:, None] * V) ** 2, axis=0))
        spectral_form = float((np.sum(h * a**2) + gamma**2 * noise) / qv.values.mean())
    return matrix_form, spectral_form


def expected_walk_steps(g: Graph, q) -> float:
    """Mean number of random-walk steps per forest, ``tr((D + Q)(Q + L)^{-1})``."""
    qv = as_qvector(q, g.n)
    K = dense_kernel(g, qv).K  # (Q+L)^{-1} Q
    return float(np.sum((g.degrees + qv.values) * np.diag(K) / qv.values))


def enumerate_forests(g: Graph, q) -> list[tuple[RootedForest, float]]:
    """All rooted spanning forests with their exact probabilities.

    A forest is a choice of parent for every node (a neighbour, or none for a
    root) without cycles; its weight is the product of root rates and edge
    weights.  Depth-first search over parent choices, pruning a branch as
    soon as it closes a cycle.
    """
    qv = as_qvector(q, g.n)
    if g.n > MAX_ENUM_NODES:
        raise GuardError(f"forest enumeration limited to n <= {MAX_ENUM_NODES} (got n={g.n})")
    n = g.n
    qval = qv.values.tolist()
    options = []
    for i in range(n):
        ids, ws = g.neighbors(i)
        options.append([(-1, qval[i])] + list(zip(ids.tolist(), ws.tolist())))

    parent = [-2] * n  # -2: not yet assigned
    found: list[tuple[list[int], float]] = []

    def closes_cycle(i):
        u = parent[i]
        while u >= 0 and parent[u] != -2:
            if u == i:
                return True
            u = parent[u]
        return False

    def rec(i, weight):
        if i == n:
            found.append((list(parent), weight))
            return
        for p, w in options[i]:
            parent[i] = p
            if p < 0 or not closes_cycle(i):
                rec(i + 1, weight * w)
        parent[i] = -2

    rec(0, 1.0)
    total = sum(w for _, w in found)
    return [(RootedForest.from_parents(np.array(p)), w / total) for p, w in found]


def forest_partition_function(g: Graph, q) -> float:
    """Sum of unnormalised forest weights, ``det(Q + L)``."""
    qv = as_qvector(q, g.n)
    A = g.laplacian().toarray() + np.diag(qv.values)
    return float(np.linalg.det(A))


def root_marginals(forests) -> np.ndarray:
    """``P(root of i == j)`` from an enumerated forest list."""
    n = forests[0][0].n
    P = np.zeros((n, n))
    for f, p in forests:
        P[np.arange(n), f.root_of] += p
    return P
