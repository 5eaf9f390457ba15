"""Application pipelines: graph-regularized clustering and basis compression.

Clustering: build a k-NN graph Laplacian over the samples (rows of M), solve
the graph-Tikhonov case, run K-means on the left factor, and score accuracy
against ground truth under the best label matching.

Compression: treat a nonnegative basis as the ReLU target, solve the
per-column cardinality-constrained case at a smaller inner rank, and report
the ReLU relative error plus (optionally) the downstream reconstruction
error of the original data after a nonnegative least-squares refit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from .model import FactorPair, ObservedMatrix, build_observed, relative_error
from .regularizers import RegularizerCase
from .solvers import SolveOptions, nmd_aapb


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    accuracy_percent: float
    factor: FactorPair


@dataclass(frozen=True)
class CompressionResult:
    factor: FactorPair
    tol_nmd: float
    tol_nmf: float | None


def knn_graph_laplacian(m, p: int) -> np.ndarray:
    """Unnormalized Laplacian ``D - S`` of the binary p-NN graph on rows.

    Neighbors by Euclidean distance, symmetrized by logical OR. Ties in the
    distance ranking break toward the lower row index, so the graph is
    reproducible.
    """
    x = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=np.float64)
    n_samples = x.shape[0]
    if not 1 <= p < n_samples:
        raise ValueError(f"neighbor count p={p} must satisfy 1 <= p < {n_samples}")
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :p]
    s = np.zeros((n_samples, n_samples))
    rows = np.repeat(np.arange(n_samples), p)
    s[rows, order.ravel()] = 1.0
    s = np.maximum(s, s.T)
    lap = np.diag(s.sum(axis=1)) - s
    return lap


def _kmeans_pp_centers(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.einsum("ij,ij->i", x - centers[0], x - centers[0])
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i:] = x[rng.integers(n, size=k - i)]
            break
        probs = d2 / total
        centers[i] = x[rng.choice(n, p=probs)]
        cand = np.einsum("ij,ij->i", x - centers[i], x - centers[i])
        np.minimum(d2, cand, out=d2)
    return centers


def _lloyd(x, centers, max_iter):
    k = centers.shape[0]
    labels = np.full(x.shape[0], -1)
    for _ in range(max_iter):
        d2 = np.einsum("ij,ij->i", x, x)[:, None] \
            + np.einsum("ij,ij->i", centers, centers)[None, :] - 2.0 * (x @ centers.T)
        new_labels = d2.argmin(axis=1)
        if (new_labels == labels).all():
            break
        labels = new_labels
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                # deterministic repair: grab the point farthest from its center
                far = d2[np.arange(len(labels)), labels].argmax()
                centers[c] = x[far]
                labels[far] = c
    wcss = float(((x - centers[labels]) ** 2).sum())
    return labels, wcss


def kmeans(x, k: int, seed: int = 0, restarts: int = 10,
           max_iter: int = 300) -> np.ndarray:
    """K-means with k-means++ seeding; best of ``restarts`` runs by WCSS.

    Deterministic for a fixed seed: restart streams are spawned from it.
    """
    x = np.asarray(x, dtype=np.float64)
    if not 1 <= k <= x.shape[0]:
        raise ValueError(f"k={k} must satisfy 1 <= k <= {x.shape[0]}")
    best_labels, best_wcss = None, math.inf
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.Generator(np.random.PCG64(child))
        centers = _kmeans_pp_centers(x, k, rng)
        labels, wcss = _lloyd(x, centers, max_iter)
        if wcss < best_wcss:
            best_labels, best_wcss = labels, wcss
    return best_labels


def hungarian(cost) -> np.ndarray:
    """Minimum-cost assignment of a square cost matrix.

    Returns the permutation ``p`` with row ``i`` assigned to column ``p[i]``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")
    _, cols = scipy.optimize.linear_sum_assignment(cost)
    return cols


def clustering_accuracy(pred, truth) -> float:
    """Percent agreement under the best one-to-one label matching."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError("label vectors must have equal length")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    k = max(pi.max(), ti.max()) + 1
    confusion = np.zeros((k, k))
    np.add.at(confusion, (pi, ti), 1.0)
    perm = hungarian(-confusion)
    matched = confusion[np.arange(k), perm].sum()
    return 100.0 * float(matched) / pred.size


def nnls(a, b, max_iter: int = 500, tol: float = 1e-10) -> np.ndarray:
    """Nonnegative least squares ``min_{X >= 0} ||A X - B||_F``.

    Accelerated projected gradient with step ``1 / ||A^T A||_2``; stops when
    the gradient-mapping norm drops below ``tol`` or after ``max_iter``
    iterations.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    gram = a.T @ a
    lip = float(max(np.linalg.eigvalsh(gram)[-1], 0.0))
    x = np.zeros((a.shape[1], b.shape[1]))
    if lip == 0.0:
        return x
    step = 1.0 / lip
    atb = a.T @ b
    y = x
    t = 1.0
    for _ in range(max_iter):
        grad_y = gram @ y - atb
        x_new = np.maximum(y - step * grad_y, 0.0)
        grad_x = gram @ x_new - atb
        gmap = (x_new - np.maximum(x_new - step * grad_x, 0.0)) / step
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        if float(np.linalg.norm(gmap)) <= tol:
            break
    return x


def tol_nmf(m, u, v) -> float:
    """Downstream reconstruction error ``min_{X>=0} ||M - max(0,UV) X|| / ||M||``."""
    if sp.issparse(m):
        m = m.toarray()
    m = np.asarray(m, dtype=np.float64)
    m_norm = float(np.linalg.norm(m))
    if m_norm == 0.0:
        raise ValueError("tol_nmf undefined for a zero data matrix")
    basis = np.maximum(u @ v, 0.0)
    coeff = nnls(basis, m)
    return float(np.linalg.norm(m - basis @ coeff)) / m_norm


def cluster_pipeline(obs: ObservedMatrix, truth_labels, r: int,
                     mu0: float = 100.0, eta1: float = 0.1, eta2: float = 0.1,
                     opts: SolveOptions | None = None,
                     neighbors: int = 5) -> ClusterResult:
    """Graph-regularized factorization followed by K-means on the left factor."""
    truth_labels = np.asarray(truth_labels).ravel()
    if truth_labels.size != obs.shape[0]:
        raise ValueError("truth labels must have one entry per sample row")
    if opts is None:
        opts = SolveOptions(rank=r, max_iter=100, tol=0.0)
    else:
        opts = dataclasses.replace(opts, rank=r)
    lap = knn_graph_laplacian(obs.data, neighbors)
    case = RegularizerCase.graph_tikhonov(eta1, eta2, mu0, lap)
    pair, _ = nmd_aapb(obs, case, opts)
    k = int(np.unique(truth_labels).size)
    labels = kmeans(pair.u, k, seed=opts.seed, restarts=10)
    acc = clustering_accuracy(labels, truth_labels)
    return ClusterResult(labels=labels, accuracy_percent=acc, factor=pair)


def compress_pipeline(u_tilde, r_prime: int, s2: int,
                      opts: SolveOptions | None = None,
                      data=None, callback=None) -> CompressionResult:
    """Compress a nonnegative basis to inner rank ``r_prime`` with per-column
    cardinality ``s2`` on the mixing factor.

    ``data`` (the matrix the basis came from) enables the downstream
    reconstruction metric; without it only the ReLU error is reported.
    """
    if sp.issparse(u_tilde):
        u_tilde = u_tilde.toarray()
    u_tilde = np.asarray(u_tilde, dtype=np.float64)
    r = u_tilde.shape[1]
    if r_prime > r:
        raise ValueError(f"inner rank r'={r_prime} cannot exceed basis rank {r}")
    obs = build_observed(u_tilde)
    if opts is None:
        opts = SolveOptions(rank=r_prime, max_iter=1000, tol=0.0)
    else:
        opts = dataclasses.replace(opts, rank=r_prime)
    case = RegularizerCase.sparsity(s1=None, s2=s2, s_scope="per-column")
    pair, _ = nmd_aapb(obs, case, opts, callback=callback)
    t_nmd = relative_error(obs, pair)
    t_nmf = None if data is None else tol_nmf(data, pair.u, pair.v)
    return CompressionResult(factor=pair, tol_nmd=t_nmd, tol_nmf=t_nmf)
