"""Graph construction and spectral machinery.

Affinities here are dense ``n x n`` float64 arrays.  The Laplacian is the
unnormalized ``L = D - W``; the random-walk matrix is ``P = D^-1 W``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit
from .numkit import as_mat

ZERO_EIG_REL_TOL = 1e-10


@dataclass(frozen=True)
class GraphConfig:
    """Settings for the local-scaled Gaussian affinity used by spectral clustering."""

    n_neighbors: int = 7
    scale_percentile: float = 20.0
    scale_floor: float = 1e-7
    metric: str = "euclidean"
    kmeans_restarts: int = 10


def check_affinity(w, name="w", sym_tol=1e-12):
    w = as_mat(w, name)
    if w.shape[0] != w.shape[1]:
        raise ValueError(f"{name} must be square, got {w.shape}")
    if np.any(w < 0):
        raise ValueError(f"{name} has negative entries")
    if np.max(np.abs(w - w.T)) > sym_tol:
        raise ValueError(f"{name} is not symmetric")
    return w


def laplacian(w):
    w = check_affinity(w)
    return np.diag(w.sum(axis=1)) - w


def random_walk_matrix(w):
    """Row-normalize a nonnegative matrix; zero-degree rows become self-loops."""
    w = as_mat(w, "w")
    if np.any(w < 0):
        raise ValueError("random walk needs nonnegative weights")
    deg = w.sum(axis=1)
    p = np.zeros_like(w)
    live = deg > 0
    p[live] = w[live] / deg[live, None]
    for i in np.flatnonzero(~live):
        if i >= w.shape[1]:
            raise ValueError(f"row {i} has zero degree and no self column to fall back on")
        p[i, i] = 1.0
    return p


def sample_rows(p, seed):
    """Draw one column index per row of a row-stochastic matrix (inverse CDF)."""
    p = as_mat(p, "p")
    rng = np.random.default_rng(seed)
    u = rng.random(p.shape[0])
    cum = np.cumsum(p, axis=1)
    out = np.empty(p.shape[0], dtype=np.int64)
    for i in range(p.shape[0]):
        row = cum[i]
        j = int(np.searchsorted(row, u[i] * row[-1], side="right"))
        if j >= p.shape[1]:
            j = int(np.flatnonzero(p[i] > 0)[-1])
        out[i] = j
    return out


def _null_space_without_constant(vecs):
    """Orthonormal basis of span(vecs) orthogonal to the constant vector.

    ``vecs`` (n x c) spans a space that contains the constant direction; a
    Householder reflection in coefficient space maps that direction to the
    first basis vector, and the remaining c - 1 columns are returned.
    """
    n, c = vecs.shape
    u = np.full(n, 1.0 / np.sqrt(n))
    a = vecs.T @ u
    a /= np.linalg.norm(a)
    e1 = np.zeros(c)
    e1[0] = 1.0
    sign = 1.0 if a[0] >= 0 else -1.0
    h_vec = a + sign * e1
    h = np.eye(c) - 2.0 * np.outer(h_vec, h_vec) / (h_vec @ h_vec)
    return vecs @ h[:, 1:]


def spectral_embed(w, dim, include_trivial=False):
    """Eigenvectors of the graph Laplacian for the smallest eigenvalues.

    The constant eigenvector is dropped unless ``include_trivial``.  When the
    graph is disconnected, the zero eigenspace is re-based so that the
    constant vector is one of its basis vectors; the remaining basis vectors
    separate components.
    """
    w = check_affinity(w)
    n = w.shape[0]
    if not 1 <= dim < n:
        raise ValueError(f"dim must be in [1, {n - 1}], got {dim}")
    eig = numkit.symmetric_eig(laplacian(w))
    vals, vecs = eig.values, eig.vectors
    top = max(float(np.max(np.abs(vals))), 0.0)
    n_zero = int(np.sum(vals <= ZERO_EIG_REL_TOL * top)) if top > 0 else n
    n_zero = max(n_zero, 1)

    const = np.full((n, 1), 1.0 / np.sqrt(n))
    if n_zero > 1:
        null_rest = _null_space_without_constant(vecs[:, :n_zero])
    else:
        null_rest = np.empty((n, 0))
    parts = [null_rest, vecs[:, n_zero:]]
    if include_trivial:
        parts.insert(0, const)
    basis = np.hstack(parts)[:, :dim]
    return numkit.canonical_signs(basis)


def spectralnet_loss(w, y):
    """(1/n^2) * sum_ij W_ij ||y_i - y_j||^2."""
    w = as_mat(w, "w")
    y = as_mat(y, "y")
    n = w.shape[0]
    if w.shape != (n, n) or y.shape[0] != n:
        raise ValueError(f"shape mismatch: w {w.shape}, y {y.shape}")
    sq = np.einsum("ij,ij->i", y, y)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (y @ y.T), 0.0)
    return float(np.sum(w * d2) / n**2)


def orthogonality_residual(y):
    """Frobenius norm of (1/n) Y^T Y - I."""
    y = as_mat(y, "y")
    n, k = y.shape
    return float(np.linalg.norm(y.T @ y / n - np.eye(k)))


def local_scaled_affinity(x, cfg=GraphConfig()):
    """Symmetric k-NN Gaussian affinity with nearest-neighbor-shifted local scales.

    Each row keeps its ``n_neighbors`` nearest other points; distances are
    shifted by the row's nearest distance, the bandwidth is the configured
    percentile of the shifted distances (floored), and the directed weights
    are symmetrized by elementwise maximum.
    """
    x = as_mat(x, "x")
    n = x.shape[0]
    if n < 2:
        return np.zeros((n, n))
    k = min(cfg.n_neighbors, n - 1)
    d = numkit.square_from_condensed(numkit.pairwise_distance(x, metric=cfg.metric))
    np.fill_diagonal(d, np.inf)
    idx = np.argsort(d, axis=1, kind="stable")[:, :k]
    nd = np.take_along_axis(d, idx, axis=1)
    adj = nd - nd[:, :1]
    scale = np.maximum(percentile_rows(adj, cfg.scale_percentile), cfg.scale_floor)
    vals = np.exp(-(adj**2) / scale[:, None] ** 2)
    w = np.zeros((n, n))
    np.put_along_axis(w, idx, vals, axis=1)
    return np.maximum(w, w.T)


def percentile_rows(a, q):
    """Row-wise percentile with linear interpolation between order statistics."""
    s = np.sort(a, axis=1)
    pos = (s.shape[1] - 1) * (q / 100.0)
    lo = int(np.floor(pos))
    hi = min(lo + 1, s.shape[1] - 1)
    frac = pos - lo
    return s[:, lo] + (s[:, hi] - s[:, lo]) * frac


def spectral_clustering(x, k, graph_cfg=GraphConfig(), seed=0):
    """Unnormalized spectral clustering: Laplacian eigenvectors then k-means."""
    x = as_mat(x, "x")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    w = local_scaled_affinity(x, graph_cfg)
    dim = min(k, n - 1)
    emb = spectral_embed(w, dim, include_trivial=True)
    return numkit.kmeans(emb, k, restarts=graph_cfg.kmeans_restarts, seed=seed).labels
