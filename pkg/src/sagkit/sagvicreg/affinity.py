"""Cross-batch affinity between two embedding views and random-walk pairing.

The affinity is built in four steps: cosine k-nearest neighbors with the
nearest distance subtracted, a per-row bandwidth from a percentile of the
shifted distances, a Gaussian kernel, and masking of non-neighbors.
"""

from __future__ import annotations

import numpy as np

from .. import graphspec, numkit


def neighbor_distances(z, z2, k):
    """Indices and cosine distances of each row's ``k`` nearest rows of ``z2``.

    Returns ``(idx, dist, shifted)``, each ``(n, k)`` and sorted by distance;
    ``shifted`` has the row's nearest distance subtracted.
    """
    d = numkit.pairwise_distance(z, z2, metric="cosine")
    if not 1 <= k <= d.shape[1]:
        raise ValueError(f"k_neighbors={k} must be in [1, {d.shape[1]}]")
    idx = np.argsort(d, axis=1, kind="stable")[:, :k]
    dist = np.take_along_axis(d, idx, axis=1)
    return idx, dist, dist - dist[:, :1]


def local_scale(shifted, percentile=20.0, floor=1e-7):
    return np.maximum(graphspec.percentile_rows(shifted, percentile), floor)


def gaussian_kernel(shifted, scale):
    return np.exp(-(shifted**2) / scale[:, None] ** 2)


def mask_to_neighbors(values, idx, n_cols):
    w = np.zeros((values.shape[0], n_cols))
    np.put_along_axis(w, idx, values, axis=1)
    return w


def batch_affinity(z, z2, cfg):
    """Dense ``(n, n)`` affinity from rows of ``z`` to rows of ``z2``."""
    idx, _, shifted = neighbor_distances(z, z2, cfg.k_neighbors)
    scale = local_scale(shifted, cfg.scale_percentile, cfg.scale_floor)
    return mask_to_neighbors(gaussian_kernel(shifted, scale), idx, z2.shape[0])


def sample_pairs(w, seed):
    """Pick one partner column per row by a random-walk step on ``w``.

    Returns the chosen indices and the affinity at each chosen coordinate.
    """
    w = numkit.as_mat(w, "w")
    p = graphspec.random_walk_matrix(w)
    idx = graphspec.sample_rows(p, seed)
    return idx, w[np.arange(w.shape[0]), idx]
