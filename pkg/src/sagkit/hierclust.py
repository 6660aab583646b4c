"""Agglomerative clustering, dendrograms, and cophenetic / LCA distances."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import numkit

LINKAGES = ("ward", "average", "complete", "single")
LCA_MODES = ("hops", "height")


@dataclass(frozen=True)
class Dendrogram:
    """Merge table over ``n_leaves`` leaves.

    Row ``r`` of ``merges`` is ``(left_id, right_id, height, size)`` and
    creates internal node ``n_leaves + r``.  Leaves are ``0 .. n_leaves-1``.
    """

    n_leaves: int
    merges: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.merges, dtype=np.float64)
        if m.shape != (self.n_leaves - 1, 4):
            raise ValueError(f"expected {self.n_leaves - 1} merges, got shape {m.shape}")
        object.__setattr__(self, "merges", m)

    @property
    def heights(self):
        return self.merges[:, 2]

    def children(self, r):
        return int(self.merges[r, 0]), int(self.merges[r, 1])

    def validate(self):
        n = self.n_leaves
        size = np.ones(2 * n - 1, dtype=np.int64)
        used = np.zeros(2 * n - 1, dtype=bool)
        for r in range(n - 1):
            a, b = self.children(r)
            for c in (a, b):
                if not 0 <= c < n + r:
                    raise ValueError(f"merge {r} references unknown node {c}")
                if used[c]:
                    raise ValueError(f"node {c} consumed twice")
                used[c] = True
            size[n + r] = size[a] + size[b]
            if size[n + r] != int(self.merges[r, 3]):
                raise ValueError(f"merge {r} has wrong size")
        if np.any(np.diff(self.heights) < 0):
            raise ValueError("merge heights decrease")
        return self

    def mirrored(self):
        """Same tree with left and right children swapped at every merge."""
        m = self.merges.copy()
        m[:, [0, 1]] = m[:, [1, 0]]
        return Dendrogram(self.n_leaves, m)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["left", "right", "height", "size"])
        for a, b, h, s in self.merges:
            w.writerow([int(a), int(b), repr(float(h)), int(s)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["left", "right", "height", "size"]:
            raise ValueError("dendrogram CSV must start with header left,right,height,size")
        body = [r for r in rows[1:] if r]
        merges = np.array([[float(c) for c in r] for r in body], dtype=np.float64).reshape(-1, 4)
        return cls(len(body) + 1, merges).validate()


def _lance_williams(kind, d_ki, d_kj, d_ij, n_i, n_j, n_k):
    if kind == "single":
        return np.minimum(d_ki, d_kj)
    if kind == "complete":
        return np.maximum(d_ki, d_kj)
    if kind == "average":
        return (n_i * d_ki + n_j * d_kj) / (n_i + n_j)
    # ward, on squared distances
    tot = n_i + n_j + n_k
    return ((n_i + n_k) * d_ki + (n_j + n_k) * d_kj - n_k * d_ij) / tot


def agglomerate(x, metric="cosine", linkage="ward"):
    """Naive O(n^3) agglomerative clustering with Lance-Williams updates.

    Ward runs its recurrence on squared distances of the chosen metric and
    reports heights back in distance units.  The closest active pair is merged
    at each step; ties go to the lexicographically smallest slot pair, where a
    merged cluster occupies the smaller slot of its two children.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    x = numkit.as_mat(x, "x")
    n = x.shape[0]
    if n < 2:
        raise ValueError("agglomerative clustering needs at least 2 points")
    d = numkit.square_from_condensed(numkit.pairwise_distance(x, metric=metric))
    return agglomerate_distances(d, linkage)


def agglomerate_distances(d, linkage="ward"):
    """Agglomerate from a full symmetric distance matrix."""
    d = np.array(d, dtype=np.float64)
    n = d.shape[0]
    ward = linkage == "ward"
    if ward:
        d = d * d
    np.fill_diagonal(d, np.inf)
    active = np.ones(n, dtype=bool)
    node_id = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    merges = np.empty((n - 1, 4))

    for r in range(n - 1):
        flat = int(np.argmin(d))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        dij = d[i, j]
        height = np.sqrt(dij) if ward else dij
        a, b = sorted((node_id[i], node_id[j]))
        merges[r] = (a, b, height, size[i] + size[j])

        others = active.copy()
        others[[i, j]] = False
        upd = _lance_williams(linkage, d[i, others], d[j, others], dij, size[i], size[j], size[others])
        # monotone linkages never merge below the pair just merged
        upd = np.maximum(upd, dij)
        d[i, others] = upd
        d[others, i] = upd
        d[j, :] = np.inf
        d[:, j] = np.inf
        active[j] = False
        size[i] += size[j]
        node_id[i] = n + r
    return Dendrogram(n, merges)


def _members(dend):
    n = dend.n_leaves
    members = [np.array([i]) for i in range(n)]
    for r in range(n - 1):
        a, b = dend.children(r)
        members.append(np.concatenate([members[a], members[b]]))
    return members


def cophenetic_distances(dend):
    """Condensed vector of merge heights at which each leaf pair first joins."""
    n = dend.n_leaves
    out = np.zeros((n, n))
    members = _members(dend)
    for r in range(n - 1):
        a, b = dend.children(r)
        out[np.ix_(members[a], members[b])] = dend.merges[r, 2]
    out = np.maximum(out, out.T)
    return numkit.condensed_from_square(out)


def lca_distances(dend, mode="hops"):
    """Per-pair distance through the lowest common ancestor.

    ``hops`` counts tree edges on the path leaf_i -> LCA -> leaf_j;
    ``height`` is the LCA merge height (the cophenetic distance).
    """
    if mode not in LCA_MODES:
        raise ValueError(f"unknown LCA mode {mode!r}; expected one of {LCA_MODES}")
    if mode == "height":
        return cophenetic_distances(dend)
    n = dend.n_leaves
    out = np.zeros((n, n))
    depth = np.zeros(n, dtype=np.int64)
    members = _members(dend)
    for r in range(n - 1):
        a, b = dend.children(r)
        la, lb = members[a], members[b]
        out[np.ix_(la, lb)] = (depth[la] + 1)[:, None] + (depth[lb] + 1)[None, :]
        depth[la] += 1
        depth[lb] += 1
    out = np.maximum(out, out.T)
    return numkit.condensed_from_square(out)
