"""Dense numerical kernel: matrix validation, pairwise distances, a Jacobi
symmetric eigensolver, seeded k-means++ and rank utilities.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.  Condensed
distance vectors follow the usual upper-triangle, row-major layout: the pair
``(i, j)`` with ``i < j`` lives at ``i*n - i*(i+1)//2 + (j - i - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from .errors import ConvergenceError, DegenerateInputError

METRICS = ("cosine", "euclidean")

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12


def as_mat(x, name="x"):
    """Validate and convert ``x`` to a C-contiguous 2-D float64 array."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


# ---------------------------------------------------------------------------
# condensed distance vectors
# ---------------------------------------------------------------------------


def condensed_size(n):
    return n * (n - 1) // 2


def condensed_index(n, i, j):
    """Position of pair (i, j), i != j, in a condensed vector over n items."""
    if i == j:
        raise ValueError("condensed vectors hold no diagonal entries")
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def n_from_condensed(m):
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
    if condensed_size(n) != m:
        raise ValueError(f"length {m} is not a valid condensed size")
    return n


def condensed_from_square(d):
    d = np.asarray(d, dtype=np.float64)
    iu = np.triu_indices(d.shape[0], k=1)
    return d[iu].copy()


def square_from_condensed(c):
    c = np.asarray(c, dtype=np.float64)
    n = n_from_condensed(c.size)
    out = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    out[iu] = c
    out[iu[1], iu[0]] = c
    return out


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def _unit_rows(x, name):
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise DegenerateInputError(
            f"cosine distance undefined: row {int(bad[0])} of {name} has zero norm"
        )
    return x / norms[:, None]


def pairwise_distance(x, y=None, metric="cosine"):
    """Pairwise distances between rows.

    With ``y`` given, returns the full ``(len(x), len(y))`` matrix.  Without it,
    returns the condensed self-distance vector of ``x``.  Cosine distance is
    ``1 - cos`` clipped to ``[0, 2]``.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    x = as_mat(x, "x")
    self_pairs = y is None
    y = x if self_pairs else as_mat(y, "y")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: x has {x.shape[1]} columns, y has {y.shape[1]}")

    if metric == "cosine":
        xu = _unit_rows(x, "x")
        yu = xu if self_pairs else _unit_rows(y, "y")
        d = np.clip(1.0 - xu @ yu.T, 0.0, 2.0)
    else:
        d = cdist(x, y, metric="euclidean")

    if self_pairs:
        return condensed_from_square(d)
    return d


# ---------------------------------------------------------------------------
# symmetric eigendecomposition (cyclic Jacobi)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigDecomp:
    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = np.sqrt(scale)
    if scale == 0.0:
        return 0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if np.sqrt(2.0 * off) <= tol * scale:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


def canonical_signs(vectors, rel_tol=1e-12):
    """Flip each column so its largest-magnitude entry is positive.

    Entries within ``rel_tol`` of the column maximum count as tied; the
    lowest index among them decides.
    """
    out = np.array(vectors, dtype=np.float64, copy=True)
    mags = np.abs(out)
    for j in range(out.shape[1]):
        col = mags[:, j]
        top = col.max()
        if top == 0.0:
            continue
        lead = int(np.flatnonzero(col >= top * (1.0 - rel_tol))[0])
        if out[lead, j] < 0:
            out[:, j] = -out[:, j]
    return out


def symmetric_eig(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Full eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in ascending order with orthonormal eigenvectors as
    columns, each oriented so its largest-magnitude component is positive.
    """
    a = as_mat(a, "a")
    n, m = a.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {a.shape}")
    asym = np.max(np.abs(a - a.T))
    if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(a)))):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")

    work = 0.5 * (a + a.T)
    v = np.eye(n)
    sweeps = _jacobi_sweeps(work, v, float(tol), int(max_sweeps))
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    values = np.diag(work).copy()
    order = np.argsort(values, kind="stable")
    return EigDecomp(values=values[order], vectors=canonical_signs(v[:, order]), sweeps=sweeps)


# ---------------------------------------------------------------------------
# seeded generator + k-means
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


class XorShift64Star:
    """xorshift64* generator, seeded through splitmix64 so any integer seed works."""

    def __init__(self, seed):
        z = (int(seed) + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        self.state = z or 0x2545F4914F6CDD1D

    def next_u64(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def random(self):
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n):
        return int(self.random() * n) % n


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_history: list = field(default_factory=list)


def _sq_dists(x, c):
    diff = x[:, None, :] - c[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _plus_plus_init(x, k, rng):
    n = x.shape[0]
    centers = [rng.randbelow(n)]
    closest = _sq_dists(x, x[centers[0]][None, :])[:, 0]
    for _ in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            idx = rng.randbelow(n)
        else:
            cum = np.cumsum(closest)
            idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            idx = min(idx, n - 1)
            while closest[idx] == 0.0 and idx > 0:
                idx -= 1
        centers.append(idx)
        closest = np.minimum(closest, _sq_dists(x, x[idx][None, :])[:, 0])
    return x[centers].copy()


def _lloyd(x, centroids, max_iter):
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = _sq_dists(x, centroids)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(x.shape[0]), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(centroids.shape[0]):
            members = labels == j
            if members.any():
                centroids[j] = x[members].mean(axis=0)
    return labels, centroids, history


def kmeans(x, k, restarts=10, seed=0, max_iter=300):
    """Lloyd's k-means with k-means++ seeding; best inertia over ``restarts`` runs."""
    x = as_mat(x, "x")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = XorShift64Star(seed)
    best = None
    for _ in range(restarts):
        init = _plus_plus_init(x, k, rng)
        labels, centroids, history = _lloyd(x, init, max_iter)
        inertia = history[-1]
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels.astype(np.int64), centroids, inertia, history)
    return best


def rank_transform(v):
    """Average ranks (1-based); tied values share the mean of their rank block."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot rank an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("rank_transform requires finite values")
    return rankdata(v, method="average").astype(np.float64)
