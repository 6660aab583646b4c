"""Label-free structural comparison of embedding sets, plus label-based
hierarchical protocols (Rand index per hierarchy level, hierarchical k-NN).

The structural comparison builds a dendrogram over each of two row-aligned
embedding sets, correlates their LCA distances (Pearson, Spearman, Kendall
tau-b) and cross-correlates each tree's cophenetic distances with the other
set's raw pairwise distances.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import kendalltau

from . import graphspec, hierclust, numkit
from .errors import UndefinedCorrelationError

KINDS = ("pearson", "spearman", "kendall")


# ---------------------------------------------------------------------------
# correlations
# ---------------------------------------------------------------------------


def _check_pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("correlation needs at least 2 values")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("correlation inputs must be finite")
    for name, v in (("x", x), ("y", y)):
        if np.all(v == v[0]):
            raise UndefinedCorrelationError(f"correlation undefined: {name} has zero variance")
    return x, y


def _pearson(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined: zero variance after centering")
    r = float(xc @ yc) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def correlation(x, y, kind="pearson"):
    """Pearson, Spearman (Pearson on average ranks) or Kendall tau-b."""
    if kind not in KINDS:
        raise ValueError(f"unknown correlation kind {kind!r}; expected one of {KINDS}")
    x, y = _check_pair(x, y)
    if kind == "pearson":
        return _pearson(x, y)
    if kind == "spearman":
        return _pearson(numkit.rank_transform(x), numkit.rank_transform(y))
    tau = kendalltau(x, y, variant="b").statistic
    return float(np.clip(tau, -1.0, 1.0))


def cophenetic_correlation(t, d):
    """Pearson correlation between cophenetic distances and raw distances."""
    t = np.asarray(t, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if t.shape != d.shape:
        raise ValueError(f"condensed vectors differ in length: {t.size} vs {d.size}")
    return correlation(t, d, "pearson")


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


def _pairs(counts):
    return sum(c * (c - 1) // 2 for c in counts)


def rand_index(a, b):
    """Fraction of item pairs on which two partitions agree.

    Computed from the contingency table in exact integer arithmetic:
    agreements = C(n,2) + 2*sum C(n_ij,2) - sum C(a_i,2) - sum C(b_j,2).
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise ValueError(f"partition length mismatch: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ValueError("rand index needs at least 2 items")
    joint = Counter(zip(a.tolist(), b.tolist()))
    total = n * (n - 1) // 2
    agree = (
        total
        + 2 * _pairs(joint.values())
        - _pairs(Counter(a.tolist()).values())
        - _pairs(Counter(b.tolist()).values())
    )
    return agree / total


# ---------------------------------------------------------------------------
# label hierarchies
# ---------------------------------------------------------------------------


@dataclass
class Hierarchy:
    """Per-item labels at each level, level 0 in ``levels`` being the coarsest.

    ``parents[l]`` maps a label at level ``l + 1`` to its parent at level
    ``l``.  ``names[l]`` holds the original label strings, indexed by code.
    """

    levels: list
    parents: list = field(default_factory=list)
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.levels = [np.asarray(lv, dtype=np.int64) for lv in self.levels]
        if not self.levels:
            raise ValueError("hierarchy needs at least one level")
        n = self.levels[0].size
        if any(lv.size != n for lv in self.levels):
            raise ValueError("all hierarchy levels must label the same items")
        if not self.parents:
            self.parents = [_parent_map(c, f) for c, f in zip(self.levels[:-1], self.levels[1:])]

    @property
    def n_items(self):
        return self.levels[0].size

    @property
    def n_levels(self):
        return len(self.levels)

    @property
    def finest(self):
        return self.levels[-1]

    def n_classes(self, level):
        return int(np.unique(self.levels[level]).size)

    def coarsen(self, finest_labels, level):
        """Map finest-level labels up to ``level`` (0 = coarsest)."""
        out = np.asarray(finest_labels, dtype=np.int64).copy()
        for lv in range(self.n_levels - 2, level - 1, -1):
            pmap = self.parents[lv]
            out = np.array([pmap[int(c)] for c in out], dtype=np.int64)
        return out

    def subset(self, rows):
        rows = np.asarray(rows)
        return Hierarchy([lv[rows] for lv in self.levels], self.parents, self.names)

    @classmethod
    def from_csv(cls, text):
        """Parse ``item_id,level1,...,levelL`` (level1 coarsest) with a header row."""
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if len(rows) < 2:
            raise ValueError("hierarchy CSV needs a header and at least one item")
        header = [c.strip() for c in rows[0]]
        if len(header) < 2 or header[0] != "item_id":
            raise ValueError("hierarchy CSV header must be item_id,level1,...")
        n_levels = len(header) - 1
        ids = []
        raw = [[] for _ in range(n_levels)]
        for lineno, r in enumerate(rows[1:], start=2):
            if len(r) != n_levels + 1:
                raise ValueError(f"line {lineno}: expected {n_levels + 1} fields, got {len(r)}")
            ids.append(r[0].strip())
            for lv in range(n_levels):
                raw[lv].append(r[lv + 1].strip())
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate item_id in hierarchy CSV")
        levels, names = [], []
        for col in raw:
            codes = {}
            levels.append([codes.setdefault(v, len(codes)) for v in col])
            names.append(list(codes))
        return cls(levels, names=names)


def _parent_map(coarse, fine):
    pmap = {}
    for c, f in zip(coarse.tolist(), fine.tolist()):
        if pmap.setdefault(f, c) != c:
            raise ValueError(f"inconsistent hierarchy: class {f} has more than one parent")
    return pmap


def hierarchical_rand(x, h, seed=0, graph_cfg=graphspec.GraphConfig()):
    """Rand index of spectral clustering vs labels, one value per hierarchy level."""
    x = numkit.as_mat(x, "x")
    if x.shape[0] != h.n_items:
        raise ValueError(f"{x.shape[0]} rows but hierarchy labels {h.n_items} items")
    out = []
    for lv in range(h.n_levels):
        labels = h.levels[lv]
        pred = graphspec.spectral_clustering(x, h.n_classes(lv), graph_cfg, seed)
        out.append(rand_index(pred, labels))
    return out


def rand_sweep(x, labels, cluster_counts, seed=0, graph_cfg=graphspec.GraphConfig()):
    """Rand index against fixed labels while the cluster count varies."""
    x = numkit.as_mat(x, "x")
    labels = np.asarray(labels)
    if labels.size != x.shape[0]:
        raise ValueError(f"{x.shape[0]} rows but {labels.size} labels")
    return [
        (int(k), rand_index(graphspec.spectral_clustering(x, int(k), graph_cfg, seed), labels))
        for k in cluster_counts
    ]


def knn_hierarchical_classify(train, train_labels, test, h, k=5):
    """Per-level accuracy of cosine k-NN prediction of the finest label.

    ``h`` labels the test rows.  Votes tie-break toward the label of the
    nearest neighbor among the tied labels; coarse predictions are the
    coarsened finest prediction.
    """
    train = numkit.as_mat(train, "train")
    test = numkit.as_mat(test, "test")
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if train_labels.size != train.shape[0]:
        raise ValueError("train labels do not match train rows")
    if test.shape[0] != h.n_items:
        raise ValueError("test rows do not match hierarchy items")
    if not 1 <= k <= train.shape[0]:
        raise ValueError(f"k must be in [1, {train.shape[0]}], got {k}")
    d = numkit.pairwise_distance(test, train, metric="cosine")
    nn = np.argsort(d, axis=1, kind="stable")[:, :k]
    pred = np.empty(test.shape[0], dtype=np.int64)
    for i, row in enumerate(nn):
        votes = Counter()
        first_seen = {}
        for rank, j in enumerate(row):
            lab = int(train_labels[j])
            votes[lab] += 1
            first_seen.setdefault(lab, rank)
        top = max(votes.values())
        pred[i] = min((lab for lab, v in votes.items() if v == top), key=first_seen.__getitem__)
    return [
        float(np.mean(h.coarsen(pred, lv) == h.levels[lv])) for lv in range(h.n_levels)
    ]


# ---------------------------------------------------------------------------
# structural similarity between two embedding sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityConfig:
    linkage: str = "ward"
    metric: str = "cosine"
    lca_mode: str = "hops"
    # subsample this many leaf pairs when C(n,2) exceeds it; None = all pairs
    max_pairs: int | None = None
    seed: int = 0


@dataclass
class SimilarityReport:
    lca_pearson: float
    lca_spearman: float
    lca_kendall: float
    coph_d1_to_p2: float
    coph_d2_to_p1: float
    n: int
    linkage: str
    metric: str
    lca_mode: str
    n_pairs: int

    def statistics(self):
        return (
            self.lca_pearson,
            self.lca_spearman,
            self.lca_kendall,
            self.coph_d1_to_p2,
            self.coph_d2_to_p1,
        )

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def lca_similarity(da, db, mode="hops", pairs=None):
    """(pearson, spearman, kendall) between LCA distances of two index-aligned trees."""
    if da.n_leaves != db.n_leaves:
        raise ValueError(f"leaf counts differ: {da.n_leaves} vs {db.n_leaves}")
    la = hierclust.lca_distances(da, mode)
    lb = hierclust.lca_distances(db, mode)
    if pairs is not None:
        la, lb = la[pairs], lb[pairs]
    return tuple(correlation(la, lb, kind) for kind in KINDS)


def structural_similarity(a, b, cfg=SimilarityConfig()):
    a = numkit.as_mat(a, "a")
    b = numkit.as_mat(b, "b")
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"row counts differ: {n} vs {b.shape[0]}")
    if n < 3:
        raise ValueError("structural similarity needs at least 3 rows")

    pa = numkit.pairwise_distance(a, metric=cfg.metric)
    pb = numkit.pairwise_distance(b, metric=cfg.metric)
    da = hierclust.agglomerate_distances(numkit.square_from_condensed(pa), cfg.linkage)
    db = hierclust.agglomerate_distances(numkit.square_from_condensed(pb), cfg.linkage)

    total = numkit.condensed_size(n)
    pairs = None
    if cfg.max_pairs is not None and cfg.max_pairs < total:
        rng = np.random.default_rng(cfg.seed)
        pairs = np.sort(rng.choice(total, size=cfg.max_pairs, replace=False))

    def sel(v):
        return v if pairs is None else v[pairs]

    lp, ls, lk = lca_similarity(da, db, cfg.lca_mode, pairs)
    return SimilarityReport(
        lca_pearson=lp,
        lca_spearman=ls,
        lca_kendall=lk,
        coph_d1_to_p2=cophenetic_correlation(sel(hierclust.cophenetic_distances(da)), sel(pb)),
        coph_d2_to_p1=cophenetic_correlation(sel(hierclust.cophenetic_distances(db)), sel(pa)),
        n=n,
        linkage=cfg.linkage,
        metric=cfg.metric,
        lca_mode=cfg.lca_mode,
        n_pairs=total if pairs is None else int(pairs.size),
    )
