"""Synthetic unseen-cluster experiment: train on some clusters, embed them all.

Each cluster's points are split alternately into a training pool and a test
pool.  Each variant is trained twice from the same initialization: once on
the training pool of the seen clusters only, and once on the training pool
of all clusters as a reference.  Every test point is then embedded.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from ..structmetrics import SimilarityConfig, SimilarityReport, structural_similarity
from .losses import VicregConfig
from .model import ToyEncoder
from .synth import SynthConfig, synth_generate
from .train import DEFAULT_BATCH, DEFAULT_LR, VARIANTS, train

DEFAULT_EXPERIMENT_SYNTH = SynthConfig(
    n_clusters=6, points_per_cluster=128, cluster_std=0.25, augment_std=0.1
)


@dataclass
class VariantDistortion:
    """Dispersion of one trained variant on the test pool."""

    per_cluster: dict
    seen_ratio: float
    unseen_ratio: float | None
    unseen_similarity: SimilarityReport | None
    train_embedding: np.ndarray = field(repr=False)
    test_embedding: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "per_cluster_dispersion": {str(k): v for k, v in self.per_cluster.items()},
            "seen_dispersion_ratio": self.seen_ratio,
            "unseen_dispersion_ratio": self.unseen_ratio,
            "unseen_similarity": (
                None if self.unseen_similarity is None else self.unseen_similarity.to_dict()
            ),
        }


@dataclass
class DistortionReport:
    seed: int
    train_clusters: tuple
    unseen_clusters: tuple
    variants: dict
    train_labels: np.ndarray = field(repr=False)
    test_labels: np.ndarray = field(repr=False)

    @property
    def has_unseen(self):
        return bool(self.unseen_clusters)

    def to_dict(self):
        return {
            "seed": self.seed,
            "train_clusters": list(self.train_clusters),
            "unseen_clusters": list(self.unseen_clusters),
            "has_unseen": self.has_unseen,
            "variants": {v: d.to_dict() for v, d in self.variants.items()},
        }


def dispersion_ratios(emb, labels):
    """Per-cluster mean within-cluster distance over mean cross-centroid distance.

    The denominator is shared by all clusters: the mean Euclidean distance
    between every pair of cluster centroids.
    """
    emb = np.asarray(emb, dtype=np.float64)
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise ValueError("need at least two clusters for a centroid distance")
    centroids = np.array([emb[labels == c].mean(axis=0) for c in clusters])
    spread = pdist(centroids).mean()
    out = {}
    for c in clusters:
        members = emb[labels == c]
        within = pdist(members).mean() if len(members) > 1 else 0.0
        out[int(c)] = float(within / spread) if spread > 0 else math.inf
    return out


def split_pools(labels):
    """Alternate each cluster's points between a training and a test pool."""
    labels = np.asarray(labels)
    train_rows, test_rows = [], []
    for c in np.unique(labels):
        rows = np.flatnonzero(labels == c)
        train_rows.append(rows[0::2])
        test_rows.append(rows[1::2])
    return np.concatenate(train_rows), np.concatenate(test_rows)


def _epochs_for(n_rows, steps, batch_size, min_rows):
    bs = min(batch_size, n_rows)
    full, rest = divmod(n_rows, bs)
    per_epoch = full + (rest >= min_rows)
    return math.ceil(steps / per_epoch)


def unseen_cluster_experiment(
    cfg=DEFAULT_EXPERIMENT_SYNTH,
    train_clusters=(0, 1, 2),
    seed=0,
    vicreg_cfg=None,
    steps=500,
    lr=DEFAULT_LR,
    batch_size=DEFAULT_BATCH,
    sim_cfg=None,
):
    """Train both variants on ``train_clusters`` and measure test-pool distortion.

    Dispersion is measured on encoder representations.  The unseen-cluster
    similarity compares, on the unseen clusters' test points, the subset
    model against the all-clusters reference model.  When every cluster is
    trained, the unseen fields are ``None`` and ``has_unseen`` is false.
    """
    vicreg_cfg = vicreg_cfg or VicregConfig()
    sim_cfg = sim_cfg or SimilarityConfig(seed=seed)
    seen = tuple(sorted({int(c) for c in train_clusters}))
    if not seen or seen[0] < 0 or seen[-1] >= cfg.n_clusters:
        raise ValueError(f"train_clusters must be a non-empty subset of 0..{cfg.n_clusters - 1}")
    unseen = tuple(c for c in range(cfg.n_clusters) if c not in seen)
    if len(seen) < 2 and not unseen:
        raise ValueError("need at least two clusters")

    data = synth_generate(dataclasses.replace(cfg, seed=seed))
    train_rows, test_rows = split_pools(data.labels)
    sub_rows = train_rows[np.isin(data.labels[train_rows], seen)]
    test_x, test_y = data.points[test_rows], data.labels[test_rows]
    unseen_mask = np.isin(test_y, unseen)

    enc0 = ToyEncoder.init(cfg.ambient_dim, seed=seed)
    variants = {}
    for variant in VARIANTS:
        min_rows = max(2, vicreg_cfg.k_neighbors) if variant == "sag" else 2

        def fit(rows):
            epochs = _epochs_for(rows.size, steps, batch_size, min_rows)
            enc, _ = train(
                variant, data.points[rows], enc0, vicreg_cfg, epochs,
                lr=lr, seed=seed, augmenter=data.augmenter, batch_size=batch_size,
            )
            return enc

        sub = fit(sub_rows)
        test_emb = sub.represent(test_x)
        ratios = dispersion_ratios(test_emb, test_y)
        seen_ratio = float(np.mean([ratios[c] for c in seen]))
        unseen_ratio = similarity = None
        if unseen:
            unseen_ratio = float(np.mean([ratios[c] for c in unseen]))
            ref = fit(train_rows)
            similarity = structural_similarity(
                test_emb[unseen_mask], ref.represent(test_x[unseen_mask]), sim_cfg
            )
        variants[variant] = VariantDistortion(
            ratios, seen_ratio, unseen_ratio, similarity,
            sub.represent(data.points[sub_rows]), test_emb,
        )
    return DistortionReport(seed, seen, unseen, variants, data.labels[sub_rows], test_y)
