"""Synthetic clustered data with a Gaussian-noise view sampler."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class SynthConfig:
    n_clusters: int = 3
    points_per_cluster: int = 64
    ambient_dim: int = 32
    center_spread: float = 1.0
    cluster_std: float = 1.0
    augment_std: float = 0.02
    seed: int = 0

    def __post_init__(self):
        for name in ("n_clusters", "points_per_cluster", "ambient_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("center_spread", "cluster_std", "augment_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Augmenter:
    """Emits two independently noised views of the same points."""

    std: float

    def views(self, x, rng):
        x = np.asarray(x, dtype=np.float64)
        if self.std == 0:
            return x.copy(), x.copy()
        return x + rng.normal(0.0, self.std, x.shape), x + rng.normal(0.0, self.std, x.shape)


class SynthData(NamedTuple):
    points: np.ndarray
    labels: np.ndarray
    augmenter: Augmenter


def synth_generate(cfg):
    rng = np.random.default_rng(cfg.seed)
    centers = rng.normal(0.0, cfg.center_spread, (cfg.n_clusters, cfg.ambient_dim))
    labels = np.repeat(np.arange(cfg.n_clusters), cfg.points_per_cluster)
    noise = rng.normal(0.0, 1.0, (labels.size, cfg.ambient_dim))
    points = centers[labels] + cfg.cluster_std * noise
    return SynthData(points, labels, Augmenter(cfg.augment_std))
