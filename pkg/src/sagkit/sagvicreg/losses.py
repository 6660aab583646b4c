"""VICReg loss terms and their gradients with respect to the embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numkit import as_mat


@dataclass(frozen=True)
class VicregConfig:
    lambda_inv: float = 25.0
    mu_var: float = 25.0
    nu_cov: float = 1.0
    gamma: float = 1.0
    epsilon: float = 1e-4
    k_neighbors: int = 5
    scale_percentile: float = 20.0
    scale_floor: float = 1e-7

    def __post_init__(self):
        for name in ("lambda_inv", "mu_var", "nu_cov", "gamma", "epsilon", "scale_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0 < self.scale_percentile < 100:
            raise ValueError("scale_percentile must be in (0, 100)")


@dataclass(frozen=True)
class LossBreakdown:
    invariance: float
    variance: float
    covariance: float
    total: float

    @classmethod
    def combine(cls, cfg, invariance, variance, covariance):
        total = cfg.lambda_inv * invariance + cfg.mu_var * variance + cfg.nu_cov * covariance
        return cls(float(invariance), float(variance), float(covariance), float(total))

    def as_row(self):
        return (self.invariance, self.variance, self.covariance, self.total)


def _need_two_rows(y):
    if y.shape[0] < 2:
        raise ValueError("need at least 2 rows for a sample variance")


def variance_term(y, gamma=1.0, epsilon=1e-4):
    """Mean hinge max(0, gamma - sqrt(var + eps)) over columns (unbiased variance)."""
    y = as_mat(y, "y")
    _need_two_rows(y)
    std = np.sqrt(y.var(axis=0, ddof=1) + epsilon)
    return float(np.mean(np.maximum(0.0, gamma - std)))


def variance_grad(y, gamma=1.0, epsilon=1e-4):
    n, k = y.shape
    yc = y - y.mean(axis=0)
    std = np.sqrt(y.var(axis=0, ddof=1) + epsilon)
    active = (gamma - std) > 0
    return -(yc * (active / std)) / (k * (n - 1))


def invariance_term(y, y2):
    """Mean squared row distance between two aligned batches."""
    y = as_mat(y, "y")
    y2 = as_mat(y2, "y2")
    if y.shape != y2.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {y2.shape}")
    diff = y - y2
    return float(np.einsum("ij,ij->", diff, diff) / y.shape[0])


def weighted_invariance(z, z2, weights):
    """(1/n) sum_i weights_i ||z_i - z2_i||^2 over already-paired rows."""
    z = as_mat(z, "z")
    z2 = as_mat(z2, "z2")
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if z.shape != z2.shape:
        raise ValueError(f"shape mismatch: {z.shape} vs {z2.shape}")
    if weights.size != z.shape[0]:
        raise ValueError(f"expected {z.shape[0]} weights, got {weights.size}")
    diff = z - z2
    return float(weights @ np.einsum("ij,ij->i", diff, diff) / z.shape[0])


def weighted_invariance_grad(z, z2, weights):
    """Gradient w.r.t. ``z``; the gradient w.r.t. ``z2`` is its negation."""
    return (2.0 / z.shape[0]) * weights[:, None] * (z - z2)


def _cov(y):
    n = y.shape[0]
    yc = y - y.mean(axis=0)
    return yc, yc.T @ yc / (n - 1)


def covariance_term(y):
    """(1/k) * sum of squared off-diagonal sample covariances."""
    y = as_mat(y, "y")
    _need_two_rows(y)
    _, c = _cov(y)
    off = c - np.diag(np.diag(c))
    return float(np.sum(off * off) / y.shape[1])


def covariance_grad(y):
    n, k = y.shape
    yc, c = _cov(y)
    off = c - np.diag(np.diag(c))
    return (4.0 / (k * (n - 1))) * yc @ off
