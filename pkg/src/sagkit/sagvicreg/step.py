"""Single loss/gradient evaluations for plain VICReg and the affinity-weighted,
random-walk-paired variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteError
from . import losses
from .affinity import batch_affinity, sample_pairs
from .losses import LossBreakdown


@dataclass
class StepResult:
    loss: LossBreakdown
    grads: list
    # partner row in the second view and its affinity weight, per first-view row
    indices: np.ndarray
    weights: np.ndarray


def _paired_step(enc, x1, x2, cfg, indices, weights):
    z1, cache1 = enc.forward(x1)
    z2, cache2 = enc.forward(x2)
    _check_finite(z1, z2)
    z3 = z2[indices]

    inv = losses.weighted_invariance(z1, z3, weights)
    var = 0.5 * (
        losses.variance_term(z1, cfg.gamma, cfg.epsilon)
        + losses.variance_term(z3, cfg.gamma, cfg.epsilon)
    )
    cov = 0.5 * (losses.covariance_term(z1) + losses.covariance_term(z3))
    breakdown = LossBreakdown.combine(cfg, inv, var, cov)

    g_inv = losses.weighted_invariance_grad(z1, z3, weights)
    dz1 = (
        cfg.lambda_inv * g_inv
        + 0.5 * cfg.mu_var * losses.variance_grad(z1, cfg.gamma, cfg.epsilon)
        + 0.5 * cfg.nu_cov * losses.covariance_grad(z1)
    )
    dz3 = (
        -cfg.lambda_inv * g_inv
        + 0.5 * cfg.mu_var * losses.variance_grad(z3, cfg.gamma, cfg.epsilon)
        + 0.5 * cfg.nu_cov * losses.covariance_grad(z3)
    )
    dz2 = np.zeros_like(z2)
    np.add.at(dz2, indices, dz3)

    grads = [a + b for a, b in zip(enc.backward(cache1, dz1), enc.backward(cache2, dz2))]
    return StepResult(breakdown, grads, np.asarray(indices), np.asarray(weights, dtype=np.float64))


def _check_finite(*arrays):
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise NonFiniteError("encoder produced non-finite embeddings")


def _check_batch(x1, x2, min_rows):
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ValueError(f"views differ in shape: {x1.shape} vs {x2.shape}")
    if x1.shape[0] < min_rows:
        raise ValueError(f"batch of {x1.shape[0]} rows is smaller than the required {min_rows}")
    return x1, x2


def sag_step(x1, x2, enc, cfg, seed, pairs=None):
    """Loss and parameter gradients for one affinity-weighted, random-walk-paired batch.

    The affinity is computed on the current embeddings, one partner per row is
    drawn from the second view, and the invariance term is weighted by the
    affinity of each drawn pair.  Partners and weights are constants for
    differentiation; pass ``pairs=(indices, weights)`` to fix them explicitly.
    """
    x1, x2 = _check_batch(x1, x2, max(2, cfg.k_neighbors))
    if pairs is None:
        z1, _ = enc.forward(x1)
        z2, _ = enc.forward(x2)
        _check_finite(z1, z2)
        indices, weights = sample_pairs(batch_affinity(z1, z2, cfg), seed)
    else:
        indices, weights = pairs
    return _paired_step(enc, x1, x2, cfg, np.asarray(indices), np.asarray(weights, dtype=np.float64))


def vicreg_step(x1, x2, enc, cfg):
    """Plain VICReg: each row paired with its own second view at unit weight."""
    x1, x2 = _check_batch(x1, x2, 2)
    n = x1.shape[0]
    return _paired_step(enc, x1, x2, cfg, np.arange(n), np.ones(n))
