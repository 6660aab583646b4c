"""Mini-batch gradient descent for the toy encoder."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import NonFiniteError, TrainingDivergedError
from .losses import LossBreakdown
from .synth import Augmenter
from .step import sag_step, vicreg_step

log = logging.getLogger(__name__)

VARIANTS = ("vicreg", "sag")


def _epoch_mean(cfg, parts):
    arr = np.array([p.as_row() for p in parts])
    inv, var, cov, _ = arr.mean(axis=0)
    return LossBreakdown.combine(cfg, inv, var, cov)


DEFAULT_LR = 0.01
DEFAULT_BATCH = 192


def train(variant, points, enc, cfg, epochs, lr=DEFAULT_LR, seed=0, augmenter=None, batch_size=DEFAULT_BATCH):
    """Train a copy of ``enc``; returns ``(encoder, history)``.

    Each epoch shuffles the points, cuts them into batches (a trailing batch
    too small for the loss is dropped), draws two augmented views per batch
    and takes one plain gradient step.  ``history`` holds the epoch-mean
    :class:`LossBreakdown`.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if epochs < 0 or lr <= 0 or batch_size < 2:
        raise ValueError("need epochs >= 0, lr > 0 and batch_size >= 2")
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    min_rows = max(2, cfg.k_neighbors) if variant == "sag" else 2
    bs = min(batch_size, n)
    if bs < min_rows:
        raise ValueError(f"batch of {bs} rows is below the minimum {min_rows} for {variant}")

    if augmenter is None:
        augmenter = Augmenter(0.0)
    enc = enc.copy()
    rng = np.random.default_rng(seed)
    history = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        parts = []
        for start in range(0, n, bs):
            rows = order[start : start + bs]
            if rows.size < min_rows:
                continue
            x1, x2 = augmenter.views(points[rows], rng)
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    if variant == "sag":
                        res = sag_step(x1, x2, enc, cfg, seed=int(rng.integers(2**63)))
                    else:
                        res = vicreg_step(x1, x2, enc, cfg)
            except NonFiniteError as exc:
                raise TrainingDivergedError(epoch, str(exc)) from exc
            if not np.isfinite(res.loss.total):
                raise TrainingDivergedError(epoch)
            for p, g in zip(enc.params(), res.grads):
                p -= lr * g
            if not enc.all_finite():
                raise TrainingDivergedError(epoch, "non-finite parameters")
            parts.append(res.loss)
        history.append(_epoch_mean(cfg, parts))
        log.debug("epoch %d %s", epoch, history[-1])
    return enc, history
