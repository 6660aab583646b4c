"""A small fully-connected encoder + expander with hand-written backprop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_ENCODER = (32, 16)
DEFAULT_EXPANDER = (32, 32)


@dataclass
class ToyEncoder:
    """Encoder layers followed by expander layers.

    ReLU follows every layer except the last encoder layer (the
    representation) and the last expander layer (the embedding).
    """

    weights: list
    biases: list
    n_encoder_layers: int
    _relu: list = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases differ in length")
        if not 1 <= self.n_encoder_layers < len(self.weights):
            raise ValueError("need at least one encoder and one expander layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: bad shapes {w.shape}, {b.shape}")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: input width does not match previous layer")
        last_enc = self.n_encoder_layers - 1
        last = len(self.weights) - 1
        self._relu = [i not in (last_enc, last) for i in range(len(self.weights))]

    @classmethod
    def init(cls, in_dim, encoder=DEFAULT_ENCODER, expander=DEFAULT_EXPANDER, seed=0, gain=0.8):
        """He-normal weights scaled by ``gain``, zero biases."""
        rng = np.random.default_rng(seed)
        sizes = [in_dim, *encoder, *expander]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rng.normal(0.0, gain * np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, len(encoder))

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    @property
    def rep_dim(self):
        return self.weights[self.n_encoder_layers - 1].shape[1]

    def params(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` of the live parameter arrays."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self):
        return ToyEncoder(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.n_encoder_layers
        )

    def represent(self, x):
        """Encoder output f(x)."""
        h = np.asarray(x, dtype=np.float64)
        for i in range(self.n_encoder_layers):
            h = h @ self.weights[i] + self.biases[i]
            if self._relu[i]:
                h = np.maximum(h, 0.0)
        return h

    def forward(self, x):
        """Return the embedding h(f(x)) and a cache for :meth:`backward`."""
        h = np.asarray(x, dtype=np.float64)
        inputs = []
        for w, b, relu in zip(self.weights, self.biases, self._relu):
            inputs.append(h)
            h = h @ w + b
            if relu:
                h = np.maximum(h, 0.0)
            inputs.append(h)
        return h, inputs

    def backward(self, cache, grad_out):
        """Gradients in :meth:`params` order given dLoss/dEmbedding."""
        grads = [None] * (2 * len(self.weights))
        g = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            x_in, out = cache[2 * i], cache[2 * i + 1]
            if self._relu[i]:
                g = g * (out > 0)
            grads[2 * i] = x_in.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads

    def all_finite(self):
        return all(np.all(np.isfinite(p)) for p in self.params())
