"""Minimal reverse-mode dense layers (float64, explicit forward/backward).

Each layer caches what its backward pass needs during forward and accumulates
parameter gradients into ``Param.grad``; ``backward`` returns the gradient
w.r.t. the layer input.  Rows of a batch are independent except through
BatchNorm statistics.  Everything is plain numpy, sequential, deterministic.
"""
from __future__ import annotations

import numpy as np


class Param:
    """A named trainable array with an accumulated gradient."""

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Param({self.name}, shape={self.value.shape})"


class Linear:
    """y = x @ W.T + b with W of shape (out_dim, in_dim)."""

    def __init__(self, in_dim: int, out_dim: int, name: str = "linear"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Param(name + ".weight", np.zeros((out_dim, in_dim)))
        self.bias = Param(name + ".bias", np.zeros(out_dim))
        self._x = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(
                f"{self.weight.name}: expected (B, {self.in_dim}), got {x.shape}"
            )
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        up = np.asarray(upstream, dtype=np.float64)
        self.weight.grad += up.T @ self._x
        self.bias.grad += up.sum(axis=0)
        return up @ self.weight.value

    def parameters(self) -> list[Param]:
        return [self.weight, self.bias]

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [(p.name, p.value) for p in self.parameters()]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._mask = x > 0.0
        return np.maximum(x, 0.0)

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        return upstream * self._mask

    def parameters(self) -> list[Param]:
        return []

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        return []


class BatchNorm:
    """Per-feature batch normalization.

    Training mode normalizes by the biased batch statistics and updates the
    running estimates as running = momentum * running + (1 - momentum) * batch;
    inference mode normalizes by the running estimates.  Training batches must
    have at least 2 rows so the batch variance is meaningful.
    """

    def __init__(self, dim: int, momentum: float = 0.9, eps: float = 1e-5,
                 name: str = "bn"):
        self.dim = dim
        self.momentum = momentum
        self.eps = eps
        self.gamma = Param(name + ".gamma", np.ones(dim))
        self.beta = Param(name + ".beta", np.zeros(dim))
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.name = name
        self._cache = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"{self.name}: expected (B, {self.dim}), got {x.shape}")
        if training:
            if x.shape[0] < 2:
                raise ValueError(f"{self.name}: training batch must have >= 2 rows")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            self.running_mean = (
                self.momentum * self.running_mean + (1.0 - self.momentum) * mean
            )
            self.running_var = (
                self.momentum * self.running_var + (1.0 - self.momentum) * var
            )
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std, training, x.shape[0])
        return self.gamma.value * xhat + self.beta.value

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        up = np.asarray(upstream, dtype=np.float64)
        xhat, inv_std, training, batch = self._cache
        self.gamma.grad += (up * xhat).sum(axis=0)
        self.beta.grad += up.sum(axis=0)
        g = up * self.gamma.value
        if not training:
            return g * inv_std
        # batch statistics participate in the graph
        return (inv_std / batch) * (
            batch * g - g.sum(axis=0) - xhat * (g * xhat).sum(axis=0)
        )

    def parameters(self) -> list[Param]:
        return [self.gamma, self.beta]

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [
            (self.gamma.name, self.gamma.value),
            (self.beta.name, self.beta.value),
            (self.name + ".running_mean", self.running_mean),
            (self.name + ".running_var", self.running_var),
        ]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row max."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch with the exact softmax gradient.

    logits: (B, C); labels: (B,) int class indices.  Computed through
    log-sum-exp so large logits cannot overflow.  Returns
    (loss, d_logits, probs) with d_logits = (softmax - onehot) / B.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels)
    if z.ndim != 2:
        raise ValueError(f"logits must be (B, C), got {z.shape}")
    if y.shape != (z.shape[0],):
        raise ValueError(f"labels must be ({z.shape[0]},), got {y.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits contain non-finite values")
    if np.any(y < 0) or np.any(y >= z.shape[1]):
        raise ValueError("label out of range")
    batch = z.shape[0]
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    loss = float(np.mean(lse - z[np.arange(batch), y]))
    probs = softmax(z)
    d_logits = probs.copy()
    d_logits[np.arange(batch), y] -= 1.0
    d_logits /= batch
    return loss, d_logits, probs
