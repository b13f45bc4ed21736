"""Adam with bias correction, matched to the usual reference constants."""
from __future__ import annotations

import numpy as np

from .layers import Param


class OptimizerError(RuntimeError):
    """Raised when a step would apply a non-finite update."""


class Adam:
    def __init__(self, params: list[Param], lr: float = 2e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0.0:
            raise ValueError("lr must be positive")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise OptimizerError(f"non-finite gradient in {p.name}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            mhat = m / bc1
            vhat = v / bc2
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for p, m, v in zip(self.params, self.m, self.v):
            out.append((p.name + ".adam_m", m))
            out.append((p.name + ".adam_v", v))
        return out

    def load_state(self, arrays: dict[str, np.ndarray], t: int) -> None:
        self.t = int(t)
        for i, p in enumerate(self.params):
            self.m[i] = np.array(arrays[p.name + ".adam_m"], dtype=np.float64)
            self.v[i] = np.array(arrays[p.name + ".adam_v"], dtype=np.float64)
