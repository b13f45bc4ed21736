"""Generator and discriminator: residual MLPs over flattened 2D poses.

Both nets share the same trunk shape: an input Linear into the hidden width,
then N residual blocks, then an output Linear.  A residual block is
[Linear -> BatchNorm -> ReLU] twice plus the identity skip, with no
activation after the add.  The generator maps a flattened pose (B, 2J) to
per-joint depth offsets (B, J); the discriminator maps it to 2 class logits
(real vs fake), exposed to callers as the real-class softmax probability.
"""
from __future__ import annotations

import numpy as np

from .layers import BatchNorm, Linear, Param, ReLU, softmax


class ResidualBlock:
    def __init__(self, width: int, name: str, momentum: float = 0.9,
                 eps: float = 1e-5):
        self.stack = [
            Linear(width, width, name=f"{name}.fc1"),
            BatchNorm(width, momentum=momentum, eps=eps, name=f"{name}.bn1"),
            ReLU(),
            Linear(width, width, name=f"{name}.fc2"),
            BatchNorm(width, momentum=momentum, eps=eps, name=f"{name}.bn2"),
            ReLU(),
        ]

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        y = x
        for layer in self.stack:
            y = layer.forward(y, training)
        return x + y

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        g = upstream
        for layer in reversed(self.stack):
            g = layer.backward(g)
        return g + upstream

    def parameters(self) -> list[Param]:
        return [p for layer in self.stack for p in layer.parameters()]

    def state_arrays(self):
        return [a for layer in self.stack for a in layer.state_arrays()]


class ResidualMLP:
    """Input Linear + ReLU, ``num_blocks`` residual blocks, output Linear."""

    def __init__(self, in_dim: int, width: int, num_blocks: int, out_dim: int,
                 momentum: float = 0.9, eps: float = 1e-5):
        self.in_dim = in_dim
        self.width = width
        self.num_blocks = num_blocks
        self.out_dim = out_dim
        self.momentum = momentum
        self.eps = eps
        self.input_layer = Linear(in_dim, width, name="input")
        self.input_relu = ReLU()
        self.blocks = [
            ResidualBlock(width, name=f"block{i}", momentum=momentum, eps=eps)
            for i in range(num_blocks)
        ]
        self.output_layer = Linear(width, out_dim, name="output")

    @property
    def config(self) -> dict:
        return {
            "in_dim": self.in_dim,
            "width": self.width,
            "num_blocks": self.num_blocks,
            "out_dim": self.out_dim,
            "momentum": self.momentum,
            "eps": self.eps,
        }

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        y = self.input_relu.forward(self.input_layer.forward(x, training), training)
        for block in self.blocks:
            y = block.forward(y, training)
        return self.output_layer.forward(y, training)

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        g = self.output_layer.backward(upstream)
        for block in reversed(self.blocks):
            g = block.backward(g)
        return self.input_layer.backward(self.input_relu.backward(g))

    def parameters(self) -> list[Param]:
        out = self.input_layer.parameters()
        for block in self.blocks:
            out.extend(block.parameters())
        out.extend(self.output_layer.parameters())
        return out

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = self.input_layer.state_arrays()
        for block in self.blocks:
            out.extend(block.state_arrays())
        out.extend(self.output_layer.state_arrays())
        return out

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        params = {p.name: p for p in self.parameters()}
        for name, param in params.items():
            param.value = np.array(arrays[name], dtype=np.float64)
            param.zero_grad()
        for block in self.blocks:
            for layer in block.stack:
                if isinstance(layer, BatchNorm):
                    layer.running_mean = np.array(
                        arrays[layer.name + ".running_mean"], dtype=np.float64)
                    layer.running_var = np.array(
                        arrays[layer.name + ".running_var"], dtype=np.float64)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


def make_generator(num_joints: int = 14, width: int = 1024,
                   num_blocks: int = 4, momentum: float = 0.9,
                   eps: float = 1e-5) -> ResidualMLP:
    return ResidualMLP(2 * num_joints, width, num_blocks, num_joints,
                       momentum=momentum, eps=eps)


def make_discriminator(num_joints: int = 14, width: int = 1024,
                       num_blocks: int = 3, momentum: float = 0.9,
                       eps: float = 1e-5) -> ResidualMLP:
    return ResidualMLP(2 * num_joints, width, num_blocks, 2,
                       momentum=momentum, eps=eps)


def init_parameters(net: ResidualMLP, seed: int) -> ResidualMLP:
    """He-normal hidden weights, zero output layer, identity BatchNorm.

    Hidden weight entries are drawn N(0, 2/fan_in); the same seed always
    produces the same parameters.  The output layer starts at exactly zero so
    a fresh generator begins from the flat-skeleton hypothesis and a fresh
    discriminator outputs an uninformative 0.5, which keeps the first
    adversarial steps well scaled.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    for p in net.parameters():
        if p.name == "output.weight":
            p.value = np.zeros_like(p.value)
        elif p.name.endswith(".weight"):
            fan_in = p.value.shape[1]
            p.value = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=p.value.shape)
        elif p.name.endswith(".bias") or p.name.endswith(".beta"):
            p.value = np.zeros_like(p.value)
        elif p.name.endswith(".gamma"):
            p.value = np.ones_like(p.value)
        p.zero_grad()
    return net


def _flatten_poses(poses: np.ndarray, num_joints: int) -> np.ndarray:
    x = np.asarray(poses, dtype=np.float64)
    if x.ndim == 3 and x.shape[1:] == (num_joints, 2):
        return x.reshape(x.shape[0], 2 * num_joints)
    if x.ndim == 2 and x.shape[1] == 2 * num_joints:
        return x
    raise ValueError(
        f"expected (B, {num_joints}, 2) or (B, {2 * num_joints}), got {x.shape}")


def generator_apply(net: ResidualMLP, poses: np.ndarray,
                    training: bool = False) -> np.ndarray:
    """Per-joint depth offsets (B, J) for 2D poses."""
    num_joints = net.out_dim
    return net.forward(_flatten_poses(poses, num_joints), training)


def discriminator_apply(net: ResidualMLP, poses: np.ndarray,
                        training: bool = False) -> np.ndarray:
    """Probability (B,) that each pose is a real projection."""
    num_joints = net.in_dim // 2
    logits = net.forward(_flatten_poses(poses, num_joints), training)
    return softmax(logits)[:, 1]
