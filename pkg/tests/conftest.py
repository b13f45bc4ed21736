"""Shared test helpers: finite-difference oracles and tiny net builders."""
import numpy as np
import pytest

from poselift.gan import NormStats, TrainConfig, setup_train_state


def central_diff(fn, x, h=1e-6):
    """Central finite-difference gradient of scalar fn at x (same shape)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(x)
        flat[i] = orig - h
        fm = fn(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.abs(a), np.abs(b))
    mask = denom > 1e-8
    if not mask.any():
        return 0.0
    return float((np.abs(a - b)[mask] / denom[mask]).max())


def tiny_train_config(**kwargs):
    base = dict(batch_size=4, steps=2, hidden_width=8, gen_blocks=2,
                disc_blocks=2, seed=3)
    base.update(kwargs)
    return TrainConfig(**base)


def tiny_state(**kwargs):
    cfg = tiny_train_config(**kwargs)
    return setup_train_state(cfg, NormStats(1.0, cfg.distance, "basic14"))


def random_rotations(k, rng):
    """k proper rotations drawn uniformly (unit quaternions)."""
    q = rng.normal(size=(k, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z),
                  2 * (x * z + w * y)], -1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z),
                  2 * (y * z - w * x)], -1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x),
                  1 - 2 * (x * x + y * y)], -1),
    ], axis=-2)


def random_search_alignment_sq(pred, gt, num, rng):
    """Best sum-of-squares residual over random rotations.

    Per candidate rotation the scale and translation are set to their
    conditional optima, so this searches exactly the part the closed form
    solves with an SVD.
    """
    p0 = pred - pred.mean(0)
    g0 = gt - gt.mean(0)
    rots = random_rotations(num, rng)
    rp = np.einsum("kij,nj->kni", rots, p0)
    s = np.einsum("kni,ni->k", rp, g0) / np.sum(p0 * p0)
    s = np.maximum(s, 0.0)
    resid = s[:, None, None] * rp - g0[None]
    return float(np.min(np.sum(resid * resid, axis=(1, 2))))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
