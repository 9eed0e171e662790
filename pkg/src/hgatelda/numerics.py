"""Dense numeric kernels shared by the rest of the package.

Matrices are plain float64 numpy arrays. Everything here is a pure function
of its inputs; randomness always comes from an explicit generator built by
:func:`make_rng`.
"""

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


class ShapeError(ValueError):
    pass


class EmptyNeighborhoodError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


def make_rng(seed, *stream):
    """Seeded PCG64 generator. Extra ``stream`` ints derive independent sub-streams."""
    if stream:
        return np.random.default_rng([int(seed), *map(int, stream)])
    return np.random.default_rng(int(seed))


def as_matrix(x):
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def check_finite(x, what="matrix"):
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"non-finite values in {what}")
    return x


def matmul(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return check_finite(a @ b, "matrix product")


def leaky_relu(x, slope=0.2):
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky-relu slope must lie in (0, 1), got {slope}")
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, slope * x)


def leaky_relu_grad(x, slope=0.2):
    """Derivative of :func:`leaky_relu`, taking the right-hand branch at 0."""
    return np.where(np.asarray(x) >= 0.0, 1.0, slope)


def masked_softmax(scores, mask):
    """Row-wise softmax restricted to entries where ``mask`` is true.

    Masked entries come back as exact zeros. The row max over unmasked
    entries is subtracted before exponentiating.
    """
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if scores.shape != mask.shape:
        raise ShapeError(f"scores {scores.shape} and mask {mask.shape} differ")
    empty = ~mask.any(axis=-1)
    if np.any(empty):
        rows = np.flatnonzero(empty)
        raise EmptyNeighborhoodError(f"rows with no unmasked entries: {rows[:10].tolist()}")
    shifted = np.where(mask, scores, -np.inf)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    e = np.where(mask, np.exp(shifted), 0.0)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, params, **hyper):
        params = np.asarray(params, dtype=np.float64)
        return cls(np.zeros_like(params), np.zeros_like(params), **hyper)


def adam_step(state, params, grads):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != state.m.shape or grads.shape != state.m.shape:
        raise ShapeError(
            f"params {params.shape} / grads {grads.shape} do not match optimizer state {state.m.shape}"
        )
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, m=m, v=v, step=t)


def finite_diff_grad(loss: Callable[[np.ndarray], float], params, h=1e-5):
    """Central-difference gradient of a scalar ``loss`` at ``params``."""
    if h <= 0:
        raise ValueError("step h must be positive")
    p = np.array(params, dtype=np.float64)
    grad = np.zeros_like(p)
    flat = p.reshape(-1)
    g = grad.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + h
        up = float(loss(p))
        flat[idx] = orig - h
        down = float(loss(p))
        flat[idx] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NonFiniteError(f"loss is not finite when probing entry {idx}")
        g[idx] = (up - down) / (2.0 * h)
    return grad


def max_relative_error(analytic, numeric, floor=1e-6):
    """Largest entrywise ``|a - n| / max(|a|, |n|, floor)``."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise ShapeError(f"gradient shapes differ: {a.shape} vs {n.shape}")
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def glorot_uniform(rng, fan_out, fan_in, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape if shape is not None else (fan_out, fan_in))
