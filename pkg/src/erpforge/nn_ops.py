"""Forward math for the gated activation, residual resizing and count embedding.

Feature maps are ``(channels, time)`` arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ShapeError, SizeError


def instance_norm(x, gamma=1.0, beta=0.0, eps: float = 1e-5) -> np.ndarray:
    """Per-channel standardization over time followed by an affine map.

    Uses the biased (population) variance of the single instance.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"feature map must be 2-D (channels, time), got {x.shape}")
    if x.shape[1] < 2:
        raise SizeError("instance normalization needs at least 2 time steps")
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.float64), (x.shape[0],))[:, None]
    beta = np.broadcast_to(np.asarray(beta, dtype=np.float64), (x.shape[0],))[:, None]
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gamma + beta


def logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def glu_gate(feature, gate, gamma=1.0, beta=0.0, eps: float = 1e-5) -> np.ndarray:
    """Feature path times a logistic gate computed from the normalized gate path."""
    feature = np.asarray(feature, dtype=np.float64)
    gate = np.asarray(gate, dtype=np.float64)
    if feature.shape != gate.shape:
        raise ShapeError(f"feature {feature.shape} and gate {gate.shape} must match")
    return feature * logistic(instance_norm(gate, gamma, beta, eps))


def interpolate_time(z, n_out: int) -> np.ndarray:
    """Piecewise-linear resize along time with endpoints aligned.

    Output sample ``j`` reads the source at ``j * (T_in - 1) / (n_out - 1)``;
    a single output sample takes the first source sample.
    """
    z = np.asarray(z, dtype=np.float64)
    if n_out < 1:
        raise SizeError("output length must be at least 1")
    T_in = z.shape[1]
    if n_out == T_in:
        return z.copy()
    if n_out == 1 or T_in == 1:
        return np.repeat(z[:, :1], n_out, axis=1)
    pos = np.arange(n_out) * (T_in - 1) / (n_out - 1)
    src = np.arange(T_in)
    return np.stack([np.interp(pos, src, row) for row in z])


def interp_residual(z, u) -> np.ndarray:
    """Resize the residual ``z`` to ``u``'s length and add them."""
    z = np.asarray(z, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if z.ndim != 2 or u.ndim != 2 or z.shape[0] != u.shape[0]:
        raise ShapeError(f"channel counts differ: {z.shape} vs {u.shape}")
    return interpolate_time(z, u.shape[1]) + u


def sinusoidal_count_embedding(k: int, dim: int, base: float = 10000.0) -> np.ndarray:
    """Interleaved sin/cos embedding of a trial count ``k``."""
    if dim < 2 or dim % 2:
        raise ConfigError(f"embedding dimension must be a positive even number, got {dim}")
    if k < 1:
        raise ConfigError(f"trial count must be at least 1, got {k}")
    i = np.arange(dim // 2)
    angle = k / base ** (2 * i / dim)
    pe = np.empty(dim)
    pe[0::2] = np.sin(angle)
    pe[1::2] = np.cos(angle)
    return pe
