"""Probabilistic loss terms and precision-weighted ERP fusion.

Latent batches are arrays shaped ``(n_subjects, n_tasks, latent_size)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .core import Erp, UncertainErp
from .errors import ConfigError, DegenerateError, DomainError, ShapeError, SizeError

SUBJECT = "subject"
TASK = "task"

SIGMA_EPS = 1e-6


def _arr(x) -> np.ndarray:
    if isinstance(x, Erp):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _unpack(pred) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pred, UncertainErp):
        return pred.mean.data, pred.sigma
    mean, sigma = pred
    return _arr(mean), np.asarray(sigma, dtype=np.float64)


# ---------------------------------------------------------------------------
# Reconstruction likelihood

def gaussian_nll(target, pred) -> float:
    """Sum over points of ``(target - mean)^2 / (2 sigma^2) + log(sigma)``.

    ``pred`` is an UncertainErp or a ``(mean, sigma)`` pair of arrays. The
    constant ``log(2 pi) / 2`` per point is omitted.
    """
    tgt = _arr(target)
    mean, sigma = _unpack(pred)
    if tgt.shape != mean.shape or sigma.shape != mean.shape:
        raise ShapeError(f"shapes differ: target {tgt.shape}, mean {mean.shape}, sigma {sigma.shape}")
    if not np.all(sigma > 0):
        raise DomainError("sigma must be strictly positive")
    diff = tgt - mean
    return float(np.sum(diff**2 / (2.0 * sigma**2) + np.log(sigma)))


def gaussian_nll_grad(target, mean, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`gaussian_nll` w.r.t. ``mean`` and ``sigma``."""
    tgt, mean, sigma = _arr(target), _arr(mean), np.asarray(sigma, dtype=np.float64)
    if not np.all(sigma > 0):
        raise DomainError("sigma must be strictly positive")
    diff = tgt - mean
    return (mean - tgt) / sigma**2, -(diff**2) / sigma**3 + 1.0 / sigma


@dataclass(frozen=True)
class AnnealSchedule:
    target_epoch: int = 100

    def __post_init__(self):
        if self.target_epoch < 1:
            raise ConfigError("target_epoch must be at least 1")


def anneal_sigma(sigma_hat, epoch: int, sched: AnnealSchedule = AnnealSchedule()) -> np.ndarray:
    """Blend the likelihood scale linearly from 1 to ``sigma_hat`` by ``target_epoch``."""
    if epoch < 0:
        raise ConfigError("epoch must be non-negative")
    frac = min(epoch / sched.target_epoch, 1.0)
    # convex form is exact at both endpoints
    return (1.0 - frac) + frac * np.asarray(sigma_hat, dtype=np.float64)


def softplus_sigma(raw, eps: float = SIGMA_EPS) -> np.ndarray:
    """Strictly positive scale ``log(1 + exp(raw)) + eps``."""
    return np.logaddexp(0.0, np.asarray(raw, dtype=np.float64)) + eps


# ---------------------------------------------------------------------------
# Contrastive term

def _unit(z: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise DomainError("cosine similarity undefined for a zero latent vector")
    return z / norms


def aggregate_similarity(a, b, space: str) -> np.ndarray:
    """Cosine similarities summed over the axis that does not index ``space``.

    For ``subject`` the result is ``(n_subjects, n_subjects)`` summed over
    tasks; for ``task`` it is ``(n_tasks, n_tasks)`` summed over subjects.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 3:
        raise ShapeError(f"latent batches must share a 3-D shape, got {a.shape} and {b.shape}")
    ua, ub = _unit(a), _unit(b)
    if space == SUBJECT:
        return np.einsum("ith,jth->ij", ua, ub)
    if space == TASK:
        return np.einsum("sih,sjh->ij", ua, ub)
    raise ConfigError(f"space must be 'subject' or 'task', got {space!r}")


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(x - m), axis=axis))


def _directional(logits: np.ndarray, include_positive: bool) -> np.ndarray:
    M = logits.shape[0]
    pos = np.diag(logits)
    if include_positive:
        denom = _logsumexp(logits, axis=1)
    else:
        masked = np.where(np.eye(M, dtype=bool), -np.inf, logits)
        denom = _logsumexp(masked, axis=1)
    return -(pos - denom)


def contrastive_loss(sim, temperature: float = 0.5, *, include_positive: bool = False) -> float:
    """Symmetric temperature-scaled cross entropy over a similarity matrix.

    Row ``m`` scores ``sim[m, m]`` against the other entries of row ``m``;
    the transpose supplies the other direction. By default the denominator
    excludes the positive pair, so the loss can go negative. Set
    ``include_positive`` for the usual softmax form.
    """
    S = np.asarray(sim, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError(f"similarity matrix must be square, got {S.shape}")
    if S.shape[0] < 2:
        raise SizeError("contrastive loss needs at least 2 pairs")
    if not temperature > 0:
        raise ConfigError("temperature must be positive")
    logits = S / temperature
    per_m = _directional(logits, include_positive) + _directional(logits.T, include_positive)
    return float(per_m.mean())


# ---------------------------------------------------------------------------
# Latent permutation term

def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def permute_latents(batch, space: str, rng_seed) -> np.ndarray:
    """Shuffle the axis not associated with ``space``.

    Subject-space latents get one random permutation of the task axis
    (shared by all subjects); task-space latents get one permutation of the
    subject axis.
    """
    z = np.asarray(batch, dtype=np.float64)
    if z.ndim != 3:
        raise ShapeError(f"latent batch must be 3-D, got {z.shape}")
    rng = _rng(rng_seed)
    if space == SUBJECT:
        return z[:, rng.permutation(z.shape[1]), :]
    if space == TASK:
        return z[rng.permutation(z.shape[0]), :, :]
    raise ConfigError(f"space must be 'subject' or 'task', got {space!r}")


Decoder = Callable[[np.ndarray, np.ndarray], tuple]


def latent_permutation_loss(targets, decode: Decoder, a, b, rng_seed) -> float:
    """Reconstruction NLL of both realizations after cross-axis latent shuffling.

    ``a`` and ``b`` are ``(subject_latents, task_latents)`` pairs. ``decode``
    maps permuted latents to ``(mean, sigma)`` arrays shaped like ``targets``
    (``n_subjects x n_tasks x ...``). Four independent permutations are drawn
    from ``rng_seed`` in the order A-subject, A-task, B-subject, B-task.
    """
    tgt = np.asarray(targets, dtype=np.float64)
    seeds = np.random.SeedSequence(rng_seed).spawn(4)
    total = 0.0
    for (z_s, z_t), (seed_s, seed_t) in ((a, seeds[0:2]), (b, seeds[2:4])):
        mean, sigma = decode(permute_latents(z_s, SUBJECT, seed_s), permute_latents(z_t, TASK, seed_t))
        mean, sigma = np.asarray(mean, dtype=np.float64), np.asarray(sigma, dtype=np.float64)
        if mean.shape != tgt.shape or sigma.shape != tgt.shape:
            raise ShapeError(f"decoder output {mean.shape} does not match targets {tgt.shape}")
        total += gaussian_nll(tgt, (mean, sigma))
    return total


def total_loss(reconstruction: float, contrastive: float, permutation: float) -> float:
    """Unweighted sum of the three training terms."""
    return reconstruction + contrastive + permutation


# ---------------------------------------------------------------------------
# Fusion and calibration

def inverse_variance_combine(estimates: Sequence[UncertainErp]) -> UncertainErp:
    """Precision-weighted mean of several uncertain ERPs.

    The returned sigma is the standard deviation of the weighted mean,
    ``sqrt(1 / sum(sigma_i^-2))``. See :func:`average_variance` for the
    per-estimate scale.
    """
    if len(estimates) < 1:
        raise SizeError("need at least one estimate to combine")
    first = estimates[0].mean
    for e in estimates:
        if not e.mean.same_layout(first):
            raise ShapeError("estimates must share channels and time axis")
        if not np.all(e.sigma > 0):
            raise DomainError("sigma must be strictly positive")
    prec = np.stack([e.sigma**-2.0 for e in estimates])
    vals = np.stack([e.mean.data for e in estimates])
    total_prec = prec.sum(axis=0)
    mean = (prec * vals).sum(axis=0) / total_prec
    return UncertainErp(first.with_data(mean), np.sqrt(1.0 / total_prec))


def average_variance(estimates: Sequence[UncertainErp]) -> np.ndarray:
    """Variance of the weighted mean multiplied by the number of estimates."""
    combined = inverse_variance_combine(estimates)
    return len(estimates) * combined.sigma**2


def calibration_score(per_pair: Sequence[tuple[float, float]]) -> float:
    """Pearson correlation between predicted sigma and realized RMSE."""
    arr = np.asarray(per_pair, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise SizeError("need at least two (sigma, rmse) pairs")
    x = arr[:, 0] - arr[:, 0].mean()
    y = arr[:, 1] - arr[:, 1].mean()
    sx, sy = np.sqrt(x @ x), np.sqrt(y @ y)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateError("calibration undefined when either series is constant")
    return float(np.clip((x @ y) / (sx * sy), -1.0, 1.0))
