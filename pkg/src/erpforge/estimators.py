"""Averaging estimators and template baselines.

Every estimator maps a :class:`~erpforge.core.TrialSet` to an
:class:`~erpforge.core.Erp` on the same axis and channel set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Erp, TrialSet, erp_from
from .errors import ConfigError, DegenerateWeightsError, ShapeError, SizeError, TemplateLookupError


def simple_average(trials: TrialSet) -> Erp:
    """Point-wise mean over the trial axis."""
    if trials.n_trials < 1:
        raise SizeError("cannot average an empty trial set")
    return erp_from(trials, trials.data.mean(axis=0))


# ---------------------------------------------------------------------------
# tanh weighting

@dataclass(frozen=True)
class TanhParams:
    c: float = 0.1
    v: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError(f"tanh curvature c must be positive, got {self.c}")
        if not self.v >= 0:
            raise ConfigError(f"tanh offset v must be non-negative, got {self.v}")


def tanh_kappa(n_trials: int, params: TanhParams = TanhParams()) -> np.ndarray:
    """Unclipped rank scores for ranks 1..K of the sorted values.

    Ranks are 1-based and the branch splits at K/2; with ``v = 0`` the
    largest value always scores 0.
    """
    K = n_trials
    kappa = np.empty(K)
    for i in range(1, K + 1):
        if i < K / 2:
            kappa[i - 1] = math.tanh(params.c * (i + 1)) - params.v
        else:
            kappa[i - 1] = -math.tanh(params.c * (i - K)) + params.v
    return kappa


def tanh_weights(n_trials: int, params: TanhParams = TanhParams()) -> np.ndarray:
    """Normalized non-negative weights for ranks 1..K (ascending order)."""
    kappa = np.maximum(tanh_kappa(n_trials, params), 0.0)
    total = kappa.sum()
    if not total > 0:
        raise DegenerateWeightsError(
            f"all tanh weights are zero for K={n_trials}, c={params.c}, v={params.v}"
        )
    return kappa / total


def tanh_weighted_average(trials: TrialSet, params: TanhParams = TanhParams()) -> Erp:
    """Robust location estimate from rank-based tanh weights.

    At every channel and time point the K trial values are sorted in
    ascending order and combined with :func:`tanh_weights`.
    """
    if trials.n_trials < 2:
        raise SizeError(f"tanh weighting needs at least 2 trials, got {trials.n_trials}")
    w = tanh_weights(trials.n_trials, params)
    ranked = np.sort(trials.data, axis=0)
    return erp_from(trials, np.tensordot(w, ranked, axes=(0, 0)))


# ---------------------------------------------------------------------------
# DTW averaging

_DTW_CHUNK = 8


def _dtw_accumulated(reference: np.ndarray, signals: np.ndarray) -> np.ndarray:
    """Padded accumulated-cost tensors for a batch of signals against one reference.

    Returns ``D`` of shape ``(n, T_ref + 1, T_sig + 1)`` where ``D[k, i+1, j+1]`` is
    the minimal cost of a path from (0, 0) to (i, j). Row/column 0 are the
    infinite padding. Cells on one anti-diagonal are independent, so each
    diagonal is filled in a single vectorized step.
    """
    n, T_sig = signals.shape
    T_ref = reference.shape[0]
    cost = (reference[None, :, None] - signals[:, None, :]) ** 2
    D = np.full((n, T_ref + 1, T_sig + 1), np.inf)
    D[:, 0, 0] = 0.0
    for d in range(T_ref + T_sig - 1):
        i = np.arange(max(0, d - T_sig + 1), min(d, T_ref - 1) + 1)
        j = d - i
        best = np.minimum(np.minimum(D[:, i, j], D[:, i, j + 1]), D[:, i + 1, j])
        D[:, i + 1, j + 1] = cost[:, i, j] + best
    return D


def _traceback(D: np.ndarray) -> list[tuple[int, int]]:
    # Ties prefer the diagonal, then a reference-only advance, then a signal-only advance.
    i, j = D.shape[0] - 2, D.shape[1] - 2
    path = [(i, j)]
    while i > 0 or j > 0:
        diag = D[i, j]
        ref_step = D[i, j + 1]
        sig_step = D[i + 1, j]
        if diag <= ref_step and diag <= sig_step:
            i, j = i - 1, j - 1
        elif ref_step <= sig_step:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return path


def dtw_path(reference, signal) -> list[tuple[int, int]]:
    """Minimal squared-error warping path between ``reference`` and ``signal``.

    Path entries are ``(reference_index, signal_index)`` pairs starting at
    (0, 0), ending at the last sample of both, with steps (1, 1), (1, 0)
    or (0, 1).
    """
    reference = np.asarray(reference, dtype=np.float64)
    signal = np.asarray(signal, dtype=np.float64)
    return _traceback(_dtw_accumulated(reference, signal[None, :])[0])


def warp_to_reference(path: list[tuple[int, int]], signal: np.ndarray, n_ref: int) -> np.ndarray:
    """Read ``signal`` along ``path``, keeping the first match for each reference index."""
    out = np.empty(n_ref)
    seen = np.zeros(n_ref, dtype=bool)
    for i, j in path:
        if not seen[i]:
            out[i] = signal[j]
            seen[i] = True
    return out


def _dtw_average_channel(x: np.ndarray) -> np.ndarray:
    reference = x.mean(axis=0)
    T = reference.shape[0]
    warped = np.empty_like(x)
    for start in range(0, x.shape[0], _DTW_CHUNK):
        block = x[start : start + _DTW_CHUNK]
        D = _dtw_accumulated(reference, block)
        for k in range(block.shape[0]):
            warped[start + k] = warp_to_reference(_traceback(D[k]), block[k], T)
    return warped.mean(axis=0)


def dtw_average(trials: TrialSet) -> Erp:
    """Average of trials each warped onto the simple average by DTW.

    Channels are processed independently.
    """
    if trials.n_trials < 1:
        raise SizeError("cannot average an empty trial set")
    out = np.stack(
        [_dtw_average_channel(trials.data[:, c, :]) for c in range(trials.n_channels)]
    )
    return erp_from(trials, out)


# ---------------------------------------------------------------------------
# Template baselines

@dataclass
class ErpLibrary:
    """ERPs of training subjects, labelled by subject and task."""

    entries: list[tuple[str, str, Erp]] = field(default_factory=list)

    def __post_init__(self):
        if self.entries:
            first = self.entries[0][2]
            for _, _, erp in self.entries[1:]:
                if not first.same_layout(erp):
                    raise ShapeError("library ERPs must share channels and time axis")

    def add(self, subject_id: str, task_id: str, erp: Erp) -> None:
        if self.entries and not self.entries[0][2].same_layout(erp):
            raise ShapeError("library ERPs must share channels and time axis")
        self.entries.append((subject_id, task_id, erp))

    def for_task(self, task: str) -> list[Erp]:
        found = [erp for _, t, erp in self.entries if t == task]
        if not found:
            tasks = sorted({t for _, t, _ in self.entries})
            raise TemplateLookupError(f"no library entries for task {task!r}; have {tasks}")
        return found


def global_template(library: ErpLibrary, task: str) -> Erp:
    """Grand average of all library ERPs for ``task``."""
    erps = library.for_task(task)
    return erps[0].with_data(np.mean([e.data for e in erps], axis=0))


def nearest_neighbor_template(library: ErpLibrary, task: str, query: Erp) -> Erp:
    """Library ERP of ``task`` closest to ``query`` in Frobenius norm (first wins ties)."""
    erps = library.for_task(task)
    if query.data.shape != erps[0].data.shape:
        raise ShapeError(f"query shape {query.data.shape} != library shape {erps[0].data.shape}")
    dist = [np.linalg.norm(e.data - query.data) for e in erps]
    return erps[int(np.argmin(dist))]
