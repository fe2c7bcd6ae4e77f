"""Error metrics against a target ERP and classic ERP component measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import Erp, MeasureWindow, single_channel
from .errors import DegenerateError, ShapeError, SizeError, WindowError

ArrayOrErp = Union[Erp, np.ndarray]


def _values(x: ArrayOrErp) -> np.ndarray:
    return x.data if isinstance(x, Erp) else np.asarray(x, dtype=np.float64)


def _stack(preds: Sequence[ArrayOrErp], target: ArrayOrErp) -> tuple[np.ndarray, np.ndarray]:
    if len(preds) < 1:
        raise SizeError("need at least one prediction")
    tgt = _values(target)
    stacked = np.stack([_values(p) for p in preds])
    if stacked.shape[1:] != tgt.shape:
        raise ShapeError(f"prediction shape {stacked.shape[1:]} != target shape {tgt.shape}")
    return stacked, tgt


def squared_errors(preds: Sequence[ArrayOrErp], target: ArrayOrErp) -> np.ndarray:
    """Per-prediction squared Frobenius error ``||pred - target||^2``."""
    p, t = _stack(preds, target)
    diff = (p - t).reshape(p.shape[0], -1)
    return np.einsum("ij,ij->i", diff, diff)


def rmse(preds: Sequence[ArrayOrErp], target: ArrayOrErp) -> float:
    """Root of the mean (over predictions) per-element squared error.

    Each prediction's squared error is divided by the number of elements
    (channels x samples), which reduces to a division by T for one channel.
    """
    sq = squared_errors(preds, target)
    n_elem = _values(target).size
    return float(np.sqrt(np.mean(sq / n_elem)))


def r_squared(preds: Sequence[ArrayOrErp], target: ArrayOrErp) -> float:
    """``1 - sum_b ||pred_b - target||^2 / (B * ||target||^2)``.

    The denominator is the raw, uncentred target energy, so a constant zero
    prediction scores exactly 0.
    """
    sq = squared_errors(preds, target)
    t = _values(target)
    energy = float(squared_errors([np.zeros_like(t)], t)[0])
    if energy == 0.0:
        raise DegenerateError("R^2 is undefined for an all-zero target")
    return float(1.0 - np.sum(sq / energy) / sq.size)


@dataclass(frozen=True)
class ErpMeasures:
    peak_latency_ms: float
    peak_amplitude: float
    mean_amplitude: float
    area_latency_50_ms: float
    onset_latency_ms: float

    def as_dict(self) -> dict:
        return {
            "peak_latency_ms": self.peak_latency_ms,
            "peak_amplitude": self.peak_amplitude,
            "mean_amplitude": self.mean_amplitude,
            "area_latency_50_ms": self.area_latency_50_ms,
            "onset_latency_ms": self.onset_latency_ms,
        }


def erp_measures(erp: Erp, window: MeasureWindow, channel: str | None = None) -> ErpMeasures:
    """Peak, mean amplitude, 50% area latency and fractional-peak onset.

    The window is closed at both ends. Negative-polarity windows look for the
    minimum and rectify with ``max(-x, 0)``; positive ones use the maximum and
    ``max(x, 0)``. Onset is the first sample between window start and the
    peak where the rectified signal exceeds half the absolute peak.
    """
    erp = single_channel(erp, channel)
    x = erp.data[0]
    i0, i1 = erp.axis.closed_indices(window.start_ms, window.end_ms)
    if i1 - i0 + 1 < 3:
        raise WindowError(f"measure window spans {i1 - i0 + 1} samples; need at least 3")
    seg = x[i0 : i1 + 1]
    times = erp.axis.times_ms[i0 : i1 + 1]

    ipk = int(np.argmax(seg)) if window.sign > 0 else int(np.argmin(seg))
    rect = np.maximum(window.sign * seg, 0.0)
    total = rect.sum()
    if total <= 0.0:
        raise DegenerateError(f"no {window.polarity} area inside the measure window")
    cum = np.cumsum(rect)
    i_area = int(np.flatnonzero(cum >= 0.5 * total)[0])
    thresh = 0.5 * abs(seg[ipk])
    i_onset = int(np.flatnonzero(rect[: ipk + 1] > thresh)[0])

    return ErpMeasures(
        peak_latency_ms=float(times[ipk]),
        peak_amplitude=float(seg[ipk]),
        mean_amplitude=float(seg.mean()),
        area_latency_50_ms=float(times[i_area]),
        onset_latency_ms=float(times[i_onset]),
    )
