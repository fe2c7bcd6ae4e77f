"""Latency-correcting estimators: Woody alignment and RIDE decomposition.

Both work on a single channel. A shift ``s`` applied to a trial ``x`` produces
``y[t] = x[t + s]``; samples pulled from beyond the trial edges repeat the
edge value. A trial whose component peaks ``s`` samples later than the
template therefore gets a positive shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Erp, MeasureWindow, NEGATIVE, POSITIVE, TimeAxis, TrialSet, single_channel
from .errors import ConfigError, SizeError, WindowError

#: Expanded latency windows (ms) for Woody alignment per ERP component.
WOODY_WINDOWS = {
    "N170": (-110.0, 350.0),
    "MMN": (-125.0, 425.0),
    "N2pc": (0.0, 475.0),
    "N400": (100.0, 700.0),
    "P3": (100.0, 800.0),
    "LRP": (-300.0, 200.0),
    "ERN": (-200.0, 300.0),
}

#: RIDE component windows (ms); ``None`` marks an unused component.
RIDE_WINDOWS = {
    "N170": {"S": (110.0, 150.0), "C": (100.0, 900.0), "R": (-300.0, 300.0)},
    "MMN": {"S": (125.0, 225.0), "C": (100.0, 900.0), "R": (-300.0, 300.0)},
    "N2pc": {"S": (200.0, 275.0), "C": (100.0, 900.0), "R": (-300.0, 300.0)},
    "N400": {"S": (0.0, 500.0), "C": (300.0, 500.0), "R": (-300.0, 300.0)},
    "P3": {"S": (0.0, 500.0), "C": (300.0, 600.0), "R": (-300.0, 300.0)},
    "LRP": {"S": None, "C": None, "R": (-100.0, 0.0)},
    "ERN": {"S": None, "C": None, "R": (0.0, 100.0)},
}

COMPONENT_POLARITY = {
    "N170": NEGATIVE,
    "MMN": NEGATIVE,
    "N2pc": NEGATIVE,
    "N400": NEGATIVE,
    "P3": POSITIVE,
    "LRP": NEGATIVE,
    "ERN": NEGATIVE,
}


def woody_window(component: str) -> MeasureWindow:
    start, end = WOODY_WINDOWS[component]
    return MeasureWindow(start, end, COMPONENT_POLARITY[component])


@dataclass(frozen=True)
class AlignmentResult:
    shifts_samples: np.ndarray
    aligned_average: Erp
    iterations: int
    converged: bool
    max_shift: int = 0

    def shifts_ms(self, axis: TimeAxis) -> np.ndarray:
        return self.shifts_samples * axis.dt_ms


def shift_trials(x: np.ndarray, shifts) -> np.ndarray:
    """Edge-filled shift of each row of ``x`` (trials x samples)."""
    T = x.shape[-1]
    shifts = np.asarray(shifts, dtype=np.intp)
    idx = np.clip(np.arange(T)[None, :] + shifts[:, None], 0, T - 1)
    return np.take_along_axis(x, idx, axis=1)


def _place(wave: np.ndarray, shifts) -> np.ndarray:
    """Copies of ``wave`` delayed by each shift, zero-filled (inverse of locking)."""
    T = wave.shape[0]
    shifts = np.asarray(shifts, dtype=np.intp)
    src = np.arange(T)[None, :] - shifts[:, None]
    valid = (src >= 0) & (src < T)
    return np.where(valid, wave[np.clip(src, 0, T - 1)], 0.0)


def _shift_candidates(max_shift: int) -> np.ndarray:
    # Ordered 0, -1, 1, -2, 2, ... so argmax ties resolve to the smallest shift.
    steps = np.arange(1, max_shift + 1)
    return np.concatenate([[0], np.column_stack([-steps, steps]).ravel()]).astype(np.intp)


def best_shifts(x: np.ndarray, template: np.ndarray, i0: int, i1: int, max_shift: int) -> np.ndarray:
    """Per-trial integer shift maximizing Pearson correlation with ``template``.

    Correlation is evaluated on samples ``i0..i1`` (inclusive) of the template
    against the shifted trial. A template that is flat on the window gives
    zero shifts.
    """
    T = x.shape[1]
    tpl = template[i0 : i1 + 1]
    tpl = tpl - tpl.mean()
    tpl_norm = np.sqrt(tpl @ tpl)
    if tpl_norm == 0.0:
        return np.zeros(x.shape[0], dtype=np.intp)
    cand = _shift_candidates(max_shift)
    idx = np.clip(np.arange(i0, i1 + 1)[None, :] + cand[:, None], 0, T - 1)
    out = np.empty(x.shape[0], dtype=np.intp)
    for k in range(x.shape[0]):
        seg = x[k][idx]
        seg = seg - seg.mean(axis=1, keepdims=True)
        norms = np.sqrt(np.einsum("ij,ij->i", seg, seg))
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = (seg @ tpl) / (norms * tpl_norm)
        corr[norms == 0.0] = -np.inf
        out[k] = cand[int(np.argmax(corr))] if np.isfinite(corr).any() else 0
    return out


def _stat(x: np.ndarray, how: str) -> np.ndarray:
    if how == "mean":
        return x.mean(axis=0)
    if how == "median":
        return np.median(x, axis=0)
    raise ConfigError(f"template statistic must be 'mean' or 'median', got {how!r}")


def _center(shifts: np.ndarray, how: str, bound: int) -> np.ndarray:
    ref = np.mean(shifts) if how == "mean" else np.median(shifts)
    return np.clip(shifts - int(np.round(ref)), -bound, bound)


def woody_align(
    trials: TrialSet,
    window: MeasureWindow,
    max_iters: int = 20,
    *,
    max_shift: Optional[int] = None,
    template: str = "mean",
    channel: Optional[str] = None,
) -> AlignmentResult:
    """Iteratively align trials to their evolving average.

    Each iteration estimates every trial's shift against the current template
    by maximizing correlation inside ``window`` and rebuilds the template from
    the shifted trials. Shifts are re-centred to zero mean each iteration and
    bounded by half the window width unless ``max_shift`` is given. Iteration
    stops once the mean absolute change of the shifts drops below one sample.
    """
    trials = single_channel(trials, channel)
    if trials.n_trials < 2:
        raise SizeError(f"Woody alignment needs at least 2 trials, got {trials.n_trials}")
    if max_iters < 1:
        raise ConfigError("max_iters must be at least 1")
    x = trials.data[:, 0, :]
    i0, i1 = trials.axis.closed_indices(window.start_ms, window.end_ms)
    width = i1 - i0 + 1
    if width < 3:
        raise WindowError(f"Woody window spans {width} samples; need at least 3")
    bound = width // 2 if max_shift is None else int(max_shift)

    shifts = np.zeros(trials.n_trials, dtype=np.intp)
    tpl = _stat(x, template)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new = _center(best_shifts(x, tpl, i0, i1, bound), "mean", bound)
        change = np.mean(np.abs(new - shifts))
        shifts = new
        tpl = _stat(shift_trials(x, shifts), template)
        if change < 1.0:
            converged = True
            break
    avg = Erp(tpl[None, :], trials.axis, trials.channel_names)
    return AlignmentResult(shifts, avg, it, converged, bound)


# ---------------------------------------------------------------------------
# RIDE

_ORDER = ("S", "C", "R")


@dataclass(frozen=True)
class RideConfig:
    """Component windows and iteration limits for :func:`ride_decompose`.

    Absent windows (``None``) drop that component. C and R latencies are both
    estimated by cross-correlation; no response-time markers are used.
    """

    s_window: Optional[MeasureWindow] = None
    c_window: Optional[MeasureWindow] = None
    r_window: Optional[MeasureWindow] = None
    max_outer_iters: int = 10
    latency_tol_samples: int = 1
    taper_samples: int = 10

    def __post_init__(self):
        if not self.windows:
            raise ConfigError("RIDE needs at least one component window")
        if self.max_outer_iters < 1:
            raise ConfigError("max_outer_iters must be at least 1")

    @property
    def windows(self) -> dict[str, MeasureWindow]:
        found = {"S": self.s_window, "C": self.c_window, "R": self.r_window}
        return {k: w for k, w in found.items() if w is not None}

    @classmethod
    def for_component(cls, component: str, **kwargs) -> "RideConfig":
        pol = COMPONENT_POLARITY[component]
        wins = {
            f"{name.lower()}_window": (MeasureWindow(*span, pol) if span else None)
            for name, span in RIDE_WINDOWS[component].items()
        }
        return cls(**wins, **kwargs)


@dataclass(frozen=True)
class RideResult:
    components: dict[str, Erp]
    latencies: dict[str, AlignmentResult]
    reconstructed: Erp
    iterations: int
    converged: bool
    windows_samples: dict[str, tuple[int, int]] = field(default_factory=dict)


def _taper(wave: np.ndarray, i0: int, i1: int, n_taper: int) -> np.ndarray:
    out = np.zeros_like(wave)
    seg = wave[i0 : i1 + 1].copy()
    n = min(n_taper, seg.size // 2)
    if n > 0:
        ramp = np.arange(n) / n
        seg[:n] *= ramp
        seg[-n:] *= ramp[::-1]
    out[i0 : i1 + 1] = seg
    return out


def ride_decompose(
    trials: TrialSet, config: RideConfig, *, channel: Optional[str] = None
) -> RideResult:
    """Residue-iteration decomposition into S, C and R components.

    S is stimulus locked. C and R latencies start from a median-template Woody
    alignment inside their windows and are then re-estimated from residuals.
    Each pass takes one component at a time: the other components (placed at
    their per-trial latencies) are subtracted from every trial, the residuals
    are latency-locked, and the component waveform becomes their point-wise
    median restricted to its window with linear tapers at the edges.
    """
    trials = single_channel(trials, channel)
    if trials.n_trials < 2:
        raise SizeError(f"RIDE needs at least 2 trials, got {trials.n_trials}")
    x = trials.data[:, 0, :]
    K, T = x.shape
    axis = trials.axis
    windows = config.windows
    names = [n for n in _ORDER if n in windows]

    spans = {}
    for name in names:
        w = windows[name]
        i0, i1 = axis.closed_indices(w.start_ms, w.end_ms)
        if i1 - i0 + 1 < 3:
            raise WindowError(f"RIDE {name} window spans fewer than 3 samples")
        spans[name] = (i0, i1)
    bounds = {n: (spans[n][1] - spans[n][0] + 1) // 2 for n in names}

    lat = {}
    for name in names:
        if name == "S":
            lat[name] = np.zeros(K, dtype=np.intp)
        else:
            lat[name] = woody_align(trials, windows[name], template="median").shifts_samples
    wave = {name: np.zeros(T) for name in names}
    have_wave = {name: False for name in names}

    converged = False
    it = 0
    for it in range(1, config.max_outer_iters + 1):
        updates = []
        for name in names:
            i0, i1 = spans[name]
            others = sum(
                (_place(wave[o], lat[o]) for o in names if o != name), np.zeros((K, T))
            )
            resid = x - others
            if name != "S" and have_wave[name]:
                new = best_shifts(resid, wave[name], i0, i1, bounds[name])
                new = _center(new, "median", bounds[name])
                updates.append(np.mean(np.abs(new - lat[name])))
                lat[name] = new
            locked = shift_trials(resid, lat[name])
            wave[name] = _taper(np.median(locked, axis=0), i0, i1, config.taper_samples)
            have_wave[name] = True
        if names == ["S"] or (updates and max(updates) < config.latency_tol_samples):
            converged = True
            break

    recon = np.zeros(T)
    for name in names:
        med = int(np.round(np.median(lat[name])))
        recon += _place(wave[name], [med])[0]

    def as_erp(a):
        return Erp(a[None, :], axis, trials.channel_names)

    latencies = {}
    for name in names:
        if name == "S":
            continue
        aligned = shift_trials(x, lat[name]).mean(axis=0)
        latencies[name] = AlignmentResult(
            lat[name].copy(), as_erp(aligned), it, converged, bounds[name]
        )
    return RideResult(
        components={n: as_erp(wave[n]) for n in names},
        latencies=latencies,
        reconstructed=as_erp(recon),
        iterations=it,
        converged=converged,
        windows_samples=spans,
    )
