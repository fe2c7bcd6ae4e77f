"""Trial and ERP containers plus the basic epoch operations.

All sample values are held as float64 arrays that are flagged read-only after
construction, so containers can be shared freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import ChannelError, ConfigError, DomainError, ShapeError, SizeError, WindowError

POSITIVE = "positive"
NEGATIVE = "negative"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeAxis:
    """Uniform sampling grid; sample ``i`` lies at ``t0_ms + i * 1000 / sampling_rate_hz``."""

    t0_ms: float
    sampling_rate_hz: float
    n_samples: int

    def __post_init__(self):
        if not self.sampling_rate_hz > 0 or not math.isfinite(self.sampling_rate_hz):
            raise ConfigError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigError(f"n_samples must be a positive integer, got {self.n_samples}")
        if not math.isfinite(self.t0_ms):
            raise ConfigError("t0_ms must be finite")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "t0_ms", float(self.t0_ms))
        object.__setattr__(self, "sampling_rate_hz", float(self.sampling_rate_hz))

    @property
    def dt_ms(self) -> float:
        return 1000.0 / self.sampling_rate_hz

    @property
    def times_ms(self) -> np.ndarray:
        return self.t0_ms + np.arange(self.n_samples) * self.dt_ms

    @property
    def end_ms(self) -> float:
        return self.t0_ms + (self.n_samples - 1) * self.dt_ms

    def time_of(self, index: int) -> float:
        return self.t0_ms + index * self.dt_ms

    def _tol(self) -> float:
        return 1e-6 * self.dt_ms

    def half_open_mask(self, start_ms: float, end_ms: float) -> np.ndarray:
        t = self.times_ms
        tol = self._tol()
        return (t >= start_ms - tol) & (t < end_ms - tol)

    def closed_mask(self, start_ms: float, end_ms: float) -> np.ndarray:
        t = self.times_ms
        tol = self._tol()
        return (t >= start_ms - tol) & (t <= end_ms + tol)

    def closed_indices(self, start_ms: float, end_ms: float) -> tuple[int, int]:
        """First and last sample index inside ``[start_ms, end_ms]``.

        Raises WindowError when no sample falls in the span.
        """
        idx = np.flatnonzero(self.closed_mask(start_ms, end_ms))
        if idx.size == 0:
            raise WindowError(
                f"window [{start_ms}, {end_ms}] ms has no samples on axis "
                f"[{self.t0_ms}, {self.end_ms}] ms"
            )
        return int(idx[0]), int(idx[-1])


@dataclass(frozen=True)
class MeasureWindow:
    start_ms: float
    end_ms: float
    polarity: str = POSITIVE

    def __post_init__(self):
        if not self.start_ms < self.end_ms:
            raise WindowError(f"window start {self.start_ms} must precede end {self.end_ms}")
        if self.polarity not in (POSITIVE, NEGATIVE):
            raise ConfigError(f"polarity must be 'positive' or 'negative', got {self.polarity!r}")

    @property
    def sign(self) -> float:
        return 1.0 if self.polarity == POSITIVE else -1.0


def _check_names(names: Sequence[str], n_channels: int) -> tuple[str, ...]:
    names = tuple(str(n) for n in names)
    if len(names) != n_channels:
        raise ShapeError(f"{len(names)} channel names for {n_channels} channels")
    return names


@dataclass(frozen=True)
class TrialSet:
    """Stack of epochs shaped ``(n_trials, n_channels, n_samples)``.

    ``annotations`` carries free-form string metadata (for example simulated
    ground-truth latencies) through file round trips.
    """

    data: np.ndarray
    axis: TimeAxis
    channel_names: tuple[str, ...]
    subject_id: str = ""
    task_id: str = ""
    annotations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 3:
            raise ShapeError(f"trial data must be 3-D (trials, channels, samples), got {data.shape}")
        if data.shape[0] < 1:
            raise SizeError("a TrialSet needs at least one trial")
        if data.shape[2] != self.axis.n_samples:
            raise ShapeError(f"{data.shape[2]} samples but axis declares {self.axis.n_samples}")
        if not np.all(np.isfinite(data)):
            raise ShapeError("trial data contains non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", _check_names(self.channel_names, data.shape[1]))
        object.__setattr__(self, "annotations", dict(self.annotations))

    @property
    def n_trials(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def n_samples(self) -> int:
        return self.data.shape[2]

    def take(self, indices) -> "TrialSet":
        """Trials at ``indices`` (repeats allowed) as a new set."""
        return replace(self, data=self.data[np.asarray(indices, dtype=np.intp)])

    def with_data(self, data) -> "TrialSet":
        return replace(self, data=data)


@dataclass(frozen=True)
class Erp:
    """A single ``(n_channels, n_samples)`` waveform."""

    data: np.ndarray
    axis: TimeAxis
    channel_names: tuple[str, ...]

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2:
            raise ShapeError(f"ERP data must be 2-D (channels, samples), got {data.shape}")
        if data.shape[1] != self.axis.n_samples:
            raise ShapeError(f"{data.shape[1]} samples but axis declares {self.axis.n_samples}")
        if not np.all(np.isfinite(data)):
            raise ShapeError("ERP data contains non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", _check_names(self.channel_names, data.shape[0]))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def with_data(self, data) -> "Erp":
        return replace(self, data=data)

    def same_layout(self, other: "Erp") -> bool:
        return (
            self.data.shape == other.data.shape
            and self.axis == other.axis
            and self.channel_names == other.channel_names
        )


@dataclass(frozen=True)
class UncertainErp:
    """ERP mean with a point-wise standard deviation of the same shape."""

    mean: Erp
    sigma: np.ndarray

    def __post_init__(self):
        sigma = _frozen(self.sigma)
        if sigma.shape != self.mean.data.shape:
            raise ShapeError(f"sigma shape {sigma.shape} != mean shape {self.mean.data.shape}")
        if not np.all(sigma > 0) or not np.all(np.isfinite(sigma)):
            raise DomainError("sigma must be finite and strictly positive everywhere")
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class SplitHalves:
    input_half: TrialSet
    target_half: TrialSet
    input_indices: tuple[int, ...] = ()
    target_indices: tuple[int, ...] = ()


def erp_from(trials: TrialSet, data) -> Erp:
    """Wrap a 2-D array in an Erp sharing ``trials``' axis and channel names."""
    return Erp(data, trials.axis, trials.channel_names)


def split_half(trials: TrialSet, rng_seed: int) -> SplitHalves:
    """Uniformly partition trials into an input half and a target half.

    With an odd count the extra trial goes to the input half. Each half
    keeps the original (chronological) order of its trials.
    """
    n = trials.n_trials
    if n < 2:
        raise SizeError(f"split_half needs at least 2 trials, got {n}")
    perm = np.random.default_rng(rng_seed).permutation(n)
    n_in = (n + 1) // 2
    idx_in = np.sort(perm[:n_in])
    idx_tg = np.sort(perm[n_in:])
    return SplitHalves(
        trials.take(idx_in),
        trials.take(idx_tg),
        tuple(int(i) for i in idx_in),
        tuple(int(i) for i in idx_tg),
    )


def baseline_correct(trials: TrialSet, window: tuple[float, float] = (-100.0, 0.0)) -> TrialSet:
    """Subtract each trial/channel mean over the half-open window ``[start, end)``."""
    start, end = window
    mask = trials.axis.half_open_mask(start, end)
    if not mask.any():
        raise WindowError(f"baseline window [{start}, {end}) ms contains no samples")
    offset = trials.data[:, :, mask].mean(axis=2, keepdims=True)
    return trials.with_data(trials.data - offset)


def crop(trials: TrialSet, start_ms: float, end_ms: float) -> TrialSet:
    """Keep samples with time in the closed span ``[start_ms, end_ms]``."""
    axis = trials.axis
    tol = axis._tol()
    if start_ms > end_ms or start_ms < axis.t0_ms - tol or end_ms > axis.end_ms + tol:
        raise WindowError(
            f"crop span [{start_ms}, {end_ms}] ms outside axis [{axis.t0_ms}, {axis.end_ms}] ms"
        )
    i0, i1 = axis.closed_indices(start_ms, end_ms)
    new_axis = TimeAxis(axis.time_of(i0), axis.sampling_rate_hz, i1 - i0 + 1)
    return replace(trials, data=trials.data[:, :, i0 : i1 + 1], axis=new_axis)


def select_channel(x: Union[Erp, TrialSet], name: str):
    """Single-channel view of an Erp or TrialSet."""
    try:
        ci = x.channel_names.index(name)
    except ValueError:
        raise ChannelError(
            f"unknown channel {name!r}; available: {', '.join(x.channel_names)}"
        ) from None
    data = x.data[ci : ci + 1] if isinstance(x, Erp) else x.data[:, ci : ci + 1]
    return replace(x, data=data, channel_names=(name,))


def single_channel(x: Union[Erp, TrialSet], channel: str | None = None):
    """Select ``channel`` if given, otherwise insist the input has one channel."""
    if channel is not None:
        return select_channel(x, channel)
    if len(x.channel_names) != 1:
        raise ShapeError(
            f"operation needs a single channel, input has {len(x.channel_names)}; "
            "select one by name"
        )
    return x
