"""Simulated single-channel trials with known P300/N200 latency jitter.

Each trial holds a positive P300-like Gaussian bump and a negative N200-like
bump a fixed lead time earlier, placed at a per-trial latency drawn uniformly
from the sample grid inside ``p300_latency_range_ms``. Amplitude jitter,
white noise and a random linear drift are added on top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Erp, TimeAxis, TrialSet
from .errors import ConfigError, DegenerateError, SizeError


@dataclass(frozen=True)
class SimConfig:
    n_trials: int = 50
    sampling_rate_hz: float = 500.0
    t_start_ms: float = -200.0
    t_end_ms: float = 800.0
    p300_latency_range_ms: tuple[float, float] = (300.0, 500.0)
    n200_lead_ms: float = 100.0
    p300_amplitude: float = 5.0
    p300_width_ms: float = 30.0
    n200_amplitude: float = -3.0
    n200_width_ms: float = 20.0
    noise_scale: float = 1.0
    amp_jitter: float = 0.2
    drift_scale: float = 0.5  # slope std, uV per second
    rng_seed: int = 0

    def __post_init__(self):
        lo, hi = self.p300_latency_range_ms
        if self.n_trials < 1:
            raise ConfigError("n_trials must be positive")
        if not self.sampling_rate_hz > 0:
            raise ConfigError("sampling rate must be positive")
        if not self.t_start_ms < self.t_end_ms or not lo <= hi:
            raise ConfigError("time span and latency range must be ordered")
        if min(self.noise_scale, self.amp_jitter, self.drift_scale) < 0:
            raise ConfigError("noise, amplitude jitter and drift scales must be non-negative")

    @property
    def axis(self) -> TimeAxis:
        dt = 1000.0 / self.sampling_rate_hz
        n = int(np.floor((self.t_end_ms - self.t_start_ms) / dt + 1e-9)) + 1
        return TimeAxis(self.t_start_ms, self.sampling_rate_hz, n)

    @property
    def reference_latency_ms(self) -> float:
        return 0.5 * sum(self.p300_latency_range_ms)


@dataclass(frozen=True)
class SimResult:
    trials: TrialSet
    true_latencies_ms: np.ndarray
    template: Erp


def waveform(times_ms: np.ndarray, latency_ms: float, config: SimConfig) -> np.ndarray:
    """Noise-free N200 + P300 waveform with the P300 peak at ``latency_ms``."""
    p3 = config.p300_amplitude * np.exp(
        -0.5 * ((times_ms - latency_ms) / config.p300_width_ms) ** 2
    )
    n2 = config.n200_amplitude * np.exp(
        -0.5 * ((times_ms - latency_ms + config.n200_lead_ms) / config.n200_width_ms) ** 2
    )
    return p3 + n2


def simulate(config: SimConfig = SimConfig()) -> SimResult:
    rng = np.random.default_rng(config.rng_seed)
    axis = config.axis
    t = axis.times_ms
    dt = axis.dt_ms
    lo, hi = config.p300_latency_range_ms
    n_steps = int(np.floor((hi - lo) / dt + 1e-9))
    K = config.n_trials

    latencies = lo + rng.integers(0, n_steps + 1, size=K) * dt
    amps = 1.0 + config.amp_jitter * rng.uniform(-1.0, 1.0, size=K)
    slopes = config.drift_scale * rng.standard_normal(K)
    noise = config.noise_scale * rng.standard_normal((K, t.size))

    data = np.empty((K, 1, t.size))
    for k in range(K):
        data[k, 0] = amps[k] * waveform(t, latencies[k], config) + slopes[k] * t / 1000.0 + noise[k]

    trials = TrialSet(
        data,
        axis,
        ("sim",),
        subject_id="sim",
        task_id="P3",
        annotations={"true_latencies_ms": ",".join(repr(float(v)) for v in latencies)},
    )
    template = Erp(waveform(t, config.reference_latency_ms, config)[None, :], axis, ("sim",))
    return SimResult(trials, latencies, template)


def score_latency_recovery(true_ms, est_ms) -> tuple[float, float]:
    """Pearson correlation and RMSE (ms) after centering both latency series."""
    a = np.asarray(true_ms, dtype=np.float64)
    b = np.asarray(est_ms, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise SizeError("latency series must be 1-D and of equal length")
    if a.size < 3:
        raise SizeError("need at least 3 latencies to score recovery")
    ac = a - a.mean()
    bc = b - b.mean()
    sa = np.sqrt(ac @ ac)
    sb = np.sqrt(bc @ bc)
    if sa == 0.0 or sb == 0.0:
        raise DegenerateError("latency series has zero variance")
    corr = float(np.clip((ac @ bc) / (sa * sb), -1.0, 1.0))
    rmse = float(np.sqrt(np.mean((ac - bc) ** 2)))
    return corr, rmse
