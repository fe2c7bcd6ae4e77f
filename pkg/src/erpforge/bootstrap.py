"""Bootstrap trial sampling and the split-half evaluation harness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import alignment, estimators
from .core import Erp, MeasureWindow, SplitHalves, TrialSet, select_channel
from .errors import ConfigError, DegenerateError, ErpError, SizeError
from .measures import squared_errors

Estimator = Callable[[TrialSet], Erp]
RANDOM = "random"
CHRONOLOGICAL = "chronological"


@dataclass(frozen=True)
class TrialCountSampler:
    """Draws a trial count ``k`` in ``1..n_available`` with probability proportional to 1/k."""

    n_available: int

    def __post_init__(self):
        if self.n_available < 1:
            raise SizeError("n_available must be at least 1")

    @property
    def weights(self) -> np.ndarray:
        w = 1.0 / np.arange(1, self.n_available + 1)
        return w / w.sum()

    def draw(self, rng: np.random.Generator, size=None):
        return rng.choice(np.arange(1, self.n_available + 1), size=size, p=self.weights)


def sample_trial_count(sampler: TrialCountSampler, rng_seed) -> int:
    return int(sampler.draw(np.random.default_rng(rng_seed)))


def sample_trial_counts(sampler: TrialCountSampler, n_draws: int, rng_seed) -> np.ndarray:
    """Vectorized form of :func:`sample_trial_count` for many draws."""
    return sampler.draw(np.random.default_rng(rng_seed), size=n_draws)


def bootstrap_sample(trials: TrialSet, k: int, rng_seed) -> TrialSet:
    """``k`` trials drawn uniformly with replacement."""
    if k < 1:
        raise SizeError(f"bootstrap size must be at least 1, got {k}")
    idx = np.random.default_rng(rng_seed).integers(0, trials.n_trials, size=k)
    return trials.take(idx)


def chronological_prefix(trials: TrialSet, k: int) -> TrialSet:
    if not 1 <= k <= trials.n_trials:
        raise SizeError(f"prefix length {k} outside 1..{trials.n_trials}")
    return trials.take(np.arange(k))


def bootstrap_seed(seed: int, k: int, b: int) -> np.random.SeedSequence:
    """Independent seed for bootstrap ``b`` at trial count ``k``.

    Derived by hashing ``(seed, k, b)`` so each work item is reproducible
    regardless of evaluation order.
    """
    return np.random.SeedSequence([int(seed), int(k), int(b)])


# ---------------------------------------------------------------------------
# Named estimators

ESTIMATORS = ("simple", "tanh", "dtw", "woody", "ride", "template", "nn")


def make_estimator(
    name: str,
    *,
    window: Optional[MeasureWindow] = None,
    ride_config: Optional[alignment.RideConfig] = None,
    library: Optional[estimators.ErpLibrary] = None,
    task: Optional[str] = None,
    tanh_params: estimators.TanhParams = estimators.TanhParams(),
) -> Estimator:
    """Resolve an estimator name to a ``TrialSet -> Erp`` callable.

    ``woody`` needs ``window``; ``ride`` needs ``ride_config`` (or a window,
    used as a single C component); ``template`` and ``nn`` need a library
    and fall back to the trials' task label when ``task`` is omitted.
    """
    if name == "simple":
        return estimators.simple_average
    if name == "tanh":
        return lambda t: estimators.tanh_weighted_average(t, tanh_params)
    if name == "dtw":
        return estimators.dtw_average
    if name == "woody":
        if window is None:
            raise ConfigError("woody estimator needs a latency window")
        return lambda t: _woody_average(t, window)
    if name == "ride":
        if ride_config is None:
            if window is None:
                raise ConfigError("ride estimator needs a RideConfig or window")
            ride_config = alignment.RideConfig(c_window=window)
        return lambda t: alignment.ride_decompose(t, ride_config).reconstructed
    if name in ("template", "nn"):
        if library is None:
            raise ConfigError(f"{name} estimator needs an ERP library")
        if name == "template":
            return lambda t: estimators.global_template(library, task or t.task_id)
        return lambda t: estimators.nearest_neighbor_template(
            library, task or t.task_id, estimators.simple_average(t)
        )
    raise ConfigError(f"unknown estimator {name!r}; choose from {', '.join(ESTIMATORS)}")


def _woody_average(trials: TrialSet, window: MeasureWindow) -> Erp:
    if trials.n_trials == 1:
        return estimators.simple_average(trials)
    return alignment.woody_align(trials, window).aligned_average


# ---------------------------------------------------------------------------
# Evaluation

class EvaluationError(ErpError):
    """An estimator failed on one bootstrap sample."""

    def __init__(self, k: int, b: int, cause: BaseException):
        super().__init__(f"estimator failed at k={k}, bootstrap {b}: {type(cause).__name__}: {cause}")
        self.k = k
        self.b = b
        self.cause = cause


@dataclass(frozen=True)
class BootstrapEvalReport:
    estimator: str
    seed: int
    mode: str
    k_grid: list[int]
    rmse_per_k: list[float]
    r2_per_k: list[float]
    per_bootstrap_rmse: list[list[float]]
    B: int

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "seed": self.seed,
            "mode": self.mode,
            "k_grid": list(self.k_grid),
            "rmse": list(self.rmse_per_k),
            "r2": list(self.r2_per_k),
            "per_bootstrap": [list(r) for r in self.per_bootstrap_rmse],
        }


def evaluate_estimator(
    halves: SplitHalves,
    estimator: Union[str, Estimator],
    k_grid: Sequence[int],
    B: int = 200,
    mode: str = RANDOM,
    rng_seed: int = 0,
    *,
    channel: Optional[str] = None,
    name: Optional[str] = None,
    **estimator_options,
) -> BootstrapEvalReport:
    """RMSE and R^2 of an estimator against the conventional target-half average.

    In ``random`` mode each ``k`` gets ``B`` bootstrap samples of the input
    half; in ``chronological`` mode a single prefix of the first ``k`` input
    trials is used (``B`` is forced to 1). Errors are averaged over channels
    and samples; pass ``channel`` to evaluate one channel.
    """
    if mode not in (RANDOM, CHRONOLOGICAL):
        raise ConfigError(f"mode must be 'random' or 'chronological', got {mode!r}")
    if B < 1:
        raise ConfigError("B must be at least 1")
    if isinstance(estimator, str):
        label = estimator
        estimator = make_estimator(estimator, **estimator_options)
    else:
        label = name or getattr(estimator, "__name__", "custom")

    inp, tgt = halves.input_half, halves.target_half
    if channel is not None:
        inp, tgt = select_channel(inp, channel), select_channel(tgt, channel)
    target = estimators.simple_average(tgt)
    # same reduction as squared_errors so a zero prediction scores exactly 0
    energy = float(squared_errors([np.zeros_like(target.data)], target)[0])
    if energy == 0.0:
        raise DegenerateError("target average is identically zero; R^2 undefined")
    n_elem = target.data.size

    if mode == CHRONOLOGICAL:
        B = 1
        for k in k_grid:
            if not 1 <= k <= inp.n_trials:
                raise SizeError(f"k={k} exceeds the {inp.n_trials} input trials")

    per_boot = np.empty((len(k_grid), B))
    r2 = np.empty(len(k_grid))
    for ki, k in enumerate(k_grid):
        sq = np.empty(B)
        for b in range(B):
            if mode == CHRONOLOGICAL:
                sample = chronological_prefix(inp, k)
            else:
                sample = bootstrap_sample(inp, k, bootstrap_seed(rng_seed, k, b))
            try:
                pred = estimator(sample)
            except Exception as exc:
                raise EvaluationError(k, b, exc) from exc
            sq[b] = squared_errors([pred], target)[0]
        per_boot[ki] = np.sqrt(sq / n_elem)
        r2[ki] = 1.0 - np.sum(sq / energy) / B

    rmse = np.sqrt(np.mean(per_boot**2, axis=1))
    return BootstrapEvalReport(
        estimator=label,
        seed=int(rng_seed),
        mode=mode,
        k_grid=[int(k) for k in k_grid],
        rmse_per_k=[float(v) for v in rmse],
        r2_per_k=[float(v) for v in r2],
        per_bootstrap_rmse=per_boot.tolist(),
        B=B,
    )
