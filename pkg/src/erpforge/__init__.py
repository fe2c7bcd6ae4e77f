"""Few-trial ERP estimation: robust averaging, latency alignment, bootstrap evaluation."""

from .alignment import AlignmentResult, RideConfig, RideResult, ride_decompose, woody_align
from .bootstrap import (
    BootstrapEvalReport,
    TrialCountSampler,
    bootstrap_sample,
    chronological_prefix,
    evaluate_estimator,
    sample_trial_count,
)
from .core import (
    Erp,
    MeasureWindow,
    SplitHalves,
    TimeAxis,
    TrialSet,
    UncertainErp,
    baseline_correct,
    crop,
    select_channel,
    split_half,
)
from .estimators import (
    ErpLibrary,
    TanhParams,
    dtw_average,
    global_template,
    nearest_neighbor_template,
    simple_average,
    tanh_weighted_average,
)
from .losses import (
    AnnealSchedule,
    aggregate_similarity,
    anneal_sigma,
    calibration_score,
    contrastive_loss,
    gaussian_nll,
    inverse_variance_combine,
    latent_permutation_loss,
    permute_latents,
)
from .measures import ErpMeasures, erp_measures, r_squared, rmse
from .synth import SimConfig, SimResult, score_latency_recovery, simulate

__version__ = "0.1.0"
