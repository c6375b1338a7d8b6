"""Robust multivariate location and scatter: KSD initial estimator and Rocke S-estimator."""

from .datagen import ContaminationConfig, derive_seed, generate_sample
from .directions import (
    DirectionSet,
    StandardizedData,
    kurtosis_coefficient,
    kurtosis_directions,
    norm_extreme_directions,
    specific_directions,
    standardize,
)
from .harness import ExperimentConfig, ExperimentRecord, bench_timing, run_experiment, summarize
from .ksd import KsdConfig, OutlyingnessResult, RobustEstimate, ksd_estimate, outlyingness
from .metrics import DivergencePair, divergences, kl_location, kl_scatter
from .rocke import (
    RockeConfig,
    consistency_correction,
    mscale,
    rho_translated_biweight,
    rocke_sestimator,
)
from .exceptions import KsdError

__version__ = "0.1.0"
