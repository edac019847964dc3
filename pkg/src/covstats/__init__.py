"""Cross summary statistics (K, J and relatives) for pairs of random
measures and random sets observed on pixel grids, with exact and
Monte Carlo reference curves for standard bivariate models."""

__version__ = "0.1.0"

from .config import ExperimentConfig, config_from_dict, load_config
from .errors import CovstatsError
from .estimators import (
    Envelope,
    StatCurve,
    estimate_F2,
    estimate_H12,
    estimate_J12,
    estimate_J12_rescaled,
    estimate_K12,
    estimate_L2,
    estimate_L12,
    estimate_T12,
    estimate_void_ratio,
    mc_envelope,
)
from .experiments import (
    ExperimentResult,
    canned_config,
    compare_envelopes,
    reference_curves,
    run_experiment,
    simulate_replicate,
)
from .grid import BinaryField, GridSpec, RegionMask, ScalarField, lebesgue_ball
from .measure import CompoundSpec, MeasurePair, plug_in_p1, reweight
from .oracles import (
    LambdaLaw,
    OracleCurve,
    boolean_coverage,
    compound_J12,
    compound_K12,
    compound_L2,
    compound_L12,
    germgrain_stats,
    loggauss_K12,
)
from .randfield import ExpCovariance, MeanSurface, SeedKey, sample_gaussian_field
from .setsim import PointPattern, WrConfig, sample_dual_wr, sample_poisson, sample_wr_mixture

__all__ = [
    "BinaryField",
    "CompoundSpec",
    "CovstatsError",
    "Envelope",
    "ExpCovariance",
    "ExperimentConfig",
    "ExperimentResult",
    "GridSpec",
    "LambdaLaw",
    "MeanSurface",
    "MeasurePair",
    "OracleCurve",
    "PointPattern",
    "RegionMask",
    "ScalarField",
    "SeedKey",
    "StatCurve",
    "WrConfig",
    "boolean_coverage",
    "canned_config",
    "compare_envelopes",
    "compound_J12",
    "compound_K12",
    "compound_L2",
    "compound_L12",
    "config_from_dict",
    "estimate_F2",
    "estimate_H12",
    "estimate_J12",
    "estimate_J12_rescaled",
    "estimate_K12",
    "estimate_L2",
    "estimate_L12",
    "estimate_T12",
    "estimate_void_ratio",
    "germgrain_stats",
    "lebesgue_ball",
    "load_config",
    "loggauss_K12",
    "mc_envelope",
    "plug_in_p1",
    "reference_curves",
    "reweight",
    "run_experiment",
    "sample_dual_wr",
    "sample_gaussian_field",
    "sample_poisson",
    "sample_wr_mixture",
    "simulate_replicate",
]
