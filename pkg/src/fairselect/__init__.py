"""Centralized candidate-to-institution selection under biased utility estimates."""

from fairselect.bias import BetaBias, ImplicitVariance, NoisyBeta, apply_bias
from fairselect.core import (
    UNASSIGNED,
    Assignment,
    ConfigError,
    GroupLabels,
    InputError,
    Instance,
    LatentProfile,
    SizeError,
    brute_force_stable,
    verify_stable,
)
from fairselect.harness import ExperimentConfig, ExperimentResult, Sweep, emit_results, run_experiment
from fairselect.matching import (
    ConstraintPolicy,
    InfeasibleError,
    group_constrained,
    institution_wise,
    quota,
    relaxed_group,
    relaxed_institution,
    serial_dictatorship,
)
from fairselect.metrics import MetricsReport, evaluate, preference_fairness, representational_fairness, utility_ratio
from fairselect.sampling import (
    MallowsModel,
    Pareto,
    TruncGaussian,
    Uniform01,
    kendall_tau,
    ranking_at_distance,
    sample_mallows,
    sample_mallows_many,
    sample_utilities,
)
from fairselect.theory import TheoryParams, f_order_stat, logconcave_bound, predicted_alphas, predicted_metrics_uniform

__all__ = [name for name in dir() if not name.startswith("_")]
