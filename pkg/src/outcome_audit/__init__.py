"""Robust outcome tests for auditing group-specific decision thresholds."""

from .distributions import (
    Beta,
    Binomial,
    Discrete,
    Empirical,
    ExtendedDistribution,
    Gamma,
    Normal,
    Order,
    OrderingReport,
    Transform,
    Transformed,
    binned_posterior,
    cdf,
    check_ordering,
    conditional_mean_above,
    tilt,
)
from .estimation import (
    ConfidenceRegion,
    DeltaEstimates,
    GroupedSample,
    RateSummary,
    chi2_2df_quantile,
    confidence_region,
    delta_with_errors,
    estimate_rates,
    robust_p_value,
)
from .policies import (
    BetaCdf,
    DyadicApproximation,
    Logistic,
    StepFunction,
    Threshold,
    apply,
    dyadic_approximation,
    generated_distribution,
    policies_mlrp_ordered,
)
from .polarity import Conclusion, DecisionPolarity
from .verdicts import POINT, Mode, TestKind, Verdict, benchmark_test, robust_outcome_test, standard_outcome_test

__version__ = "0.1.0"
