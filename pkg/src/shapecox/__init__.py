"""Shape-restricted partially linear additive Cox regression.

The model is lambda(t | x, z) = lambda_0(t) exp(x' beta + sum_j g_j(z_j))
with each g_j restricted to a shape cone (monotone, convex/concave, or a
combination) instead of a smoothness class.  The package provides the
shape-restricted maximum partial likelihood fitter, the baseline
cumulative hazard estimator, variance estimation by repeated data
splitting with Wald and chi-square inference, an unrestricted Cox
baseline, and a seeded Monte Carlo study harness; the ``shapecox``
command exposes all of it on CSV files.
"""

from .cox import TcrFit, fit_tcr
from .data import CsvSchema, Dataset, Observation, load_csv, risk_set_sizes, save_csv
from .errors import (
    FitError,
    NumericalError,
    ParseError,
    SchemaError,
    SeparationError,
    SingularHessianError,
    ValidationError,
)
from .fit import FitOptions, FittedModel, fit_smple, predict_r
from .hazard import CumulativeHazard, baseline_survival, breslow_hazard, eval_hazard
from .inference import SplitVariance, chisq_region_stat, split_variance, wald_interval
from .likelihood import curvature_weights, log_partial_likelihood, s0n, score_in_r
from .shapes import (
    AdditiveComponent,
    Shape,
    eval_component,
    fit_shape,
    weighted_convex_pl,
    weighted_isotonic,
)
from .simulation import (
    ESTIMATOR_NAMES,
    RepSummary,
    Scenario,
    distance_d,
    generate,
    qq_export,
    run_study,
)
from .stats import chisq_cdf, chisq_quantile, normal_cdf, normal_quantile

__version__ = "0.1.0"

__all__ = [
    "AdditiveComponent",
    "CsvSchema",
    "ESTIMATOR_NAMES",
    "CumulativeHazard",
    "Dataset",
    "FitError",
    "FitOptions",
    "FittedModel",
    "NumericalError",
    "Observation",
    "ParseError",
    "RepSummary",
    "Scenario",
    "SchemaError",
    "SeparationError",
    "SingularHessianError",
    "SplitVariance",
    "Shape",
    "TcrFit",
    "ValidationError",
    "baseline_survival",
    "breslow_hazard",
    "chisq_cdf",
    "chisq_quantile",
    "chisq_region_stat",
    "curvature_weights",
    "distance_d",
    "eval_component",
    "eval_hazard",
    "fit_shape",
    "fit_smple",
    "fit_tcr",
    "generate",
    "load_csv",
    "log_partial_likelihood",
    "normal_cdf",
    "normal_quantile",
    "predict_r",
    "qq_export",
    "risk_set_sizes",
    "run_study",
    "s0n",
    "save_csv",
    "score_in_r",
    "split_variance",
    "wald_interval",
    "weighted_convex_pl",
    "weighted_isotonic",
]
