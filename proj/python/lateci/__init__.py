"""Weak-instrument-robust inference for the local average treatment effect."""

from ._core import (
    ConfigError,
    DegenerateDataError,
    DomainError,
    LateciError,
    ParseError,
    Dataset,
    DrmlResult,
    QuadCoefficients,
    ScoreSample,
    critical_value,
    cross_fit_scores,
    dgp_generate,
    dn_statistic,
    drml_estimate,
    invert_score_test,
    ks_distance,
    make_folds,
    normal_quantile,
    quad_coefficients,
    score_confidence_set,
    score_statistic,
    simulate,
    weak_limit_draws,
)

__all__ = [name for name in dir() if not name.startswith("_")]
