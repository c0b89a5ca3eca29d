"""County-level death forecasting: GLM predictors, CLEP ensembles, MEPI intervals."""

from ._core import (
    GlmFit,
    OlsFit,
    Panel,
    allocate_deaths,
    clep_loss,
    clep_weights,
    enforce_monotonicity,
    fit_ols,
    fit_poisson_glm,
    forecast,
    load_panel,
    mape,
    mepi_interval,
    normalized_error,
    percentile_ranks,
    poisson_loglik,
    rank_diagnostic,
    raw_mae,
    sqrt_mae,
    standardize,
    summary_percentiles,
    weights_from_exponents,
)

__all__ = [
    "GlmFit",
    "OlsFit",
    "Panel",
    "allocate_deaths",
    "clep_loss",
    "clep_weights",
    "enforce_monotonicity",
    "fit_ols",
    "fit_poisson_glm",
    "forecast",
    "load_panel",
    "mape",
    "mepi_interval",
    "normalized_error",
    "percentile_ranks",
    "poisson_loglik",
    "rank_diagnostic",
    "raw_mae",
    "sqrt_mae",
    "standardize",
    "summary_percentiles",
    "weights_from_exponents",
]

__version__ = "0.1.0"
