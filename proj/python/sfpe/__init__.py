"""Fixed points of smoothing transforms."""

from ._core import (
    WeightModel,
    a_sequence,
    characteristic_exponent,
    classify,
    escape_check,
    extend_from_seed,
    extinction_probability,
    g_eval,
    g_inverse,
    increment_distribution,
    martingale_means,
    moment_m,
    unit_count_distribution,
    weibull_residual,
)

__all__ = [
    "WeightModel",
    "a_sequence",
    "characteristic_exponent",
    "classify",
    "escape_check",
    "extend_from_seed",
    "extinction_probability",
    "g_eval",
    "g_inverse",
    "increment_distribution",
    "martingale_means",
    "moment_m",
    "unit_count_distribution",
    "weibull_residual",
]
