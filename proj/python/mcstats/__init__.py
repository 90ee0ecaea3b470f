"""Compensated streaming mean/variance with an exact rational oracle."""

from ._core import (
    ALGORITHMS,
    IoError,
    MomentAccumulator,
    compensated_sum,
    exact_mean_variance,
    exact_sum,
    normal_inverse_cdf,
    random_bits_at,
    run_experiment,
    run_parallel,
    two_sum,
    uniform32_at,
    uniform_at,
)

__all__ = [
    "ALGORITHMS",
    "IoError",
    "MomentAccumulator",
    "compensated_sum",
    "exact_mean_variance",
    "exact_sum",
    "normal_inverse_cdf",
    "random_bits_at",
    "run_experiment",
    "run_parallel",
    "two_sum",
    "uniform32_at",
    "uniform_at",
]
