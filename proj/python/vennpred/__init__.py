"""Venn prediction with neural-network taxonomies."""

from ._core import (
    DataError,
    NumericalError,
    brier,
    cross_entropy,
    generate_synthetic,
    miscalibration_pvalue,
    mlp_forward,
    poisson_binomial_pmf,
    rebalance,
    reliability,
    run_batch,
    run_online,
    score_features,
    train_mlp,
    venn_predict,
)

__all__ = [
    "DataError",
    "NumericalError",
    "brier",
    "cross_entropy",
    "generate_synthetic",
    "miscalibration_pvalue",
    "mlp_forward",
    "poisson_binomial_pmf",
    "rebalance",
    "reliability",
    "run_batch",
    "run_online",
    "score_features",
    "train_mlp",
    "venn_predict",
]
