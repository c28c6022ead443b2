"""Streaming calibration metrics: ECE, classwise ECE and Full-ECE."""

from ._core import (
    DEFAULT_CELL_BUDGET,
    STABILITY_BINS,
    BudgetError,
    ClasswiseAccumulator,
    ConfidenceAccumulator,
    DomainError,
    EmptyAccumulatorError,
    Error,
    FullAccumulator,
    ParseError,
    ShapeError,
    apply_temperature,
    bin_index,
    compute_cw_ece,
    compute_ece,
    compute_full_ece,
    generate,
    merge_full_from_classwise,
    oracle_metrics,
    population_rsd,
    reliability_curve,
    softmax,
    stability,
    token_frequency,
)

__all__ = [
    "DEFAULT_CELL_BUDGET",
    "STABILITY_BINS",
    "BudgetError",
    "ClasswiseAccumulator",
    "ConfidenceAccumulator",
    "DomainError",
    "EmptyAccumulatorError",
    "Error",
    "FullAccumulator",
    "ParseError",
    "ShapeError",
    "apply_temperature",
    "bin_index",
    "compute_cw_ece",
    "compute_ece",
    "compute_full_ece",
    "evaluate",
    "generate",
    "merge_full_from_classwise",
    "oracle_metrics",
    "population_rsd",
    "reliability_curve",
    "softmax",
    "stability",
    "token_frequency",
]


def evaluate(probs, labels, num_bins=10, normalization="paper"):
    """Return {"ece", "cw-ece", "full-ece"} for an (N, K) array and N labels."""
    import numpy as np

    probs = np.ascontiguousarray(probs, dtype=np.float64)
    k = probs.shape[1]
    conf = ConfidenceAccumulator(num_bins)
    cw = ClasswiseAccumulator(k, num_bins)
    full = FullAccumulator(k, num_bins)
    for acc in (conf, cw, full):
        acc.add_batch(probs, labels)
    return {
        "ece": compute_ece(conf),
        "cw-ece": compute_cw_ece(cw),
        "full-ece": compute_full_ece(full, normalization),
    }
