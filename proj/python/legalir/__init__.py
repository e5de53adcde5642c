"""Legal case and statute retrieval pipeline."""

from ._core import (
    DataError,
    Index,
    UsageError,
    dynamic_cutoff,
    filter_duplicates,
    generate_synthetic,
    macro_f2,
    micro_f1,
    ndcg_at_k,
    preprocess_case,
    run_stage,
    threshold_cutoff,
    tokenize,
)

__all__ = [
    "DataError",
    "Index",
    "UsageError",
    "dynamic_cutoff",
    "filter_duplicates",
    "generate_synthetic",
    "macro_f2",
    "micro_f1",
    "ndcg_at_k",
    "preprocess_case",
    "run_stage",
    "threshold_cutoff",
    "tokenize",
]
