"""Set selection under single-layer self-attention objectives."""

from ._attnopt import (
    Instance,
    NumericalError,
    RewardFunction,
    Selection,
    ValidationError,
    attention_matrix,
    beam_search,
    brute_force,
    generate,
    knn_retrieval,
    load_instance,
    objective,
    retrieve,
    save_instance,
    solve,
)

__all__ = [
    "Instance",
    "NumericalError",
    "RewardFunction",
    "Selection",
    "ValidationError",
    "attention_matrix",
    "beam_search",
    "brute_force",
    "generate",
    "knn_retrieval",
    "load_instance",
    "objective",
    "retrieve",
    "save_instance",
    "solve",
]
