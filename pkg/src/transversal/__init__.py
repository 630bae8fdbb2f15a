"""Independent transversals in cover graphs: exact search, a resampling
finisher, semi-random nibble rounds and list-halving reductions."""

from .cover import (
    ColourRef,
    CoverInstance,
    Embedding,
    InstanceError,
    InstanceStats,
    PartialColouring,
    apply_colouring,
    is_independent_transversal,
    is_proper,
    restrict,
    stats,
    truncate_lists,
    validate,
)
from .finisher import FinisherParams, finish
from .nibble import NibbleParams, monte_carlo_check, nibble_round
from .oracle import SearchBudget, count_transversals, find_transversal_exact
from .phase1 import halve_lists, reduce, trim_high_degree
from .pipeline import Budgets, build_schedule, run_pipeline

__all__ = [
    "ColourRef", "CoverInstance", "Embedding", "InstanceError", "InstanceStats", "PartialColouring",
    "apply_colouring", "is_independent_transversal", "is_proper", "restrict", "stats", "truncate_lists",
    "validate", "FinisherParams", "finish", "NibbleParams", "monte_carlo_check", "nibble_round",
    "SearchBudget", "count_transversals", "find_transversal_exact", "halve_lists", "reduce",
    "trim_high_degree", "Budgets", "build_schedule", "run_pipeline",
]
