"""Postselection-based correlation quantifiers, bounds and verification oracles."""
from .engine import (
    CorrelationResult,
    OptimizerConfig,
    c_multipartite,
    c_one_sided,
    c_two_sided,
    max_over_postselection,
)
from .objective import (
    closed_form_two_qubit_objective,
    estimation_error_profile,
    measured_projectors,
    objective_inner,
    summand_table,
)

__all__ = [
    "CorrelationResult",
    "OptimizerConfig",
    "c_multipartite",
    "c_one_sided",
    "c_two_sided",
    "max_over_postselection",
    "closed_form_two_qubit_objective",
    "estimation_error_profile",
    "measured_projectors",
    "objective_inner",
    "summand_table",
]
