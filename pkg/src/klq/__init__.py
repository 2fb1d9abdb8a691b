"""Optimized coefficients, bounds and certificates for the KL Q-function expression."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .core import (
    BASELINE,
    DomainError,
    KlCoefficients,
    Limits,
    TailKind,
    TailLimit,
    abs_error,
    abs_error_deriv,
    from_legacy,
    kl_deriv,
    kl_eval,
    limits,
    q_deriv,
    q_ref,
    rel_error,
    rel_error_deriv,
    tail_limit,
)
from .metrics import ErrorReport, Extremum, Metric, d_max, d_tot, error_report, find_extrema, r_max
from .minimax import (
    BMode,
    ConvergenceError,
    Origin,
    Role,
    SolverResult,
    VariantError,
    VariantSpec,
    all_variants,
    closed_form,
    residual_system,
    solve_minimax,
)
from .search import Bound, InfeasibleSearchError, SearchResult, SearchSpec, search_total
from .verification import Certificate, certify, compare_to_baseline

__all__ = [
    "BACKEND", "BASELINE", "DomainError", "KlCoefficients", "Limits", "TailKind", "TailLimit",
    "abs_error", "abs_error_deriv", "from_legacy", "kl_deriv", "kl_eval", "limits", "q_deriv",
    "q_ref", "rel_error", "rel_error_deriv", "tail_limit",
    "ErrorReport", "Extremum", "Metric", "d_max", "d_tot", "error_report", "find_extrema", "r_max",
    "BMode", "ConvergenceError", "Origin", "Role", "SolverResult", "VariantError", "VariantSpec",
    "all_variants", "closed_form", "residual_system", "solve_minimax",
    "Bound", "InfeasibleSearchError", "SearchResult", "SearchSpec", "search_total",
    "Certificate", "certify", "compare_to_baseline",
]
