"""Numerical laboratory for noncommutative martingale inequalities on
finite matrix algebras with normalized trace."""
from .algebra import HermitianMatrix, PExponent, PositiveOperator, TraceContext, eigh, mpow, schatten
from .filtration import FULL, SCALAR, SubalgebraSpec, Tower, cond_exp, preset_tower, random_tower, validate_tower
from .inequalities import (
    bg_report,
    cor13_report,
    dual_doob_report,
    lemma_slacks,
    proof_trace_thm11,
    proof_trace_thm12,
    square_functions,
    stein_report,
)
from .maximal import doob_report, maximal_dual_bound, maximal_primal

__version__ = "0.1.0"

__all__ = [
    "FULL", "SCALAR", "HermitianMatrix", "PExponent", "PositiveOperator", "SubalgebraSpec", "Tower",
    "TraceContext", "bg_report", "cond_exp", "cor13_report", "doob_report", "dual_doob_report", "eigh",
    "lemma_slacks", "maximal_dual_bound", "maximal_primal", "mpow", "preset_tower", "proof_trace_thm11",
    "proof_trace_thm12", "random_tower", "schatten", "square_functions", "stein_report", "validate_tower",
]
