"""LP form: a deterministic, single-moded logic-programming IR."""

from .interp import call_entry, interp_lp
from .ir import (
    BodyTree,
    Call,
    Clause,
    Fork,
    Goal,
    Guard,
    LpProc,
    LpProgram,
    Prim,
    RefactorError,
    count_forks,
    count_goals,
    defs,
    flatten,
    iter_goals,
    refactor,
    tree_paths,
)
from .text import LpSyntaxError, format_goal, parse_clauses, parse_lp, print_lp
from .validate import Diagnostic, validate_lp

__all__ = [
    "BodyTree",
    "Call",
    "Clause",
    "Diagnostic",
    "Fork",
    "Goal",
    "Guard",
    "LpProc",
    "LpProgram",
    "LpSyntaxError",
    "Prim",
    "RefactorError",
    "call_entry",
    "count_forks",
    "count_goals",
    "defs",
    "flatten",
    "format_goal",
    "interp_lp",
    "iter_goals",
    "parse_clauses",
    "parse_lp",
    "print_lp",
    "refactor",
    "tree_paths",
    "validate_lp",
]
