"""Well-formedness checks for LP form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from ..semantics import COMPARISONS, PRIM_ARITY
from .ir import (
    BodyTree,
    Call,
    Clause,
    Guard,
    LpProc,
    LpProgram,
    Prim,
    RefactorError,
    is_var,
    refactor,
)

# Rule names reported in diagnostics.
MODED_ARGUMENTS = "moded-arguments"
IDENTICAL_HEADS = "identical-heads"
GUARDS_NOT_COMPLEMENTARY = "guards-not-complementary"
MISSING_COMPLEMENT = "missing-complement"
CLAUSES_DIVERGE = "clauses-diverge"
MULTIPLE_ASSIGNMENT = "multiple-assignment"
UNASSIGNED_VARIABLE = "unassigned-variable"
UNDEFINED_OUTPUT = "undefined-output"
UNKNOWN_CALLEE = "unknown-callee"
UNKNOWN_PRIMITIVE = "unknown-primitive"
UNKNOWN_COMPARISON = "unknown-comparison"
ARITY_MISMATCH = "arity-mismatch"
MISPLACED_GUARD = "misplaced-guard"


@dataclass(frozen=True)
class Diagnostic:
    proc: str
    path: str
    rule: str
    message: str

    def __str__(self):
        return f"{self.proc} [{self.path or 'root'}]: {self.rule}: {self.message}"


def validate_lp(prog: Union[LpProgram, Iterable[Clause]]) -> list[Diagnostic]:
    """Check every LP-form rule; an empty list means the program is valid.

    ``prog`` may also be a flat sequence of clauses, which is how head and
    guard-complementarity violations (impossible in the tree form) are caught.
    """
    if isinstance(prog, LpProgram):
        procs = list(prog)
        heads = {p.name: (len(p.ins), len(p.outs)) for p in procs}
        diags = []
    else:
        clauses = list(prog)
        heads = {c.name: (len(c.ins), len(c.outs)) for c in reversed(clauses)}
        procs, diags = _procs_from_clauses(clauses)
    for p in procs:
        diags.extend(_check_proc(p, heads))
    return diags


def _procs_from_clauses(clauses: list[Clause]) -> tuple[list[LpProc], list[Diagnostic]]:
    groups: dict[str, list[Clause]] = {}
    for c in clauses:
        groups.setdefault(c.name, []).append(c)
    procs, diags = [], []
    for name, group in groups.items():
        head = (group[0].ins, group[0].outs)
        bad = [c for c in group if (c.ins, c.outs) != head]
        if bad:
            diags.append(
                Diagnostic(name, "", IDENTICAL_HEADS, f"clause heads differ: {len(bad)} of {len(group)}")
            )
            continue
        try:
            body = refactor([c.goals for c in group])
        except RefactorError as e:
            diags.append(Diagnostic(name, e.path, e.rule, str(e)))
            continue
        procs.append(LpProc(name, head[0], head[1], body))
    return procs, diags


def _check_proc(p: LpProc, heads: dict) -> list[Diagnostic]:
    diags = []

    def report(path, rule, message):
        d = Diagnostic(p.name, path, rule, message)
        if d not in diags:
            diags.append(d)

    params = p.ins + p.outs
    if not all(is_var(v) for v in params):
        report("", MODED_ARGUMENTS, "head parameters must be variables")
    if len(set(params)) != len(params):
        dup = set(p.ins) & set(p.outs)
        what = "inputs and outputs overlap" if dup else "duplicate parameter"
        report("", MODED_ARGUMENTS, what)

    def goal(g, path, defined):
        if isinstance(g, Guard):
            report(path, MISPLACED_GUARD, "guards may only select between branches")
        elif isinstance(g, Prim):
            if g.op not in PRIM_ARITY:
                report(path, UNKNOWN_PRIMITIVE, f"unknown primitive {g.op!r}")
            elif PRIM_ARITY[g.op] != (len(g.ins), len(g.outs)):
                report(path, ARITY_MISMATCH, f"{g.op} expects {PRIM_ARITY[g.op]} arguments")
        elif isinstance(g, Call):
            if g.callee not in heads:
                report(path, UNKNOWN_CALLEE, f"call to undefined procedure {g.callee!r}")
            elif heads[g.callee] != (len(g.ins), len(g.outs)):
                report(path, ARITY_MISMATCH, f"{g.callee} expects {heads[g.callee]} arguments")
        uses(g.ins, path, defined)
        for v in g.outs:
            if not is_var(v):
                report(path, MODED_ARGUMENTS, f"output argument {v!r} is not a variable")
            elif v in defined:
                report(path, MULTIPLE_ASSIGNMENT, f"multiple assignment to {v!r}")
            else:
                defined.add(v)

    def uses(vals, path, defined):
        for v in vals:
            if is_var(v) and v not in defined:
                report(path, UNASSIGNED_VARIABLE, f"{v!r} used before assignment")

    def walk(tree: BodyTree, path: str, defined: set):
        for g in tree.goals:
            goal(g, path, defined)
        if tree.fork is None:
            for v in p.outs:
                if v not in defined:
                    report(path, UNDEFINED_OUTPUT, f"output {v!r} not assigned")
            return
        guard = tree.fork.guard
        if guard.cmp not in COMPARISONS:
            report(path, UNKNOWN_COMPARISON, f"unknown comparison {guard.cmp!r}")
        uses(guard.ins, path, defined)
        walk(tree.fork.then, path + "T", set(defined))
        walk(tree.fork.else_, path + "F", set(defined))

    walk(p.body, "", set(p.ins))
    return diags
