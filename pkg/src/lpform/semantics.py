"""Fixed-width integer semantics shared by every interpreter in the pipeline."""

from __future__ import annotations

import os

WIDTH = 64
INT_MIN = -(1 << (WIDTH - 1))
INT_MAX = (1 << (WIDTH - 1)) - 1

DEFAULT_STEP_BUDGET = 10_000_000
STEP_BUDGET_ENV = "LPFORM_STEP_BUDGET"


class Fault(Exception):
    """A runtime fault raised by one of the reference interpreters.

    ``kind`` is a short machine-comparable tag so that faults raised at
    different pipeline stages can be matched against each other.
    """

    def __init__(self, kind: str, message: str = ""):
        super().__init__(f"{kind}: {message}" if message else kind)
        self.kind = kind


DIV_BY_ZERO = "division-by-zero"
UNASSIGNED = "unassigned-variable"
STEP_BUDGET = "step-budget-exceeded"
NO_CLAUSE = "no-clause-applies"
STACK_DEPTH = "stack-depth-exceeded"


def default_step_budget() -> int:
    value = os.environ.get(STEP_BUDGET_ENV)
    return int(value) if value else DEFAULT_STEP_BUDGET


def wrap(x: int) -> int:
    """Reduce an unbounded integer to signed two's complement."""
    x &= (1 << WIDTH) - 1
    return x - (1 << WIDTH) if x > INT_MAX else x


def trunc_div(a: int, b: int) -> int:
    if b == 0:
        raise Fault(DIV_BY_ZERO, f"{a} / 0")
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def trunc_mod(a: int, b: int) -> int:
    if b == 0:
        raise Fault(DIV_BY_ZERO, f"{a} mod 0")
    return a - b * trunc_div(a, b)


# primitive name -> (input arity, output arity)
PRIM_ARITY = {
    "add": (2, 1),
    "sub": (2, 1),
    "mul": (2, 1),
    "div": (2, 1),
    "mod": (2, 1),
    "negate": (1, 1),
    "copy": (1, 1),
    "divmod": (2, 2),
    "undef": (0, 1),
}

DIVISIONS = frozenset({"div", "mod", "divmod"})


class Poison:
    """Value of a variable that was never assigned in the source program.

    Copies, arguments and returns pass it along unchanged; arithmetic and
    comparisons fault on it, and so does a program result that carries it.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<undef>"


POISON = Poison()


def _check(values):
    for v in values:
        if v is POISON:
            raise Fault(UNASSIGNED, "read of an unassigned value")


def check_result(values: list) -> list:
    """Fault if a value handed back to the program's caller was never assigned."""
    _check(values)
    return values


def apply_prim(op: str, ins: list) -> list:
    """Evaluate primitive ``op`` on concrete inputs, returning its outputs."""
    if op == "undef":
        return [POISON]
    if op == "copy":
        return [ins[0]]
    _check(ins)
    if op == "negate":
        return [wrap(-ins[0])]
    a, b = ins
    if op == "add":
        return [wrap(a + b)]
    if op == "sub":
        return [wrap(a - b)]
    if op == "mul":
        return [wrap(a * b)]
    if op == "div":
        return [wrap(trunc_div(a, b))]
    if op == "mod":
        return [wrap(trunc_mod(a, b))]
    if op == "divmod":
        return [wrap(trunc_div(a, b)), wrap(trunc_mod(a, b))]
    raise ValueError(f"unknown primitive {op!r}")


COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")

COMPLEMENT = {"<": ">=", ">=": "<", ">": "<=", "<=": ">", "==": "!=", "!=": "=="}


def compare(cmp: str, a, b) -> bool:
    _check((a, b))
    if cmp == "<":
        return a < b
    if cmp == "<=":
        return a <= b
    if cmp == ">":
        return a > b
    if cmp == ">=":
        return a >= b
    if cmp == "==":
        return a == b
    if cmp == "!=":
        return a != b
    raise ValueError(f"unknown comparison {cmp!r}")


class StepCounter:
    def __init__(self, budget: int | None = None):
        self.budget = default_step_budget() if budget is None else budget
        self.steps = 0

    def tick(self, n: int = 1):
        self.steps += n
        if self.steps > self.budget:
            raise Fault(STEP_BUDGET, f"exceeded {self.budget} steps")
