"""Lowering of LP form to a linear pseudo-assembly, and an interpreter for it.

Each body-tree node becomes a labelled straight-line run.  A fork ends its
run with a compare-and-branch to the then-branch and falls through to the
else-branch.  A leaf either returns (out-slot moves, ``ret``) or, when its
last goal is a call producing exactly the procedure's own outputs, loads
the argument slots and jumps to the callee: the last call optimisation.

Calling convention: ``arg k, v`` fills outgoing argument slot ``k``; the
callee's prologue copies slot ``k`` into its ``k``-th input register with
``param``.  ``out k, v`` fills result slot ``k`` before ``ret``, and the
caller collects it with ``result v, k``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lpir import BodyTree, Call, LpProc, LpProgram
from .lpir.ir import is_var
from .semantics import STACK_DEPTH, UNASSIGNED, Fault, StepCounter, apply_prim, check_result, compare

BRANCH = {"<": "blt", "<=": "ble", ">": "bgt", ">=": "bge", "==": "beq", "!=": "bne"}
BRANCH_CMP = {v: k for k, v in BRANCH.items()}
BINARY = {"add", "sub", "mul", "div", "mod"}


@dataclass(frozen=True)
class Instr:
    """One instruction: a mnemonic and its operands (registers, constants, labels)."""

    op: str
    args: tuple = ()

    def __str__(self):
        if self.op == "label":
            return f"{self.args[0]}:"
        if not self.args:
            return f"    {self.op}"
        return f"    {self.op} " + ", ".join(str(a) for a in self.args)


@dataclass(frozen=True)
class AsmProc:
    name: str
    n_ins: int
    n_outs: int
    code: tuple[Instr, ...]


@dataclass(frozen=True)
class AsmProgram:
    procs: dict[str, AsmProc]

    def __getitem__(self, name: str) -> AsmProc:
        return self.procs[name]


def entry_label(name: str) -> str:
    return f"{name}.top"


def node_label(name: str, path: str) -> str:
    return f"{name}.{path}"


# ---------------------------------------------------------------------------
# lowering


def _lower_goal(g, out: list[Instr]):
    if isinstance(g, Call):
        for k, v in enumerate(g.ins):
            out.append(Instr("arg", (k, v)))
        out.append(Instr("call", (g.callee,)))
        for k, v in enumerate(g.outs):
            out.append(Instr("result", (v, k)))
    else:
        # destinations first, then sources
        out.append(Instr("neg" if g.op == "negate" else g.op, g.outs + g.ins))


def _lower_tree(p: LpProc, tree: BodyTree, path: str, out: list[Instr]):
    goals = tree.goals
    tail = (
        tree.fork is None
        and goals
        and isinstance(goals[-1], Call)
        and goals[-1].outs == p.outs
    )
    for g in goals[:-1] if tail else goals:
        _lower_goal(g, out)
    if tail:
        call = goals[-1]
        for k, v in enumerate(call.ins):
            out.append(Instr("arg", (k, v)))
        out.append(Instr("jump", (entry_label(call.callee),)))
        return
    if tree.fork is None:
        for k, v in enumerate(p.outs):
            out.append(Instr("out", (k, v)))
        out.append(Instr("ret"))
        return
    guard = tree.fork.guard
    then_label = node_label(p.name, path + "T")
    out.append(Instr(BRANCH[guard.cmp], (guard.lhs, guard.rhs, then_label)))
    _lower_tree(p, tree.fork.else_, path + "F", out)
    out.append(Instr("label", (then_label,)))
    _lower_tree(p, tree.fork.then, path + "T", out)


def lower_proc(p: LpProc) -> AsmProc:
    out = [Instr("label", (entry_label(p.name),)), Instr("enter")]
    for k, v in enumerate(p.ins):
        out.append(Instr("param", (v, k)))
    _lower_tree(p, p.body, "", out)
    return AsmProc(p.name, len(p.ins), len(p.outs), tuple(out))


def lower(prog: LpProgram) -> AsmProgram:
    """Lower every procedure; tail calls become slot moves plus a jump."""
    return AsmProgram({p.name: lower_proc(p) for p in prog})


def print_asm(asm: AsmProgram) -> str:
    blocks = []
    for p in asm.procs.values():
        lines = [f".proc {p.name} {p.n_ins} {p.n_outs}"]
        lines.extend(str(i) for i in p.code)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


# ---------------------------------------------------------------------------
# execution


@dataclass
class AsmRun:
    outputs: list
    max_depth: int
    steps: int


class _Frame:
    __slots__ = ("regs", "pc")

    def __init__(self, pc: int):
        self.regs: dict = {}
        self.pc = pc


def _link(asm: AsmProgram) -> tuple[list[Instr], dict[str, int]]:
    code: list[Instr] = []
    labels: dict[str, int] = {}
    for p in asm.procs.values():
        for ins in p.code:
            if ins.op == "label":
                labels[ins.args[0]] = len(code)
            else:
                code.append(ins)
    return code, labels


def execute_asm(
    asm: AsmProgram,
    proc: str,
    ins: list[int],
    step_budget: int | None = None,
    max_depth: int = 100_000,
) -> AsmRun:
    """Run ``proc`` and report its outputs plus the deepest call stack reached."""
    p = asm[proc]
    if len(ins) != p.n_ins:
        raise ValueError(f"{proc} expects {p.n_ins} inputs, got {len(ins)}")
    code, labels = _link(asm)
    steps = StepCounter(step_budget)
    args: dict[int, object] = dict(enumerate(ins))
    results: dict[int, object] = {}
    stack = [_Frame(labels[entry_label(proc)])]
    deepest = 1

    def read(regs, v):
        if not is_var(v):
            return v
        try:
            return regs[v]
        except KeyError:
            raise Fault(UNASSIGNED, f"register {v!r}") from None

    while True:
        fr = stack[-1]
        instr = code[fr.pc]
        fr.pc += 1
        steps.tick()
        op, a = instr.op, instr.args
        regs = fr.regs
        if op == "enter":
            fr.regs = {}
        elif op == "param":
            regs[a[0]] = args[a[1]]
        elif op == "arg":
            args[a[0]] = read(regs, a[1])
        elif op == "call":
            if len(stack) >= max_depth:
                raise Fault(STACK_DEPTH, f"depth {max_depth}")
            stack.append(_Frame(labels[entry_label(a[0])]))
            deepest = max(deepest, len(stack))
        elif op == "result":
            regs[a[0]] = results[a[1]]
        elif op == "out":
            results[a[0]] = read(regs, a[1])
        elif op == "ret":
            stack.pop()
            if not stack:
                return AsmRun(check_result([results[k] for k in range(p.n_outs)]), deepest, steps.steps)
        elif op == "jump":
            fr.pc = labels[a[0]]
        elif op in BRANCH_CMP:
            if compare(BRANCH_CMP[op], read(regs, a[0]), read(regs, a[1])):
                fr.pc = labels[a[2]]
        elif op in BINARY:
            regs[a[0]] = apply_prim(op, [read(regs, a[1]), read(regs, a[2])])[0]
        elif op == "neg":
            regs[a[0]] = apply_prim("negate", [read(regs, a[1])])[0]
        elif op == "copy":
            regs[a[0]] = apply_prim("copy", [read(regs, a[1])])[0]
        elif op == "divmod":
            q, r = apply_prim("divmod", [read(regs, a[2]), read(regs, a[3])])
            regs[a[0]], regs[a[1]] = q, r
        elif op == "undef":
            regs[a[0]] = apply_prim("undef", [])[0]
        else:
            raise ValueError(f"unknown instruction {op!r}")


def interp_asm(asm: AsmProgram, proc: str, ins: list[int], **kwargs) -> list:
    return execute_asm(asm, proc, ins, **kwargs).outputs


def count_instrs(asm: AsmProgram, proc: str, ops) -> int:
    return sum(1 for i in asm[proc].code if i.op in ops)
