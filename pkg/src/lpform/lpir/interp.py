"""Reference interpreter for LP form.

Execution walks the body tree left to right, taking the then-branch of a
fork when its guard holds.  Calls in last position whose outputs are the
caller's own outputs reuse the caller's frame, so tail-recursive loops run
in constant space.
"""

from __future__ import annotations

from typing import Callable

from ..semantics import STACK_DEPTH, UNASSIGNED, Fault, StepCounter, apply_prim, check_result, compare
from .ir import BodyTree, LpProc, LpProgram, Prim, is_var

Observer = Callable[[str, tuple[str, int], dict], None]

STATE_TOKEN = 0


class _Frame:
    __slots__ = ("proc", "env", "node", "path", "index", "ret")

    def __init__(self, proc: LpProc, env: dict, ret):
        self.proc = proc
        self.env = env
        self.node: BodyTree = proc.body
        self.path = ""
        self.index = 0
        self.ret = ret


def _read(env: dict, v):
    if not is_var(v):
        return v
    try:
        return env[v]
    except KeyError:
        raise Fault(UNASSIGNED, f"variable {v!r}") from None


def interp_lp(
    prog: LpProgram,
    proc: str,
    ins: list[int],
    step_budget: int | None = None,
    observer: Observer | None = None,
    max_depth: int = 100_000,
) -> list[int]:
    """Run ``proc`` on ``ins`` and return the values of its output parameters.

    ``observer(proc, (path, index), env)`` is called before every goal and
    guard, which is how analyses are checked against concrete runs.
    """
    p = prog[proc]
    if len(ins) != len(p.ins):
        raise ValueError(f"{proc} expects {len(p.ins)} inputs, got {len(ins)}")
    steps = StepCounter(step_budget)
    stack = [_Frame(p, dict(zip(p.ins, ins)), None)]
    while True:
        fr = stack[-1]
        node = fr.node
        if fr.index < len(node.goals):
            g = node.goals[fr.index]
            if observer is not None:
                observer(fr.proc.name, (fr.path, fr.index), fr.env)
            steps.tick()
            fr.index += 1
            vals = [_read(fr.env, v) for v in g.ins]
            if isinstance(g, Prim):
                fr.env.update(zip(g.outs, apply_prim(g.op, vals)))
                continue
            callee = prog[g.callee]
            frame = _Frame(callee, dict(zip(callee.ins, vals)), g.outs)
            last = fr.index == len(node.goals) and node.fork is None
            if last and g.outs == fr.proc.outs:
                frame.ret = fr.ret
                stack[-1] = frame
            else:
                if len(stack) >= max_depth:
                    raise Fault(STACK_DEPTH, f"depth {max_depth}")
                stack.append(frame)
            continue
        if node.fork is not None:
            guard = node.fork.guard
            if observer is not None:
                observer(fr.proc.name, (fr.path, fr.index), fr.env)
            steps.tick()
            taken = compare(guard.cmp, _read(fr.env, guard.lhs), _read(fr.env, guard.rhs))
            fr.node = node.fork.then if taken else node.fork.else_
            fr.path += "T" if taken else "F"
            fr.index = 0
            continue
        results = [_read(fr.env, v) for v in fr.proc.outs]
        stack.pop()
        if not stack:
            return check_result(results)
        stack[-1].env.update(zip(fr.ret, results))


def call_entry(prog: LpProgram, name: str, args: list[int], **kwargs) -> int:
    """Call a translated function with source-level arguments and return ``ret``.

    A procedure still carrying the threaded state token as an extra trailing
    input gets a dummy token; ``ret`` is always the first output.
    """
    p = prog[name]
    ins = list(args)
    if len(p.ins) == len(args) + 1:
        ins.append(STATE_TOKEN)
    return interp_lp(prog, name, ins, **kwargs)[0]

