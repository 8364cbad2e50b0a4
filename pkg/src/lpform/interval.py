"""Forward interval analysis over LP form.

Intervals are over unbounded integers with infinite bounds.  Guards refine
the environment on both branches of a fork, and calls go through one
context-insensitive summary per procedure: the join of the inputs seen at
every call site, and the join of the outputs seen at every leaf.  Summaries
that keep growing are widened, and a single narrowing pass recovers the
bounds widening gave away.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .lpir import BodyTree, Call, LpProgram, Prim, iter_goals
from .lpir.ir import is_var
from .neededness import call_graph_sccs
from .semantics import COMPLEMENT, DIVISIONS, INT_MAX, INT_MIN

INF = math.inf

WIDEN_AFTER = 3


@dataclass(frozen=True)
class Interval:
    lo: float | int
    hi: float | int

    @staticmethod
    def const(c: int) -> Interval:
        return Interval(c, c)

    @staticmethod
    def top() -> Interval:
        return TOP

    @staticmethod
    def parse(text: str) -> Interval:
        """Parse ``lo..hi`` where either bound may be ``-inf``/``inf``."""
        m = re.fullmatch(r"\s*(-?inf|-?\d+)\s*\.\.\s*(-?inf|\+?inf|-?\d+)\s*", text)
        if m is None:
            raise ValueError(f"bad interval {text!r}; expected lo..hi")
        lo, hi = (_parse_bound(s) for s in m.groups())
        if lo > hi:
            raise ValueError(f"empty interval {text!r}")
        return Interval(lo, hi)

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi

    def join(self, other: Interval) -> Interval:
        if self.empty:
            return other
        if other.empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: Interval) -> Interval:
        r = Interval(max(self.lo, other.lo), min(self.hi, other.hi))
        return EMPTY if r.empty else r

    def leq(self, other: Interval) -> bool:
        return self.empty or (other.lo <= self.lo and self.hi <= other.hi)

    def widen(self, new: Interval) -> Interval:
        if self.empty:
            return new
        if new.empty:
            return self
        return Interval(
            self.lo if new.lo >= self.lo else -INF,
            self.hi if new.hi <= self.hi else INF,
        )

    def excludes(self, v: int) -> bool:
        return v not in self

    def fits_word(self) -> bool:
        return self.empty or (INT_MIN <= self.lo and self.hi <= INT_MAX)

    def __str__(self):
        if self.empty:
            return "empty"
        return f"[{_fmt_bound(self.lo)},{_fmt_bound(self.hi)}]"


TOP = Interval(-INF, INF)
EMPTY = Interval(INF, -INF)


def _parse_bound(s: str):
    s = s.lstrip("+")
    if s == "inf":
        return INF
    if s == "-inf":
        return -INF
    return int(s)


def _fmt_bound(b) -> str:
    if b == INF:
        return "inf"
    if b == -INF:
        return "-inf"
    return str(b)


# ---------------------------------------------------------------------------
# arithmetic on intervals


def _hull(values) -> Interval:
    values = list(values)
    return Interval(min(values), max(values))


def _mul_bound(a, b):
    if a == 0 or b == 0:
        return 0
    return a * b


def _div_bound(a, b):
    """Truncating a / b on extended integers; b is never 0."""
    if math.isinf(b):
        return 0
    if math.isinf(a):
        return a if b > 0 else -a
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _nonzero_parts(b: Interval) -> list[Interval]:
    parts = []
    if b.lo <= -1:
        parts.append(Interval(b.lo, min(b.hi, -1)))
    if b.hi >= 1:
        parts.append(Interval(max(b.lo, 1), b.hi))
    return parts


def add(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return EMPTY
    return Interval(_add_bound(a.lo, b.lo, -INF), _add_bound(a.hi, b.hi, INF))


def _add_bound(x, y, default):
    if math.isinf(x) or math.isinf(y):
        return default
    return x + y


def negate(a: Interval) -> Interval:
    if a.empty:
        return EMPTY
    return Interval(-a.hi, -a.lo)


def sub(a: Interval, b: Interval) -> Interval:
    return add(a, negate(b))


def mul(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return EMPTY
    return _hull(_mul_bound(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi))


def div(a: Interval, b: Interval) -> Interval:
    """Quotients over the divisors that do not fault."""
    if a.empty:
        return EMPTY
    out = EMPTY
    for part in _nonzero_parts(b):
        out = out.join(_hull(_div_bound(x, y) for x in (a.lo, a.hi) for y in (part.lo, part.hi)))
    return out


def mod(a: Interval, b: Interval) -> Interval:
    """Truncating remainder: sign of ``a``, magnitude below ``|b|`` and ``|a|``."""
    parts = _nonzero_parts(b)
    if a.empty or not parts:
        return EMPTY
    m = max(max(abs(p.lo), abs(p.hi)) for p in parts)
    return Interval(max(-(m - 1), min(a.lo, 0)), min(m - 1, max(a.hi, 0)))


def _transfer(op: str, ins: list[Interval]) -> list[Interval]:
    if op == "add":
        return [add(*ins)]
    if op == "sub":
        return [sub(*ins)]
    if op == "mul":
        return [mul(*ins)]
    if op == "div":
        return [div(*ins)]
    if op == "mod":
        return [mod(*ins)]
    if op == "divmod":
        return [div(*ins), mod(*ins)]
    if op == "negate":
        return [negate(ins[0])]
    if op == "copy":
        return [ins[0]]
    if op == "undef":
        return [TOP]
    raise ValueError(f"no transfer function for {op!r}")


def _clamp(i: Interval) -> Interval:
    return i.meet(Interval(INT_MIN, INT_MAX))


def may_overflow(op: str, ins: list[Interval]) -> bool:
    """Whether some 64-bit inputs drive ``op`` outside the 64-bit range.

    Infinite bounds stand for the extreme machine words here, so
    ``negate`` of ``[-inf,-1]`` is flagged.
    """
    return not all(r.fits_word() for r in _transfer(op, [_clamp(i) for i in ins]))


# ---------------------------------------------------------------------------
# environments

Env = dict  # variable -> Interval; None stands for an unreachable point


def env_join(a: Env | None, b: Env | None) -> Env | None:
    if a is None:
        return None if b is None else dict(b)
    if b is None:
        return dict(a)
    return {v: a.get(v, EMPTY).join(b.get(v, EMPTY)) for v in a.keys() | b.keys()}


def env_leq(a: Env | None, b: Env | None) -> bool:
    if a is None:
        return True
    if b is None:
        return False
    return all(i.leq(b.get(v, EMPTY)) for v, i in a.items())


def env_widen(old: Env | None, new: Env | None) -> Env | None:
    if old is None or new is None:
        return env_join(old, new)
    return {v: old.get(v, EMPTY).widen(new.get(v, EMPTY)) for v in old.keys() | new.keys()}


def _val(env: Env, v) -> Interval:
    if is_var(v):
        return env.get(v, TOP)
    return Interval.const(v)


def refine(env: Env | None, cmp: str, lhs, rhs) -> Env | None:
    """Narrow ``env`` to the stores where ``lhs cmp rhs`` can hold."""
    if env is None:
        return None
    a, b = _val(env, lhs), _val(env, rhs)
    if a.empty or b.empty:
        return None
    if cmp == "<":
        a2, b2 = a.meet(Interval(-INF, b.hi - 1)), b.meet(Interval(a.lo + 1, INF))
    elif cmp == "<=":
        a2, b2 = a.meet(Interval(-INF, b.hi)), b.meet(Interval(a.lo, INF))
    elif cmp == ">":
        b2, a2 = b.meet(Interval(-INF, a.hi - 1)), a.meet(Interval(b.lo + 1, INF))
    elif cmp == ">=":
        b2, a2 = b.meet(Interval(-INF, a.hi)), a.meet(Interval(b.lo, INF))
    elif cmp == "==":
        a2 = b2 = a.meet(b)
    elif cmp == "!=":
        a2, b2 = _shave(a, b), _shave(b, a)
    else:
        raise ValueError(f"unknown comparison {cmp!r}")
    if a2.empty or b2.empty:
        return None
    out = dict(env)
    if is_var(lhs):
        out[lhs] = a2
    if is_var(rhs):
        out[rhs] = b2 if lhs != rhs else a2.meet(b2)
        if out[rhs].empty:
            return None
    return out


def _shave(a: Interval, b: Interval) -> Interval:
    """``a`` minus the single value of ``b``, when that trims an end."""
    if b.lo != b.hi:
        return a
    c = b.lo
    if a.lo == c == a.hi:
        return EMPTY
    if a.lo == c:
        return Interval(c + 1, a.hi)
    if a.hi == c:
        return Interval(a.lo, c - 1)
    return a


# ---------------------------------------------------------------------------
# the analysis


@dataclass
class ProcSummary:
    ins: Env | None = None
    outs: Env | None = None


@dataclass
class IntervalResults:
    summaries: dict[str, ProcSummary]
    envs: dict[tuple[str, str, int], Env | None] = field(default_factory=dict)
    overflow: set[tuple[str, str, int]] = field(default_factory=set)
    iterations: int = 0

    def env_at(self, proc: str, path: str, index: int) -> Env | None:
        return self.envs[(proc, path, index)]


class _Pass:
    """One abstract execution of every procedure against fixed summaries."""

    def __init__(self, prog: LpProgram, summaries: dict[str, ProcSummary], record: bool):
        self.prog = prog
        self.summaries = summaries
        self.record = record
        self.call_ins: dict[str, Env | None] = {name: None for name in prog.procs}
        self.outs: dict[str, Env | None] = {name: None for name in prog.procs}
        self.envs: dict = {}
        self.overflow: set = set()

    def run(self, order: list[str]):
        for name in order:
            env = self.summaries[name].ins
            if env is not None:
                self.walk(name, self.prog[name].body, "", dict(env))

    def walk(self, name: str, tree: BodyTree, path: str, env: Env | None):
        for i, g in enumerate(tree.goals):
            if self.record:
                self.envs[(name, path, i)] = None if env is None else dict(env)
            if env is None:
                continue
            ins = [_val(env, v) for v in g.ins]
            if isinstance(g, Prim):
                results = _transfer(g.op, ins)
                if may_overflow(g.op, ins):
                    self.overflow.add((name, path, i))
            else:
                results = self.call(g, ins)
            if results is None or any(r.empty for r in results):
                env = None
                continue
            env = dict(env)
            env.update(zip(g.outs, results))
        proc = self.prog[name]
        if tree.fork is None:
            if env is not None:
                self.outs[name] = env_join(self.outs[name], {v: env.get(v, TOP) for v in proc.outs})
            return
        guard = tree.fork.guard
        i = len(tree.goals)
        if self.record:
            self.envs[(name, path, i)] = None if env is None else dict(env)
        self.walk(name, tree.fork.then, path + "T", refine(env, guard.cmp, guard.lhs, guard.rhs))
        self.walk(name, tree.fork.else_, path + "F", refine(env, COMPLEMENT[guard.cmp], guard.lhs, guard.rhs))

    def call(self, g: Call, ins: list[Interval]) -> list[Interval] | None:
        callee = self.prog[g.callee]
        self.call_ins[g.callee] = env_join(self.call_ins[g.callee], dict(zip(callee.ins, ins)))
        outs = self.summaries[g.callee].outs
        if outs is None:
            return None
        return [outs.get(v, TOP) for v in callee.outs]


def _caller_first(prog: LpProgram) -> list[str]:
    return [name for scc in reversed(call_graph_sccs(prog)) for name in scc]


def _new_summaries(prog, entry, entry_env, p: _Pass) -> dict[str, ProcSummary]:
    out = {}
    for name in prog.procs:
        ins = p.call_ins[name]
        if name == entry:
            ins = env_join(ins, entry_env)
        out[name] = ProcSummary(ins, p.outs[name])
    return out


def analyze_intervals(
    prog: LpProgram, entry: str, entry_env: Env | None = None, max_iterations: int = 1000
) -> IntervalResults:
    """Abstractly execute ``prog`` from ``entry`` with inputs in ``entry_env``.

    Missing entry inputs are unconstrained.  Returns per-procedure summaries
    and the environment reaching every goal and fork guard, keyed by
    ``(proc, path, index)``; unreachable points map to ``None``.
    """
    p = prog[entry]
    entry_env = {v: (entry_env or {}).get(v, TOP) for v in p.ins}
    order = _caller_first(prog)
    summaries = {name: ProcSummary() for name in prog.procs}
    summaries[entry] = ProcSummary(dict(entry_env), None)
    growth = {name: 0 for name in prog.procs}

    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        step = _Pass(prog, summaries, record=False)
        step.run(order)
        fresh = _new_summaries(prog, entry, entry_env, step)
        changed = False
        for name, new in fresh.items():
            old = summaries[name]
            ins, outs = env_join(old.ins, new.ins), env_join(old.outs, new.outs)
            if env_leq(ins, old.ins) and env_leq(outs, old.outs):
                continue
            changed = True
            growth[name] += 1
            if growth[name] > WIDEN_AFTER:
                ins, outs = env_widen(old.ins, ins), env_widen(old.outs, outs)
            summaries[name] = ProcSummary(ins, outs)
        if not changed:
            break

    # One narrowing step: re-derive every summary from the post-fixpoint.
    step = _Pass(prog, summaries, record=False)
    step.run(order)
    summaries = _new_summaries(prog, entry, entry_env, step)

    final = _Pass(prog, summaries, record=True)
    final.run(order)
    return IntervalResults(summaries, final.envs, final.overflow, iterations)


def check_div_safety(prog: LpProgram, results: IntervalResults) -> list[tuple[tuple[str, str, int], str]]:
    """Classify every division and remainder goal as ``safe`` or ``unknown``.

    A goal is safe when its divisor's interval excludes zero, or when the
    analysis found the goal unreachable.
    """
    out = []
    for proc in prog:
        for (path, index), g in iter_goals(proc.body):
            if not (isinstance(g, Prim) and g.op in DIVISIONS):
                continue
            loc = (proc.name, path, index)
            if loc not in results.envs:
                out.append((loc, "unknown"))
                continue
            env = results.envs[loc]
            if env is None:
                out.append((loc, "safe"))
                continue
            out.append((loc, "safe" if _val(env, g.ins[1]).excludes(0) else "unknown"))
    return out
