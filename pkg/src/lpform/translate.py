"""Translation of three-address code into LP form.

Every basic block ``B`` of a function ``f`` becomes a single-clause
procedure ``f_B(vs, st; ret, st')`` that receives all of the function's
variables plus the state token, and every conditional exit becomes an
auxiliary two-clause procedure selecting between the successor blocks.
Reassigned source variables are renamed through a substitution so the
result is single-assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import tac
from .lpir import BodyTree, Call, Fork, Guard, LpProc, LpProgram, Prim

Substitution = dict  # source variable -> current LP variable


class NameSupply:
    """Fresh names of the form ``base`` + counter, avoiding every taken name."""

    def __init__(self, taken=()):
        self.taken = set(taken)
        self.counters: dict[str, int] = {}

    def fresh(self, base: str) -> str:
        k = self.counters.get(base, 0)
        while f"{base}{k}" in self.taken:
            k += 1
        self.counters[base] = k + 1
        name = f"{base}{k}"
        self.taken.add(name)
        return name

    def reserve(self, base: str) -> str:
        """Return ``base`` itself, suffixed with underscores until unused."""
        name = base
        while name in self.taken:
            name += "_"
        self.taken.add(name)
        return name


@dataclass
class TranslationContext:
    func: tac.TacFunction
    vars: tuple[str, ...]
    st: str
    ret: str
    supply: NameSupply
    procs: NameSupply  # shared across the whole program
    block_procs: dict[str, str]
    theta: Substitution = field(default_factory=dict)

    def subst(self, v):
        return self.theta.get(v, v) if isinstance(v, str) else v

    def state(self) -> str:
        return self.theta.get(self.st, self.st)

    def threaded(self) -> tuple:
        """The function's variables under the current substitution, then the state."""
        return tuple(self.subst(v) for v in self.vars) + (self.state(),)


def translate_stmts(stmts, ctx: TranslationContext) -> tuple[list, list[LpProc], Substitution]:
    """Translate a statement sequence (prims, optionally ending in a block exit).

    Returns the goals, any auxiliary procedures, and the final substitution.
    """
    goals, extra = [], []
    for s in stmts:
        if isinstance(s, tac.Assign):
            new = ctx.supply.fresh(s.dst)
            goals.append(Prim("copy", (ctx.subst(s.src),), (new,)))
            ctx.theta[s.dst] = new
        elif isinstance(s, tac.BinOp):
            new = ctx.supply.fresh(s.dst)
            goals.append(Prim(tac.BINOPS[s.op], (ctx.subst(s.lhs), ctx.subst(s.rhs)), (new,)))
            ctx.theta[s.dst] = new
        elif isinstance(s, tac.UnOp):
            new = ctx.supply.fresh(s.dst)
            goals.append(Prim("negate", (ctx.subst(s.src),), (new,)))
            ctx.theta[s.dst] = new
        elif isinstance(s, tac.Call):
            new = ctx.supply.fresh(s.dst if s.dst is not None else "unused")
            new_st = ctx.supply.fresh(ctx.st)
            ins = tuple(ctx.subst(a) for a in s.args) + (ctx.state(),)
            goals.append(Call(s.callee, ins, (new, new_st)))
            if s.dst is not None:
                ctx.theta[s.dst] = new
            ctx.theta[ctx.st] = new_st
        elif isinstance(s, tac.Return):
            goals.append(Prim("copy", (ctx.subst(s.val),), (ctx.ret,)))
        elif isinstance(s, tac.Goto):
            new_st = ctx.supply.fresh(ctx.st)
            goals.append(Call(ctx.block_procs[s.target], ctx.threaded(), (ctx.ret, new_st)))
            ctx.theta[ctx.st] = new_st
        elif isinstance(s, tac.If):
            nu = _conditional_proc(s, ctx)
            extra.append(nu)
            new_st = ctx.supply.fresh(ctx.st)
            goals.append(Call(nu.name, ctx.threaded(), (ctx.ret, new_st)))
            ctx.theta[ctx.st] = new_st
        else:
            raise TypeError(f"unexpected statement {s!r}")
    return goals, extra, ctx.theta


def _conditional_proc(s: tac.If, ctx: TranslationContext) -> LpProc:
    name = ctx.procs.fresh(f"{ctx.func.name}_nu")
    ins = ctx.vars + (ctx.st,)
    out_st = ctx.supply.fresh(ctx.st)
    outs = (ctx.ret, out_st)

    def branch(target):
        return BodyTree((Call(ctx.block_procs[target], ins, outs),))

    guard = Guard(s.cmp, s.lhs, s.rhs)
    body = BodyTree((), Fork(guard, branch(s.then), branch(s.else_)))
    return LpProc(name, ins, outs, body)


def translate_function(f: tac.TacFunction, procs: NameSupply) -> list[LpProc]:
    vars_ = tuple(tac.function_vars(f))
    supply = NameSupply(vars_)
    st = supply.reserve("st")
    ret = supply.reserve("ret")
    block_procs = {b.id: procs.reserve(f"{f.name}_{b.id}") for b in f.blocks}

    out = []
    entry_st = supply.fresh(st)
    locals_ = [v for v in vars_ if v not in f.params]
    goals = [Prim("undef", (), (v,)) for v in locals_]
    goals.append(Call(block_procs[f.entry.id], vars_ + (st,), (ret, entry_st)))
    out.append(
        LpProc(
            f.name,
            f.params + (st,),
            (ret, entry_st),
            BodyTree(tuple(goals)),
            public=True,
            exports=frozenset(f.params + (ret,)),
        )
    )
    for b in f.blocks:
        ctx = TranslationContext(f, vars_, st, ret, supply, procs, block_procs)
        goals, extra, theta = translate_stmts(b.prims + (b.exit,), ctx)
        out_st = theta.get(st, st)
        if out_st == st:
            out_st = supply.fresh(st)
            goals.append(Prim("copy", (st,), (out_st,)))
        out.append(LpProc(block_procs[b.id], vars_ + (st,), (ret, out_st), BodyTree(tuple(goals))))
        out.extend(extra)
    return out


def translate_program(prog: tac.TacProgram) -> LpProgram:
    """Translate every function; source functions become public procedures."""
    procs = NameSupply(f.name for f in prog.functions)
    out = []
    for f in prog.functions:
        out.extend(translate_function(f, procs))
    # Entry procedures first, in source order, then the rest as generated.
    out.sort(key=lambda p: not p.public)
    return LpProgram({p.name: p for p in out})
