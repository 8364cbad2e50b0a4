"""Shared fixtures, oracles and runners for the test suite."""

from __future__ import annotations

import itertools
import random
from dataclasses import replace
from pathlib import Path

from hypothesis import strategies as st

from lpform import tac
from lpform.lower import interp_asm, lower
from lpform.lpir import BodyTree, Call, Fork, Guard, LpProc, LpProgram, Prim, defs, flatten, interp_lp, parse_lp
from lpform.lpir.interp import STATE_TOKEN
from lpform.lpir.ir import rename_goal
from lpform.semantics import COMPLEMENT, Fault, apply_prim, compare
from lpform.simplify import simplify_pipeline
from lpform.tac import TacProgram, interp_tac, parse_tac
from lpform.translate import translate_program

FIXTURES = Path(__file__).parent / "fixtures"

TAC_FIXTURES = sorted(p.stem for p in FIXTURES.glob("*.tac"))
LP_FIXTURES = sorted(p.stem for p in FIXTURES.glob("*.lp"))

# Enough for every terminating fixture at every stage, small enough that
# the diverging fixture fails fast.
STEP_BUDGET = 20_000


def load_tac(name: str) -> TacProgram:
    return parse_tac((FIXTURES / f"{name}.tac").read_text())


def load_lp(name: str) -> LpProgram:
    return parse_lp((FIXTURES / f"{name}.lp").read_text())


def outcome(fn, *args, **kwargs):
    """``("ok", value)`` or ``("fault", kind)``."""
    try:
        return ("ok", fn(*args, **kwargs))
    except Fault as e:
        return ("fault", e.kind)


def vectors(arity: int, lo: int = -8, hi: int = 8, cap: int = 10_000, seed: int = 0) -> list[list[int]]:
    """Every input vector over ``[lo, hi]``, or a fixed random sample of ``cap``."""
    domain = range(lo, hi + 1)
    total = len(domain) ** arity
    if total <= cap:
        return [list(v) for v in itertools.product(domain, repeat=arity)]
    rng = random.Random(seed)
    return [[rng.choice(domain) for _ in range(arity)] for _ in range(cap)]


# ---------------------------------------------------------------------------
# running one source function at every stage


class Stages:
    """A TAC program together with its translation, simplification and lowering."""

    def __init__(self, tac: TacProgram):
        self.tac = tac
        self.lp = translate_program(tac)
        self.simple = simplify_pipeline(self.lp)
        self.asm = lower(self.simple)

    @staticmethod
    def _ins(prog: LpProgram, name: str, args: list[int]) -> list:
        ins = list(args)
        if len(prog[name].ins) == len(args) + 1:
            ins.append(STATE_TOKEN)
        return ins

    def run_all(self, name: str, args: list[int], budget: int = STEP_BUDGET) -> list:
        return [
            outcome(interp_tac, self.tac, name, args, step_budget=budget),
            outcome(lambda: interp_lp(self.lp, name, self._ins(self.lp, name, args), step_budget=budget)[0]),
            outcome(lambda: interp_lp(self.simple, name, self._ins(self.simple, name, args), step_budget=budget)[0]),
            outcome(lambda: interp_asm(self.asm, name, self._ins(self.simple, name, args), step_budget=budget)[0]),
        ]


def equivalence_mismatches(prog: TacProgram, lo=-8, hi=8, cap=10_000) -> list:
    stages = Stages(prog)
    bad = []
    for f in prog.functions:
        for v in vectors(len(f.params), lo, hi, cap):
            results = stages.run_all(f.name, v)
            if len(set(results)) != 1:
                bad.append((f.name, v, results))
    return bad


# ---------------------------------------------------------------------------
# structure up to renaming


def canonical(prog: LpProgram) -> str:
    """Print ``prog`` with procedures and variables renamed by first occurrence.

    Procedures are numbered in the order a depth-first walk from the public
    procedures first reaches them; variables in order of appearance in the
    head and then the flattened clauses.  Two programs are equal up to
    systematic renaming iff their canonical texts are equal.
    """
    order: list[str] = []

    def visit(name):
        if name in order or name not in prog:
            return
        order.append(name)
        for c in flatten(prog[name]):
            for g in c.goals:
                if isinstance(g, Call):
                    visit(g.callee)

    for p in prog:
        if p.public:
            visit(p.name)
    for p in prog:
        visit(p.name)
    proc_names = {name: f"P{i}" for i, name in enumerate(order)}

    lines = []
    for name in order:
        p = prog[name]
        names: dict[str, str] = {}

        def var(v):
            if not isinstance(v, str):
                return str(v)
            if v not in names:
                names[v] = f"v{len(names)}"
            return names[v]

        head = f"{proc_names[name]}({','.join(map(var, p.ins))};{','.join(map(var, p.outs))})"
        for c in flatten(p):
            body = []
            for g in c.goals:
                if isinstance(g, Guard):
                    body.append(f"{var(g.lhs)}{g.cmp}{var(g.rhs)}")
                elif isinstance(g, Call):
                    body.append(f"{proc_names.get(g.callee, g.callee)}({','.join(map(var, g.ins))};{','.join(map(var, g.outs))})")
                else:
                    body.append(f"{g.op}({','.join(map(var, g.ins))};{','.join(map(var, g.outs))})")
            lines.append(f"{head} <- {' & '.join(body)}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# random programs

TAC_OPS = ("+", "-", "*", "/", "mod")
CMPS = ("<", "<=", ">", ">=", "==", "!=")


@st.composite
def tac_programs(draw, max_functions: int = 3, max_blocks: int = 4):
    """Valid, always-terminating TAC programs.

    Jumps only go forward and a function calls only functions defined
    before it, so every run ends; unassigned reads and zero divisors are
    left in on purpose.
    """
    n_funcs = draw(st.integers(1, max_functions))
    funcs = []
    for fi in range(n_funcs):
        params = tuple(f"p{i}" for i in range(draw(st.integers(0, 2))))
        pool = list(params) + ["x", "y", "z"]
        vals = st.one_of(st.sampled_from(pool), st.integers(-3, 3))
        n_blocks = draw(st.integers(1, max_blocks))
        blocks = []
        for bi in range(n_blocks):
            prims = []
            for _ in range(draw(st.integers(0, 3))):
                kind = draw(st.sampled_from(["assign", "binop", "neg", "call"] if funcs else ["assign", "binop", "neg"]))
                dst = draw(st.sampled_from(["x", "y", "z"]))
                if kind == "assign":
                    prims.append(tac.Assign(dst, draw(vals)))
                elif kind == "binop":
                    prims.append(tac.BinOp(dst, draw(st.sampled_from(TAC_OPS)), draw(vals), draw(vals)))
                elif kind == "neg":
                    prims.append(tac.UnOp(dst, "neg", draw(vals)))
                else:
                    callee = draw(st.sampled_from(funcs))
                    args = tuple(draw(vals) for _ in callee.params)
                    prims.append(tac.Call(draw(st.sampled_from([dst, None])), callee.name, args))
            later = [f"b{j}" for j in range(bi + 1, n_blocks)]
            if later:
                kind = draw(st.sampled_from(["return", "goto", "if"]))
            else:
                kind = "return"
            if kind == "return":
                exit_ = tac.Return(draw(vals))
            elif kind == "goto":
                exit_ = tac.Goto(draw(st.sampled_from(later)))
            else:
                exit_ = tac.If(
                    draw(st.sampled_from(CMPS)), draw(vals), draw(vals),
                    draw(st.sampled_from(later)), draw(st.sampled_from(later)),
                )
            blocks.append(tac.TacBlock(f"b{bi}", tuple(prims), exit_))
        funcs.append(tac.TacFunction(f"f{fi}", params, tuple(blocks)))
    return tac.TacProgram(tuple(funcs))


LP_OPS = ("add", "sub", "mul", "div", "mod", "negate", "copy")


@st.composite
def lp_procs(draw, max_depth: int = 2, sound: bool = False):
    """A single procedure ``f(a, b; r)`` with a random body tree.

    With ``sound=False`` goals may read variables that are never assigned
    and leaves may forget ``r``; with ``sound=True`` every read is of a
    defined variable and every leaf defines ``r``.
    """
    counter = iter(range(1000))

    def tree(defined: list[str], depth: int) -> BodyTree:
        goals = []
        defined = list(defined)
        for _ in range(draw(st.integers(0, 3))):
            op = draw(st.sampled_from(LP_OPS))
            pool = defined if sound else defined + ["u", "w"]
            val = st.one_of(st.sampled_from(pool), st.integers(-2, 2))
            n_in = 1 if op in ("negate", "copy") else 2
            out = f"v{next(counter)}"
            goals.append(Prim(op, tuple(draw(val) for _ in range(n_in)), (out,)))
            defined.append(out)
        if depth > 0 and draw(st.booleans()):
            pool = st.one_of(st.sampled_from(defined), st.integers(-2, 2))
            guard = Guard(draw(st.sampled_from(CMPS)), draw(pool), draw(pool))
            return BodyTree(tuple(goals), Fork(guard, tree(defined, depth - 1), tree(defined, depth - 1)))
        if sound or draw(st.integers(0, 9)) > 0:
            src = draw(st.one_of(st.sampled_from(defined), st.integers(-2, 2)))
            goals.append(Prim("copy", (src,), ("r",)))
        return BodyTree(tuple(goals))

    body = tree(["a", "b"], max_depth)
    return LpProc("f", ("a", "b"), ("r",), body, public=True)


def single(proc: LpProc) -> LpProgram:
    return LpProgram({proc.name: proc})


def agree(results: list) -> bool:
    """Stage outcomes agree, allowing pruning to drop a fault on a dead value.

    The source program and its direct translation must match exactly, as
    must the simplified program and its lowering.  Simplification may only
    turn a fault into a result, never change a result.
    """
    tac_r, lp_r, simple_r, asm_r = results
    if tac_r != lp_r or simple_r != asm_r:
        return False
    return simple_r == tac_r or tac_r[0] == "fault"


def clause_holds(prog: LpProgram, clause, ins: list[int]) -> bool:
    """Run one flattened clause on its own: do all its guards succeed?

    Goals run left to right up to the last guard (later goals cannot affect
    selection); calls go through the reference interpreter.  Faults
    propagate to the caller.
    """
    env = dict(zip(clause.ins, ins))
    last = max((i for i, g in enumerate(clause.goals) if isinstance(g, Guard)), default=-1)

    def val(v):
        return env[v] if isinstance(v, str) else v

    for g in clause.goals[: last + 1]:
        if isinstance(g, Guard):
            if not compare(g.cmp, val(g.lhs), val(g.rhs)):
                return False
        elif isinstance(g, Call):
            env.update(zip(g.outs, interp_lp(prog, g.callee, [val(v) for v in g.ins], step_budget=STEP_BUDGET)))
        else:
            env.update(zip(g.outs, apply_prim(g.op, [val(v) for v in g.ins])))
    return True


def determinism_violations(prog: LpProgram, lo: int = -8, hi: int = 8, cap: int = 2_000) -> list:
    """Inputs for which the number of clauses whose guards hold is not one.

    Inputs on which some clause faults before its guards are decided are
    skipped: no clause is selected there.
    """
    bad = []
    for p in prog:
        clauses = flatten(p)
        for v in vectors(len(p.ins), lo, hi, cap):
            try:
                holding = sum(clause_holds(prog, c, v) for c in clauses)
            except Fault:
                continue
            if holding != 1:
                bad.append((p.name, v, holding))
    return bad


def observed_dependencies(prog: LpProgram, name: str, lo: int = -4, hi: int = 4, cap: int = 6_561) -> set:
    """Pairs ``(y, x)`` where changing input ``x`` alone changed output ``y``.

    Every input vector over ``[lo, hi]`` is run (state-token inputs held
    fixed); two runs that differ in one input and both finish are compared.
    With more than ``cap`` vectors, a random sample of base vectors is
    flipped one coordinate at a time instead.
    """
    p = prog[name]
    ints = [i for i, v in enumerate(p.ins) if not v.startswith("st")]
    cache: dict[tuple, tuple | None] = {}

    def run(vec):
        if vec not in cache:
            ins = [STATE_TOKEN] * len(p.ins)
            for i, x in zip(ints, vec):
                ins[i] = x
            try:
                cache[vec] = tuple(interp_lp(prog, name, ins, step_budget=STEP_BUDGET))
            except Fault:
                cache[vec] = None
        return cache[vec]

    found = set()
    domain = range(lo, hi + 1)
    for base in vectors(len(ints), lo, hi, cap):
        base = tuple(base)
        r0 = run(base)
        if r0 is None:
            continue
        for k, i in enumerate(ints):
            for alt in domain:
                if alt == base[k]:
                    continue
                r1 = run(base[:k] + (alt,) + base[k + 1:])
                if r1 is None:
                    continue
                for j, out in enumerate(p.outs):
                    if r0[j] != r1[j]:
                        found.add((out, p.ins[i]))
    return found


# ---------------------------------------------------------------------------
# validator mutants

# A comparison that overlaps the original without being its complement.
OVERLAP = {"<": "<=", "<=": "<", ">": ">=", ">=": ">", "==": "<=", "!=": ">="}


def mutants(prog: LpProgram) -> list[tuple[str, str, list]]:
    """Single-fault variants of ``prog``'s flattened clauses.

    Each is ``(description, expected rule, clauses)``: a guard negated or
    weakened in one clause, one assignment duplicated, one output
    definition dropped, or one clause head renamed.
    """
    base = [c for p in prog for c in flatten(p)]
    out = []

    def with_clause(i, clause):
        return base[:i] + [clause] + base[i + 1:]

    for i, c in enumerate(base):
        where = f"{c.name} clause {i}"
        siblings = [j for j, d in enumerate(base) if d.name == c.name]
        for k, g in enumerate(c.goals):
            if isinstance(g, Guard):
                flips = [("weaken", OVERLAP[g.cmp], "guards-not-complementary")]
                if len(siblings) == 2:
                    # both clauses now carry one guard and nothing its complement
                    flips.append(("negate", COMPLEMENT[g.cmp], "missing-complement"))
                for kind, cmp, rule in flips:
                    goals = c.goals[:k] + (Guard(cmp, g.lhs, g.rhs),) + c.goals[k + 1:]
                    out.append((f"{kind} guard {k} of {where}", rule, with_clause(i, replace(c, goals=goals))))
                break
        prims = [k for k, g in enumerate(c.goals) if isinstance(g, Prim) and g.outs]
        if prims:
            k = prims[-1]
            goals = c.goals + (Prim("copy", (0,), c.goals[k].outs[:1]),)
            out.append((f"duplicate assignment in {where}", "multiple-assignment", with_clause(i, replace(c, goals=goals))))
        for o in c.outs:
            definers = [k for k, g in enumerate(c.goals) if o in defs([g])]
            if definers:
                k = definers[-1]
                goals = c.goals[:k] + c.goals[k + 1:]
                out.append((f"drop definition of {o} in {where}", "undefined-output", with_clause(i, replace(c, goals=goals))))
                break
        if len(siblings) > 1 and c.ins:
            renamed = c.ins[0] + "_h"
            mapping = {c.ins[0]: renamed}
            goals = tuple(rename_goal(g, mapping) for g in c.goals)
            clause = replace(c, ins=(renamed,) + c.ins[1:], goals=goals)
            out.append((f"rename head of {where}", "identical-heads", with_clause(i, clause)))
    return out
