"""Interprocedural neededness analysis and dead-code elimination.

Phase one computes, bottom-up over the call graph's strongly connected
components, a dependency formula per procedure: a conjunction of
implications ``y => x`` meaning "if output ``y`` is needed, input ``x`` is
needed".  Phase two seeds the exported parameters of public procedures as
needed, propagates needs top-down to a fixed point, and deletes every goal
and parameter left unmarked.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import networkx as nx

from .lpir import BodyTree, Call, Fork, Guard, LpProc, LpProgram, defs, tree_paths
from .lpir.ir import callees, is_var, map_goals


@dataclass(frozen=True)
class NeedFormula:
    """A conjunction of ``x => y`` implications between variables."""

    implications: frozenset[tuple[str, str]] = frozenset()

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, str]]) -> NeedFormula:
        return cls(frozenset((x, y) for x, y in pairs if x != y))

    def __or__(self, other: NeedFormula) -> NeedFormula:
        return NeedFormula(self.implications | other.implications)

    def __len__(self):
        return len(self.implications)

    def successors(self) -> dict[str, set[str]]:
        succ: dict[str, set[str]] = {}
        for x, y in self.implications:
            succ.setdefault(x, set()).add(y)
        return succ

    def closure(self) -> NeedFormula:
        succ = self.successors()
        pairs = set()
        for x in succ:
            for y in _reachable(succ, [x]):
                pairs.add((x, y))
        return NeedFormula.of(pairs)

    def implied(self, needed: Iterable[str]) -> set[str]:
        """Every variable needed once ``needed`` are (excluding ``needed`` itself)."""
        return _reachable(self.successors(), list(needed))

    def entails(self, other: NeedFormula) -> bool:
        return other.implications <= self.closure().implications

    def project(self, keep: Iterable[str]) -> NeedFormula:
        """Existentially quantify away every variable outside ``keep``."""
        keep = set(keep)
        return NeedFormula.of(
            (x, y) for x, y in self.closure().implications if x in keep and y in keep
        )

    def rename(self, mapping: dict) -> NeedFormula:
        """Rename variables; implications touching a constant are dropped."""
        pairs = []
        for x, y in self.implications:
            x2, y2 = mapping.get(x, x), mapping.get(y, y)
            if is_var(x2) and is_var(y2):
                pairs.append((x2, y2))
        return NeedFormula.of(pairs)

    def __str__(self):
        return ", ".join(f"{x}=>{y}" for x, y in sorted(self.implications))


def _reachable(succ: dict[str, set[str]], starts: list[str]) -> set[str]:
    seen: set[str] = set()
    stack = list(starts)
    while stack:
        for y in succ.get(stack.pop(), ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


BOTTOM = NeedFormula()

NeedDictionary = dict  # procedure name -> NeedFormula over its parameters


# ---------------------------------------------------------------------------
# call graph


def call_graph(prog: LpProgram) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(prog.procs)
    for p in prog:
        for c in callees(p.body):
            if c in prog:
                g.add_edge(p.name, c)
    return g


def call_graph_sccs(prog: LpProgram) -> list[list[str]]:
    """Strongly connected components with callees before callers."""
    g = call_graph(prog)
    order = {name: i for i, name in enumerate(prog.procs)}
    cond = nx.condensation(g)
    members = cond.graph["mapping"]
    comps = {c: sorted((n for n in members if members[n] == c), key=order.get) for c in cond}
    topo = nx.lexicographical_topological_sort(cond, key=lambda c: order[comps[c][0]])
    return [comps[c] for c in reversed(list(topo))]


# ---------------------------------------------------------------------------
# phase one


def goal_deps(goal, later_defs: set[str], deps: NeedDictionary, prog: LpProgram) -> NeedFormula:
    """Dependencies contributed by one goal given the variables defined after it."""
    ins = [v for v in goal.ins if is_var(v)]
    if isinstance(goal, Guard):
        return NeedFormula.of((v, x) for v in later_defs for x in ins)
    if isinstance(goal, Call):
        callee = prog[goal.callee]
        mapping = dict(zip(callee.ins, goal.ins))
        mapping.update(zip(callee.outs, goal.outs))
        return deps.get(goal.callee, BOTTOM).rename(mapping)
    return NeedFormula.of((y, x) for y in goal.outs for x in ins)


def clause_deps(goals, deps: NeedDictionary, prog: LpProgram) -> NeedFormula:
    out = BOTTOM
    for k, g in enumerate(goals):
        out = out | goal_deps(g, defs(goals[k + 1:]), deps, prog)
    return out


def proc_deps(proc: LpProc, deps: NeedDictionary, prog: LpProgram) -> NeedFormula:
    """All clauses conjoined, then projected onto the head's parameters."""
    out = BOTTOM
    for _, goals in tree_paths(proc.body):
        out = out | clause_deps(goals, deps, prog)
    return out.project(proc.params)


def needed_deps(prog: LpProgram, trace: list | None = None) -> NeedDictionary:
    """Least fixed point of the per-procedure dependency formulas.

    If ``trace`` is given, a snapshot of the dictionary is appended after
    every iteration.
    """
    deps: NeedDictionary = {}
    for scc in call_graph_sccs(prog):
        for name in scc:
            deps[name] = BOTTOM
        changed = True
        while changed:
            changed = False
            for name in scc:
                new = deps[name] | proc_deps(prog[name], deps, prog)
                if new != deps[name]:
                    deps[name] = new
                    changed = True
            if trace is not None:
                trace.append(dict(deps))
    return deps


# ---------------------------------------------------------------------------
# phase two


class _Marks:
    def __init__(self, prog: LpProgram, deps: NeedDictionary):
        self.prog = prog
        self.deps = deps
        self.closed = {name: f.closure() for name, f in deps.items()}
        self.outs = {p.name: set(p.exported() & set(p.outs)) for p in prog}
        self.ins = {p.name: set(p.exported() & set(p.ins)) for p in prog}

    def call_inputs(self, goal: Call, needed: set[str]) -> set[str]:
        """Request the callee's needed outputs; return the actual inputs now needed."""
        callee = self.prog[goal.callee]
        requested = {o for o, actual in zip(callee.outs, goal.outs) if actual in needed}
        self.outs[callee.name] |= requested
        formula = self.closed.get(callee.name, BOTTOM)
        wanted = (formula.implied(requested) & set(callee.ins)) | self.ins[callee.name]
        return {a for p, a in zip(callee.ins, goal.ins) if p in wanted and is_var(a)}

    def process(self, tree: BodyTree, needed: set[str]) -> tuple[set[str], BodyTree]:
        """Walk ``tree`` backwards from the variables ``needed`` at its leaves.

        Returns the variables needed on entry and the tree with unneeded
        goals removed (parameter lists are left untouched).
        """
        fork = None
        if tree.fork is not None:
            f = tree.fork
            n_then, t_then = self.process(f.then, needed)
            n_else, t_else = self.process(f.else_, needed)
            if t_then == t_else:
                live, kept = n_then, list(t_then.goals)
                fork = t_then.fork
            else:
                live = n_then | n_else | {v for v in f.guard.ins if is_var(v)}
                kept = []
                fork = Fork(f.guard, t_then, t_else)
        else:
            live, kept = set(needed), []
        body = []
        for g in reversed(tree.goals):
            if not (set(g.outs) & live):
                continue
            body.append(g)
            if isinstance(g, Call):
                extra = self.call_inputs(g, live)
            else:
                extra = {v for v in g.ins if is_var(v)}
            live = (live - set(g.outs)) | extra
        return live, BodyTree(tuple(reversed(body)) + tuple(kept), fork)

    def solve(self, order: list[str]) -> dict[str, BodyTree]:
        while True:
            snapshot = ({k: set(v) for k, v in self.outs.items()}, {k: set(v) for k, v in self.ins.items()})
            bodies = {}
            for name in order:
                p = self.prog[name]
                live, body = self.process(p.body, self.outs[name])
                self.ins[name] |= live & set(p.ins)
                bodies[name] = body
            if (self.outs, self.ins) == snapshot:
                return bodies


def _prune_once(prog: LpProgram, deps: NeedDictionary) -> LpProgram:
    order = [name for scc in reversed(call_graph_sccs(prog)) for name in scc]
    marks = _Marks(prog, deps)
    bodies = marks.solve(order)

    def keep(name):
        p = prog[name]
        return (
            [i for i, v in enumerate(p.ins) if v in marks.ins[name]],
            [i for i, v in enumerate(p.outs) if v in marks.outs[name]],
        )

    kept = {name: keep(name) for name in prog.procs}

    def fix_call(g):
        if isinstance(g, Call):
            ki, ko = kept[g.callee]
            return (Call(g.callee, tuple(g.ins[i] for i in ki), tuple(g.outs[i] for i in ko)),)
        return (g,)

    procs = {}
    for name, p in prog.procs.items():
        ki, ko = kept[name]
        procs[name] = replace(
            p,
            ins=tuple(p.ins[i] for i in ki),
            outs=tuple(p.outs[i] for i in ko),
            body=map_goals(bodies[name], fix_call),
        )
    return LpProgram(_reachable_procs(procs))


def _reachable_procs(procs: dict[str, LpProc]) -> dict[str, LpProc]:
    live = {name for name, p in procs.items() if p.public}
    stack = list(live)
    while stack:
        for c in callees(procs[stack.pop()].body):
            if c not in live:
                live.add(c)
                stack.append(c)
    return {name: p for name, p in procs.items() if name in live}


def mark_and_prune(prog: LpProgram, deps: NeedDictionary | None = None) -> LpProgram:
    """Delete every goal and parameter not needed by a public procedure.

    Pruning can expose further dead code (a collapsed fork frees its guard's
    inputs, a dropped parameter frees its argument), so the analysis is
    rerun on its own output until nothing changes.
    """
    if deps is None:
        deps = needed_deps(prog)
    current = prog
    while True:
        pruned = _prune_once(current, deps)
        if pruned == current:
            return pruned
        current = pruned
        deps = needed_deps(current)


def format_deps(prog: LpProgram, deps: NeedDictionary) -> list[str]:
    return [f"{name}: {deps[name]}" for name in prog.procs]
