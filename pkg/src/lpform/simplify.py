"""Clean-up passes: copy propagation, inlining, and neededness-driven pruning."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .lpir import BodyTree, Call, LpProc, LpProgram, Prim, count_goals
from .lpir.ir import callees, is_var, iter_goals, nodes, rename_callee, rename_goal, rename_tree, tree_vars
from .neededness import call_graph_sccs, mark_and_prune
from .translate import NameSupply


@dataclass(frozen=True)
class InlinePolicy:
    max_body_goals: int = 1
    inline_single_call_site: bool = True
    max_inlines: int = 1000


# ---------------------------------------------------------------------------
# copy propagation


def _is_copy(g) -> bool:
    return isinstance(g, Prim) and g.op == "copy"


def _propagate(tree: BodyTree, ins: set[str], outs: set[str]) -> BodyTree:
    goals = list(tree.goals)
    fork = tree.fork
    i = 0
    while i < len(goals):
        g = goals[i]
        if not _is_copy(g):
            i += 1
            continue
        dst, src = g.outs[0], g.ins[0]
        if dst not in outs:
            # forward: later uses of dst read src directly
            mapping = {dst: src}
            goals = goals[:i] + [rename_goal(h, mapping) for h in goals[i + 1:]]
            fork = _rename_fork(fork, mapping)
            continue
        def_at = next((j for j in range(i) if src in goals[j].outs), None)
        if is_var(src) and src not in ins and src not in outs and def_at is not None:
            # backward: the local feeding an output is renamed to the output
            mapping = {src: dst}
            goals = (
                goals[:def_at]
                + [rename_goal(h, mapping) for h in goals[def_at:i]]
                + [rename_goal(h, mapping) for h in goals[i + 1:]]
            )
            fork = _rename_fork(fork, mapping)
            continue
        i += 1
    if fork is not None:
        fork = replace(fork, then=_propagate(fork.then, ins, outs), else_=_propagate(fork.else_, ins, outs))
    return BodyTree(tuple(goals), fork)


def _rename_fork(fork, mapping):
    if fork is None:
        return None
    return rename_tree(BodyTree((), fork), mapping).fork


def copy_propagate(prog: LpProgram) -> LpProgram:
    """Remove copy goals by renaming, keeping every output parameter defined."""
    return prog.with_procs(
        replace(p, body=_propagate(p.body, set(p.ins), set(p.outs))) for p in prog
    )


# ---------------------------------------------------------------------------
# inlining


def _call_sites(prog: LpProgram) -> dict[str, int]:
    sites = {name: 0 for name in prog.procs}
    for p in prog:
        for _, g in iter_goals(p.body):
            if isinstance(g, Call) and g.callee in sites:
                sites[g.callee] += 1
    return sites


def _strip_digits(name: str) -> str:
    return re.sub(r"\d+$", "", name) or name


def instantiate(callee: LpProc, call: Call, taken: set[str]) -> BodyTree:
    """The callee's body with parameters bound to the call's arguments and
    locals renamed away from ``taken``."""
    mapping = dict(zip(callee.ins, call.ins))
    mapping.update(zip(callee.outs, call.outs))
    supply = NameSupply(taken | set(call.outs) | {v for v in call.ins if is_var(v)})
    for v in sorted(tree_vars(callee.body) - set(callee.params)):
        if v in supply.taken:
            mapping[v] = supply.fresh(_strip_digits(v))
        else:
            supply.taken.add(v)
    return rename_tree(callee.body, mapping)


def _splice(tree: BodyTree, path: str, index: int, body: BodyTree) -> BodyTree:
    if path:
        f = tree.fork
        if path[0] == "T":
            f = replace(f, then=_splice(f.then, path[1:], index, body))
        else:
            f = replace(f, else_=_splice(f.else_, path[1:], index, body))
        return BodyTree(tree.goals, f)
    goals = tree.goals[:index] + body.goals + tree.goals[index + 1:]
    if body.fork is None:
        return BodyTree(goals, tree.fork)
    return BodyTree(goals, body.fork)


def _inline_candidate(prog: LpProgram, policy: InlinePolicy):
    sites = _call_sites(prog)
    sccs = call_graph_sccs(prog)
    scc_of = {name: i for i, scc in enumerate(sccs) for name in scc}
    # size alone never justifies copying a loop body: that would unroll it
    recursive = {
        name for scc in sccs for name in scc
        if len(scc) > 1 or name in callees(prog[name].body)
    }
    for p in prog:
        tree_nodes = dict(nodes(p.body))
        for (path, index), g in iter_goals(p.body):
            if not isinstance(g, Call) or g.callee == p.name or g.callee not in prog:
                continue
            q = prog[g.callee]
            node = tree_nodes[path]
            tail = index == len(node.goals) - 1 and node.fork is None
            if q.body.fork is not None and not tail:
                continue
            single = policy.inline_single_call_site and sites[q.name] == 1
            if scc_of[q.name] == scc_of[p.name]:
                ok = single and not q.public
            else:
                ok = single or (q.name not in recursive and count_goals(q.body) <= policy.max_body_goals)
            if ok:
                return p, path, index, g, q, sites[q.name]
    return None


def inline(prog: LpProgram, policy: InlinePolicy = InlinePolicy()) -> LpProgram:
    """Inline calls to small or single-use procedures.

    A callee whose body forks is inlined only at a call in tail position,
    where its fork grafts onto the caller's tree.  Recursive calls within a
    component are inlined only when that removes the callee entirely.
    """
    for _ in range(policy.max_inlines):
        found = _inline_candidate(prog, policy)
        if found is None:
            break
        p, path, index, call, q, nsites = found
        taken = tree_vars(p.body) | set(p.params)
        body = _splice(p.body, path, index, instantiate(q, call, taken))
        procs = dict(prog.procs)
        procs[p.name] = replace(p, body=body)
        if nsites == 1 and not q.public:
            del procs[q.name]
        prog = LpProgram(procs)
    return prog


def collapse_forwarders(prog: LpProgram) -> LpProgram:
    """Merge a procedure whose whole body forwards to another of the same shape.

    A public wrapper absorbs the private procedure it forwards to, so a
    loop entered through a header procedure recurses on the public name.
    """
    for p in prog:
        body = p.body
        if body.fork is not None or len(body.goals) != 1:
            continue
        g = body.goals[0]
        if not isinstance(g, Call) or g.callee == p.name or g.callee not in prog:
            continue
        q = prog[g.callee]
        if g.ins != p.ins or g.outs != p.outs or q.public:
            continue
        mapping = dict(zip(q.params, p.params))
        taken = set(p.params)
        supply = NameSupply(taken)
        for v in sorted(tree_vars(q.body) - set(q.params)):
            if v in taken:
                mapping[v] = supply.fresh(_strip_digits(v))
        new_body = rename_callee(rename_tree(q.body, mapping), q.name, p.name)
        procs = {}
        for r in prog:
            if r.name == q.name:
                continue
            if r.name == p.name:
                procs[r.name] = replace(r, body=new_body)
            else:
                procs[r.name] = replace(r, body=rename_callee(r.body, q.name, p.name))
        return collapse_forwarders(LpProgram(procs))
    return prog


# ---------------------------------------------------------------------------
# pipeline


def simplify_round(prog: LpProgram, policy: InlinePolicy = InlinePolicy()) -> LpProgram:
    prog = copy_propagate(prog)
    prog = inline(prog, policy)
    prog = collapse_forwarders(prog)
    return mark_and_prune(prog)


def simplify_pipeline(
    prog: LpProgram, policy: InlinePolicy = InlinePolicy(), max_rounds: int = 10
) -> LpProgram:
    """Repeat copy propagation, inlining and pruning until nothing changes."""
    for _ in range(max_rounds):
        new = simplify_round(prog, policy)
        if new == prog:
            break
        prog = new
    return prog
