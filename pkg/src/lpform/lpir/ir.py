"""LP-form data types and the tree-factored body representation.

A procedure body is a tree: each node holds a run of guard-free goals and
optionally ends in a binary fork on a guard.  The else branch runs exactly
when the guard's complement holds, so the clauses obtained by flattening
are mutually exclusive and exhaustive by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Union

from ..semantics import COMPLEMENT

Val = Union[str, int]


def is_var(v: Val) -> bool:
    return isinstance(v, str)


@dataclass(frozen=True)
class Prim:
    op: str
    ins: tuple[Val, ...]
    outs: tuple[str, ...]


@dataclass(frozen=True)
class Guard:
    cmp: str
    lhs: Val
    rhs: Val

    @property
    def ins(self) -> tuple[Val, ...]:
        return (self.lhs, self.rhs)

    @property
    def outs(self) -> tuple[str, ...]:
        return ()

    def complement(self) -> Guard:
        return Guard(COMPLEMENT[self.cmp], self.lhs, self.rhs)


@dataclass(frozen=True)
class Call:
    callee: str
    ins: tuple[Val, ...]
    outs: tuple[str, ...]


Goal = Union[Prim, Guard, Call]


@dataclass(frozen=True)
class Fork:
    guard: Guard
    then: BodyTree
    else_: BodyTree


@dataclass(frozen=True)
class BodyTree:
    goals: tuple[Goal, ...] = ()
    fork: Fork | None = None


@dataclass(frozen=True)
class Clause:
    """One root-to-leaf path of a body tree, guards included."""

    name: str
    ins: tuple[str, ...]
    outs: tuple[str, ...]
    goals: tuple[Goal, ...]


@dataclass(frozen=True)
class LpProc:
    name: str
    ins: tuple[str, ...]
    outs: tuple[str, ...]
    body: BodyTree
    public: bool = False
    # Parameters seeded as needed when the procedure is public; None means all.
    exports: frozenset[str] | None = None

    @property
    def params(self) -> tuple[str, ...]:
        return self.ins + self.outs

    def exported(self) -> frozenset[str]:
        if not self.public:
            return frozenset()
        return frozenset(self.params) if self.exports is None else self.exports


@dataclass
class LpProgram:
    procs: dict[str, LpProc] = field(default_factory=dict)

    def __iter__(self) -> Iterator[LpProc]:
        return iter(self.procs.values())

    def __getitem__(self, name: str) -> LpProc:
        return self.procs[name]

    def __contains__(self, name: str) -> bool:
        return name in self.procs

    def with_procs(self, procs) -> LpProgram:
        return LpProgram({p.name: p for p in procs})


# ---------------------------------------------------------------------------
# tree traversal


Loc = tuple[str, int]  # (branch path such as "TF", goal index in that node)


def nodes(tree: BodyTree, path: str = "") -> Iterator[tuple[str, BodyTree]]:
    yield path, tree
    if tree.fork is not None:
        yield from nodes(tree.fork.then, path + "T")
        yield from nodes(tree.fork.else_, path + "F")


def iter_goals(tree: BodyTree) -> Iterator[tuple[Loc, Goal]]:
    """Every goal with its location; a fork guard sits after its node's goals."""
    for path, node in nodes(tree):
        for i, g in enumerate(node.goals):
            yield (path, i), g
        if node.fork is not None:
            yield (path, len(node.goals)), node.fork.guard


def subtree(tree: BodyTree, path: str) -> BodyTree:
    for step in path:
        tree = tree.fork.then if step == "T" else tree.fork.else_
    return tree


def count_goals(tree: BodyTree) -> int:
    return sum(1 for _ in iter_goals(tree))


def count_forks(tree: BodyTree) -> int:
    return sum(1 for _, n in nodes(tree) if n.fork is not None)


def callees(tree: BodyTree) -> list[str]:
    return [g.callee for _, g in iter_goals(tree) if isinstance(g, Call)]


def tree_vars(tree: BodyTree) -> set[str]:
    out = set()
    for _, g in iter_goals(tree):
        out.update(v for v in g.ins if is_var(v))
        out.update(g.outs)
    return out


def defs(goals) -> set[str]:
    """Variables assigned by ``goals``."""
    out = set()
    for g in goals:
        out.update(g.outs)
    return out


# ---------------------------------------------------------------------------
# renaming


def rename_val(v: Val, mapping: Mapping[str, Val]) -> Val:
    return mapping.get(v, v) if is_var(v) else v


def rename_goal(g: Goal, mapping: Mapping[str, Val]) -> Goal:
    if isinstance(g, Guard):
        return Guard(g.cmp, rename_val(g.lhs, mapping), rename_val(g.rhs, mapping))
    ins = tuple(rename_val(v, mapping) for v in g.ins)
    outs = tuple(mapping.get(v, v) for v in g.outs)
    return replace(g, ins=ins, outs=outs)


def rename_tree(tree: BodyTree, mapping: Mapping[str, Val]) -> BodyTree:
    goals = tuple(rename_goal(g, mapping) for g in tree.goals)
    if tree.fork is None:
        return BodyTree(goals)
    f = tree.fork
    fork = Fork(rename_goal(f.guard, mapping), rename_tree(f.then, mapping), rename_tree(f.else_, mapping))
    return BodyTree(goals, fork)


def map_goals(tree: BodyTree, fn) -> BodyTree:
    """Rebuild ``tree`` with each non-guard goal replaced by ``fn(goal)`` (a sequence)."""
    goals = tuple(h for g in tree.goals for h in fn(g))
    if tree.fork is None:
        return BodyTree(goals)
    f = tree.fork
    return BodyTree(goals, Fork(f.guard, map_goals(f.then, fn), map_goals(f.else_, fn)))


def rename_callee(tree: BodyTree, old: str, new: str) -> BodyTree:
    def fn(g):
        if isinstance(g, Call) and g.callee == old:
            return (replace(g, callee=new),)
        return (g,)

    return map_goals(tree, fn)


# ---------------------------------------------------------------------------
# clause views


def tree_paths(tree: BodyTree, path: str = "", prefix: tuple = ()) -> Iterator[tuple[str, tuple[Goal, ...]]]:
    """Yield ``(path, goals)`` per root-to-leaf path, then-branch first."""
    goals = prefix + tree.goals
    if tree.fork is None:
        yield path, goals
        return
    f = tree.fork
    yield from tree_paths(f.then, path + "T", goals + (f.guard,))
    yield from tree_paths(f.else_, path + "F", goals + (f.guard.complement(),))


def flatten(proc: LpProc) -> list[Clause]:
    return [Clause(proc.name, proc.ins, proc.outs, goals) for _, goals in tree_paths(proc.body)]


class RefactorError(Exception):
    def __init__(self, rule: str, message: str, path: str = ""):
        super().__init__(message)
        self.rule = rule
        self.path = path


def refactor(clauses: list[tuple[Goal, ...]], path: str = "") -> BodyTree:
    """Rebuild a body tree from the goal lists of a procedure's clauses.

    Raises :class:`RefactorError` when the clauses are not pairwise identical
    up to a pair of complementary guards.
    """
    if not clauses:
        raise RefactorError("missing-clause", "procedure has no clauses", path)
    n = 0
    while True:
        heads = [c[n] if n < len(c) else None for c in clauses]
        first = heads[0]
        if first is None or isinstance(first, Guard) or any(h != first for h in heads):
            break
        n += 1
    prefix = clauses[0][:n]
    rests = [c[n:] for c in clauses]
    if len(clauses) == 1:
        rest = rests[0]
        if rest:
            raise RefactorError(
                "missing-complement",
                f"guard {rest[0]} has no complementary clause",
                path,
            )
        return BodyTree(prefix)
    if any(not r for r in rests):
        raise RefactorError("clauses-diverge", "a clause ends where others continue", path)
    guard = rests[0][0]
    if not all(isinstance(r[0], Guard) for r in rests):
        raise RefactorError(
            "clauses-diverge", "clauses differ before any guard separates them", path
        )
    comp = guard.complement()
    then_cls, else_cls = [], []
    for r in rests:
        if r[0] == guard:
            then_cls.append(r[1:])
        elif r[0] == comp:
            else_cls.append(r[1:])
        else:
            raise RefactorError(
                "guards-not-complementary",
                f"guards not complementary: {guard} vs {r[0]}",
                path,
            )
    if not else_cls:
        raise RefactorError("missing-complement", f"guard {guard} has no complementary clause", path)
    then = refactor(then_cls, path + "T")
    else_ = refactor(else_cls, path + "F")
    return BodyTree(prefix, Fork(guard, then, else_))
