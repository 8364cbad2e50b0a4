"""Text syntax for LP form.

One clause per statement::

    :- public gcd.
    gcd(a, b; ret) <- b != 0 & mod(a, b; b0) & gcd(b, b0; ret).
    gcd(a, b; ret) <- b == 0 & ret = a.

Goals are ``op(ins; outs)`` for primitives and calls, ``x = v`` for copies
and ``a CMP b`` for guards.  A ``:- public name.`` directive exports a
procedure; ``:- public name(a, b; r).`` additionally restricts the
parameters that dead-code elimination must keep.  ``%`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..semantics import COMPARISONS, PRIM_ARITY
from .ir import (
    Call,
    Clause,
    Goal,
    Guard,
    LpProc,
    LpProgram,
    Prim,
    RefactorError,
    flatten,
    is_var,
    refactor,
)

_UNICODE_CMP = {"≠": "!=", "≤": "<=", "≥": ">=", "=": "=="}


class LpSyntaxError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None, rule: str = "syntax"):
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.col = col
        self.rule = rule


# ---------------------------------------------------------------------------
# printing


def format_val(v) -> str:
    return str(v)


def format_goal(g: Goal) -> str:
    if isinstance(g, Guard):
        return f"{format_val(g.lhs)} {g.cmp} {format_val(g.rhs)}"
    if isinstance(g, Prim) and g.op == "copy":
        return f"{g.outs[0]} = {format_val(g.ins[0])}"
    name = g.op if isinstance(g, Prim) else g.callee
    ins = ", ".join(format_val(v) for v in g.ins)
    outs = ", ".join(g.outs)
    return f"{name}({ins}; {outs})" if outs else f"{name}({ins};)"


def format_head(name: str, ins, outs) -> str:
    return f"{name}({', '.join(map(str, ins))}; {', '.join(map(str, outs))})"


def format_clause(c: Clause) -> str:
    body = " & ".join(format_goal(g) for g in c.goals) or "true"
    return f"{format_head(c.name, c.ins, c.outs)} <- {body}."


def print_proc(p: LpProc) -> str:
    lines = []
    if p.public:
        if p.exports is None or p.exports == frozenset(p.params):
            lines.append(f":- public {p.name}.")
        else:
            ins = [v for v in p.ins if v in p.exports]
            outs = [v for v in p.outs if v in p.exports]
            lines.append(f":- public {format_head(p.name, ins, outs)}.")
    lines.extend(format_clause(c) for c in flatten(p))
    return "\n".join(lines)


def print_lp(prog: LpProgram) -> str:
    if not prog.procs:
        return ""
    return "\n\n".join(print_proc(p) for p in prog) + "\n"


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<num>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op><-|:-|<=|>=|==|!=|[≠≤≥∧<>=(),;&.])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LpSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        if m.lastgroup != "ws":
            t = m.group()
            toks.append(_Tok(m.lastgroup, "&" if t == "∧" else t, line, pos - line_start + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str):
        raise LpSyntaxError(message, self.tok.line, self.tok.col)

    def expect(self, text: str):
        if self.tok.text != text:
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        self.i += 1

    def accept(self, text: str) -> bool:
        if self.tok.text == text:
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        self.i += 1
        return self.toks[self.i - 1].text

    def value(self):
        if self.tok.kind == "num":
            self.i += 1
            return int(self.toks[self.i - 1].text)
        return self.ident()

    def values_until(self, stops: tuple[str, ...]) -> list:
        vals = []
        if self.tok.text in stops:
            return vals
        vals.append(self.value())
        while self.accept(","):
            vals.append(self.value())
        return vals

    def args(self) -> tuple[tuple, tuple]:
        self.expect("(")
        ins = self.values_until((";", ")"))
        outs = []
        if self.accept(";"):
            outs = self.values_until((")",))
        self.expect(")")
        return tuple(ins), tuple(outs)

    def statements(self):
        """Yield ('public', name, exports-or-None, line) and ('clause', Clause, line)."""
        while self.tok.kind != "eof":
            line = self.tok.line
            if self.accept(":-"):
                word = self.ident()
                if word != "public":
                    self.error(f"unknown directive {word!r}")
                while True:
                    name = self.ident()
                    exports = None
                    if self.tok.text == "(":
                        ins, outs = self.args()
                        exports = frozenset(ins + outs)
                    yield ("public", name, exports, line)
                    if not self.accept(","):
                        break
                self.expect(".")
                continue
            name = self.ident()
            ins, outs = self.args()
            self.expect("<-")
            goals = []
            if not self.accept("true"):
                goals.append(self.goal())
                while self.accept("&"):
                    goals.append(self.goal())
            self.expect(".")
            yield ("clause", Clause(name, ins, outs, tuple(goals)), line)

    def goal(self) -> Goal:
        tok = self.tok
        if tok.kind == "ident" and self.toks[self.i + 1].text == "(":
            name = self.ident()
            ins, outs = self.args()
            if name == "copy" or name in PRIM_ARITY:
                return Prim(name, ins, outs)
            return Call(name, ins, outs)
        lhs = self.value()
        op = self.tok.text
        if op == "=" and is_var(lhs):
            self.i += 1
            return Prim("copy", (self.value(),), (lhs,))
        op = _UNICODE_CMP.get(op, op)
        if op not in COMPARISONS:
            self.error(f"expected a goal, found {tok.text!r}")
        self.i += 1
        return Guard(op, lhs, self.value())


def parse_clauses(text: str) -> tuple[list[Clause], dict[str, frozenset | None]]:
    """Parse LP text into raw clauses plus the ``public`` directives."""
    clauses, publics = [], {}
    seen, last = set(), None
    for item in _Parser(text).statements():
        if item[0] == "public":
            publics[item[1]] = item[2]
            continue
        clause, line = item[1], item[2]
        if clause.name != last and clause.name in seen:
            raise LpSyntaxError(f"clauses of {clause.name!r} are not adjacent", line, 1)
        seen.add(clause.name)
        last = clause.name
        clauses.append(clause)
    return clauses, publics


def parse_lp(text: str) -> LpProgram:
    """Parse LP text and re-factor each procedure's clauses into a body tree.

    Raises :class:`LpSyntaxError` for malformed text, for clause sets that
    are not pairwise identical up to complementary guards, and for clauses
    whose heads disagree.  Other well-formedness rules are left to
    :func:`validate_lp`.

    Without any ``public`` directive, procedures not called from elsewhere
    are public.
    """
    clauses, publics = parse_clauses(text)
    groups: dict[str, list[Clause]] = {}
    for c in clauses:
        groups.setdefault(c.name, []).append(c)
    procs = []
    for name, group in groups.items():
        ins, outs = group[0].ins, group[0].outs
        if any((c.ins, c.outs) != (ins, outs) for c in group):
            raise LpSyntaxError(f"clause heads of {name!r} are not identical", rule="identical-heads")
        if not all(is_var(v) for v in ins + outs):
            raise LpSyntaxError(f"head of {name!r} has a non-variable parameter", rule="moded-arguments")
        try:
            body = refactor([c.goals for c in group])
        except RefactorError as e:
            raise LpSyntaxError(f"{name}: {e}", rule=e.rule) from None
        procs.append(LpProc(name, ins, outs, body))
    if not publics:
        called = {
            c.callee
            for cl in clauses
            for c in cl.goals
            if isinstance(c, Call) and c.callee != cl.name
        }
        publics = {p.name: None for p in procs if p.name not in called}
    out = []
    for p in procs:
        if p.name in publics:
            exports = publics[p.name]
            p = LpProc(p.name, p.ins, p.outs, p.body, True, exports)
        out.append(p)
    return LpProgram({p.name: p for p in out})
