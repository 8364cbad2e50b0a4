"""Three-address code: AST, text syntax, validation, CFG and a reference interpreter.

Text syntax::

    func gcd(a, b) {
    entry:
        goto header
    header:
        if b != 0 then body else tail
    body:
        t = b
        b = a mod t
        a = t
        goto header
    tail:
        return a
    }

Statements are ``v = a``, ``v = a OP b`` (OP one of ``+ - * / mod``),
``v = -a``, ``v = call f(a, ...)`` and ``call f(a, ...)``.  Block exits are
``return a``, ``if a CMP b then L1 else L2`` and ``goto L``.  ``#`` starts a
comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import networkx as nx

from .semantics import (
    COMPARISONS,
    POISON,
    STACK_DEPTH,
    Fault,
    StepCounter,
    apply_prim,
    check_result,
    compare,
)

Val = Union[str, int]

BINOPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "mod": "mod"}
KEYWORDS = frozenset({"func", "return", "if", "then", "else", "goto", "call", "neg", "mod"})


@dataclass(frozen=True)
class Assign:
    dst: str
    src: Val


@dataclass(frozen=True)
class BinOp:
    dst: str
    op: str
    lhs: Val
    rhs: Val


@dataclass(frozen=True)
class UnOp:
    dst: str
    op: str  # only "neg"
    src: Val


@dataclass(frozen=True)
class Call:
    dst: str | None
    callee: str
    args: tuple[Val, ...]


Prim = Union[Assign, BinOp, UnOp, Call]


@dataclass(frozen=True)
class Return:
    val: Val


@dataclass(frozen=True)
class If:
    cmp: str
    lhs: Val
    rhs: Val
    then: str
    else_: str


@dataclass(frozen=True)
class Goto:
    target: str


BlockExit = Union[Return, If, Goto]


@dataclass(frozen=True)
class TacBlock:
    id: str
    prims: tuple[Prim, ...]
    exit: BlockExit


@dataclass(frozen=True)
class TacFunction:
    name: str
    params: tuple[str, ...]
    blocks: tuple[TacBlock, ...]

    @property
    def entry(self) -> TacBlock:
        return self.blocks[0]

    def block(self, block_id: str) -> TacBlock:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise KeyError(block_id)


@dataclass(frozen=True)
class TacProgram:
    functions: tuple[TacFunction, ...]

    def function(self, name: str) -> TacFunction:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)


class TacError(Exception):
    """Malformed three-address code (syntax or structure)."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# lexing and parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|[-+*/<>=(){},:%])
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
            raise TacError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
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

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise TacError(message, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        tok = self.tok
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.text == text:
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        tok = self.tok
        if tok.kind != "ident" or tok.text in KEYWORDS:
            self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok.text

    def value(self) -> Val:
        if self.tok.text == "-" and self.peek().kind == "num":
            self.i += 2
            return -int(self.peek(-1).text)
        if self.tok.kind == "num":
            self.i += 1
            return int(self.peek(-1).text)
        return self.ident()

    def program(self) -> TacProgram:
        funcs = []
        while self.tok.kind != "eof":
            funcs.append(self.function())
        return TacProgram(tuple(funcs))

    def function(self) -> TacFunction:
        self.expect("func")
        name = self.ident()
        self.expect("(")
        params = []
        if not self.accept(")"):
            params.append(self.ident())
            while self.accept(","):
                params.append(self.ident())
            self.expect(")")
        self.expect("{")
        blocks = []
        while not self.accept("}"):
            blocks.append(self.block())
        if not blocks:
            self.error(f"function {name!r} has no blocks", self.peek(-1))
        return TacFunction(name, tuple(params), tuple(blocks))

    def block(self) -> TacBlock:
        label = self.ident()
        self.expect(":")
        prims = []
        while True:
            tok = self.tok
            if tok.text == "return":
                self.i += 1
                return TacBlock(label, tuple(prims), Return(self.value()))
            if tok.text == "goto":
                self.i += 1
                return TacBlock(label, tuple(prims), Goto(self.ident()))
            if tok.text == "if":
                self.i += 1
                return TacBlock(label, tuple(prims), self.test())
            if tok.text == "call":
                self.i += 1
                callee, args = self.call_tail()
                prims.append(Call(None, callee, args))
                continue
            if tok.kind == "ident" and self.peek().text == "=":
                prims.append(self.assignment())
                continue
            self.error(f"block {label!r} must end with return, if or goto")

    def test(self) -> If:
        lhs = self.value()
        cmp = self.tok.text
        if cmp == "=":
            cmp = "=="
        elif cmp not in COMPARISONS:
            self.error(f"expected comparison operator, found {self.tok.text!r}")
        self.i += 1
        rhs = self.value()
        self.expect("then")
        then = self.ident()
        self.expect("else")
        return If(cmp, lhs, rhs, then, self.ident())

    def call_tail(self) -> tuple[str, tuple[Val, ...]]:
        callee = self.ident()
        self.expect("(")
        args = []
        if not self.accept(")"):
            args.append(self.value())
            while self.accept(","):
                args.append(self.value())
            self.expect(")")
        return callee, tuple(args)

    def assignment(self) -> Prim:
        dst = self.ident()
        self.expect("=")
        if self.accept("call"):
            callee, args = self.call_tail()
            return Call(dst, callee, args)
        if self.accept("neg"):
            return UnOp(dst, "neg", self.value())
        if self.tok.text == "-" and self.peek().kind == "ident":
            self.i += 1
            return UnOp(dst, "neg", self.value())
        lhs = self.value()
        op = self.tok.text
        if op == "%":
            op = "mod"
        if op in BINOPS:
            self.i += 1
            return BinOp(dst, op, lhs, self.value())
        return Assign(dst, lhs)


def parse_tac(text: str) -> TacProgram:
    """Parse and validate a three-address-code program."""
    prog = _Parser(text).program()
    validate_tac(prog)
    return prog


def validate_tac(prog: TacProgram) -> None:
    """Raise :class:`TacError` if ``prog`` violates a structural invariant."""
    names = set()
    for f in prog.functions:
        if f.name in names:
            raise TacError(f"duplicate function {f.name!r}")
        names.add(f.name)
    arity = {f.name: len(f.params) for f in prog.functions}
    for f in prog.functions:
        if len(set(f.params)) != len(f.params):
            raise TacError(f"duplicate parameter in {f.name!r}")
        ids = set()
        for b in f.blocks:
            if b.id in ids:
                raise TacError(f"duplicate block {b.id!r} in {f.name!r}")
            ids.add(b.id)
        for b in f.blocks:
            for target in exit_targets(b.exit):
                if target not in ids:
                    raise TacError(f"undefined block {target!r} in {f.name!r}")
            for p in b.prims:
                if isinstance(p, Call):
                    if p.callee not in arity:
                        raise TacError(f"call to undefined function {p.callee!r} in {f.name!r}")
                    if len(p.args) != arity[p.callee]:
                        raise TacError(
                            f"{p.callee!r} expects {arity[p.callee]} arguments, "
                            f"got {len(p.args)} in {f.name!r}"
                        )


def exit_targets(ex: BlockExit) -> tuple[str, ...]:
    if isinstance(ex, Goto):
        return (ex.target,)
    if isinstance(ex, If):
        return (ex.then, ex.else_)
    return ()


# ---------------------------------------------------------------------------
# printing


def _val(v: Val) -> str:
    return str(v)


def _prim_text(p: Prim) -> str:
    if isinstance(p, Assign):
        return f"{p.dst} = {_val(p.src)}"
    if isinstance(p, BinOp):
        return f"{p.dst} = {_val(p.lhs)} {p.op} {_val(p.rhs)}"
    if isinstance(p, UnOp):
        return f"{p.dst} = -{p.src}" if isinstance(p.src, str) else f"{p.dst} = neg {p.src}"
    args = ", ".join(_val(a) for a in p.args)
    if p.dst is None:
        return f"call {p.callee}({args})"
    return f"{p.dst} = call {p.callee}({args})"


def _exit_text(ex: BlockExit) -> str:
    if isinstance(ex, Return):
        return f"return {_val(ex.val)}"
    if isinstance(ex, Goto):
        return f"goto {ex.target}"
    return f"if {_val(ex.lhs)} {ex.cmp} {_val(ex.rhs)} then {ex.then} else {ex.else_}"


def print_tac(prog: TacProgram) -> str:
    out = []
    for f in prog.functions:
        out.append(f"func {f.name}({', '.join(f.params)}) {{")
        for b in f.blocks:
            out.append(f"{b.id}:")
            out.extend("    " + _prim_text(p) for p in b.prims)
            out.append("    " + _exit_text(b.exit))
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------------
# analysis helpers


def build_cfg(f: TacFunction) -> nx.DiGraph:
    """Block-level control-flow graph; ``graph.graph['entry']`` names the entry."""
    g = nx.DiGraph(entry=f.entry.id)
    for b in f.blocks:
        g.add_node(b.id)
    for b in f.blocks:
        for target in exit_targets(b.exit):
            g.add_edge(b.id, target)
    return g


def prim_uses(p: Prim) -> tuple[Val, ...]:
    if isinstance(p, Assign):
        return (p.src,)
    if isinstance(p, BinOp):
        return (p.lhs, p.rhs)
    if isinstance(p, UnOp):
        return (p.src,)
    return p.args


def exit_uses(ex: BlockExit) -> tuple[Val, ...]:
    if isinstance(ex, Return):
        return (ex.val,)
    if isinstance(ex, If):
        return (ex.lhs, ex.rhs)
    return ()


def function_vars(f: TacFunction) -> list[str]:
    """Parameters first, then every other variable in first-occurrence order."""
    seen = dict.fromkeys(f.params)
    for b in f.blocks:
        for p in b.prims:
            for v in prim_uses(p):
                if isinstance(v, str):
                    seen.setdefault(v)
            if p.dst is not None:
                seen.setdefault(p.dst)
        for v in exit_uses(b.exit):
            if isinstance(v, str):
                seen.setdefault(v)
    return list(seen)


# ---------------------------------------------------------------------------
# interpreter


class _Frame:
    __slots__ = ("func", "env", "block", "index", "dst")

    def __init__(self, func: TacFunction, env: dict, dst: str | None):
        self.func = func
        self.env = env
        self.block = func.entry
        self.index = 0
        self.dst = dst


def _read(env: dict, v: Val):
    if isinstance(v, int):
        return v
    return env.get(v, POISON)


def interp_tac(
    prog: TacProgram,
    fname: str,
    args: list[int],
    step_budget: int | None = None,
    max_depth: int = 100_000,
) -> int:
    """Run ``fname`` on ``args`` and return the value of its ``return``.

    Reading a never-assigned variable yields a poison value that faults
    when it reaches arithmetic, a test, or the final result.
    """
    funcs = {f.name: f for f in prog.functions}
    func = funcs[fname]
    if len(args) != len(func.params):
        raise ValueError(f"{fname} expects {len(func.params)} arguments, got {len(args)}")
    steps = StepCounter(step_budget)
    stack = [_Frame(func, dict(zip(func.params, args)), None)]
    while True:
        fr = stack[-1]
        steps.tick()
        if fr.index < len(fr.block.prims):
            p = fr.block.prims[fr.index]
            fr.index += 1
            if isinstance(p, Call):
                callee = funcs[p.callee]
                vals = [_read(fr.env, a) for a in p.args]
                if len(stack) >= max_depth:
                    raise Fault(STACK_DEPTH, f"depth {max_depth}")
                stack.append(_Frame(callee, dict(zip(callee.params, vals)), p.dst))
            elif isinstance(p, Assign):
                fr.env[p.dst] = _read(fr.env, p.src)
            elif isinstance(p, UnOp):
                fr.env[p.dst] = apply_prim("negate", [_read(fr.env, p.src)])[0]
            else:
                ins = [_read(fr.env, p.lhs), _read(fr.env, p.rhs)]
                fr.env[p.dst] = apply_prim(BINOPS[p.op], ins)[0]
            continue
        ex = fr.block.exit
        if isinstance(ex, Goto):
            fr.block, fr.index = fr.func.block(ex.target), 0
        elif isinstance(ex, If):
            taken = compare(ex.cmp, _read(fr.env, ex.lhs), _read(fr.env, ex.rhs))
            fr.block, fr.index = fr.func.block(ex.then if taken else ex.else_), 0
        else:
            result = _read(fr.env, ex.val)
            stack.pop()
            if not stack:
                return check_result([result])[0]
            if fr.dst is not None:
                stack[-1].env[fr.dst] = result
