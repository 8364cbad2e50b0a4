"""Command-line driver: ``lpform <command> FILE ...``.

Input files are three-address code (``.tac``) or LP form text (anything
else); ``-`` reads standard input and sniffs the format.  Reports are
plain text with one fact per line, or one JSON object per line with
``--json``.  Errors go to standard error.  Exit status is 0 on success,
1 for invalid programs, runtime faults and analysis failures, and 2 for
usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

from . import __version__
from .interval import TOP, Interval, analyze_intervals, check_div_safety
from .lower import execute_asm, lower, print_asm
from .lpir import LpProgram, LpSyntaxError, format_goal, interp_lp, iter_goals, parse_lp, print_lp, validate_lp
from .lpir.interp import STATE_TOKEN
from .neededness import needed_deps
from .semantics import Fault
from .simplify import InlinePolicy, simplify_pipeline
from .tac import TacError, TacProgram, interp_tac, parse_tac, print_tac
from .translate import translate_program

STAGES = ("tac", "lp", "lp-simplified", "asm")


class CliError(Exception):
    """A problem with the input program; reported on stderr with exit 1."""


class UsageError(Exception):
    """A problem with the command line; exit 2."""


# ---------------------------------------------------------------------------
# input


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from None


def _is_tac(path: str, text: str, fmt: str) -> bool:
    if fmt != "auto":
        return fmt == "tac"
    if path.endswith(".tac"):
        return True
    if path.endswith(".lp"):
        return False
    return re.search(r"^\s*func\s", text, re.MULTILINE) is not None


class Source:
    """A loaded input: the TAC program if there is one, and its LP form."""

    def __init__(self, args):
        text = _read(args.file)
        self.tac: TacProgram | None = None
        try:
            if _is_tac(args.file, text, args.input_format):
                self.tac = parse_tac(text)
                self.lp = translate_program(self.tac)
            else:
                self.lp = parse_lp(text)
        except (TacError, LpSyntaxError) as e:
            raise CliError(f"{args.file}: {e}") from None
        self.policy = InlinePolicy(
            max_body_goals=getattr(args, "max_inline_goals", None) or InlinePolicy().max_body_goals
        )
        self.max_rounds = getattr(args, "max_rounds", None) or 10

    def checked(self) -> LpProgram:
        diags = validate_lp(self.lp)
        if diags:
            raise CliError("invalid program:\n" + "\n".join(f"  {d}" for d in diags))
        return self.lp

    def simplified(self) -> LpProgram:
        return simplify_pipeline(self.checked(), self.policy, self.max_rounds)


class Report:
    """Writes report lines as plain text, or as JSON records with ``--json``."""

    def __init__(self, as_json: bool):
        self.as_json = as_json

    def line(self, text: str, **record):
        if self.as_json:
            print(json.dumps(record or {"text": text}, sort_keys=True))
        else:
            print(text)

    def block(self, kind: str, text: str):
        if self.as_json:
            print(json.dumps({"kind": kind, "text": text}, sort_keys=True))
        else:
            sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_translate(args, out: Report) -> int:
    src = Source(args)
    if src.tac is None:
        raise UsageError("translate expects three-address code input")
    out.block("lp", print_lp(src.lp))
    return 0


def cmd_validate(args, out: Report) -> int:
    src = Source(args)
    diags = validate_lp(src.lp)
    for d in diags:
        print(str(d), file=sys.stderr)
        if out.as_json:
            out.line(str(d), kind="diagnostic", proc=d.proc, path=d.path, rule=d.rule, message=d.message)
    if diags:
        return 1
    out.line(f"valid: {len(src.lp.procs)} procedures", kind="valid", procs=len(src.lp.procs))
    return 0


def cmd_simplify(args, out: Report) -> int:
    out.block("lp", print_lp(Source(args).simplified()))
    return 0


def _loc(proc: str, path: str, index: int) -> str:
    return f"{proc}@{path}.{index}" if path else f"{proc}@{index}"


def _env_text(env) -> str:
    if env is None:
        return "unreachable"
    return ", ".join(f"{v} in {env[v]}" for v in sorted(env)) or "(no variables)"


def _parse_assumptions(items: list[str]) -> dict[str, Interval]:
    env = {}
    for item in items:
        name, sep, rng = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"bad --assume {item!r}; expected VAR=LO..HI")
        try:
            env[name.strip()] = Interval.parse(rng)
        except ValueError as e:
            raise UsageError(str(e)) from None
    return env


def cmd_analyze(args, out: Report) -> int:
    if not (args.neededness or args.intervals):
        raise UsageError("analyze needs --neededness and/or --intervals")
    src = Source(args)
    prog = src.simplified() if args.simplify else src.checked()
    status = 0
    if args.neededness:
        deps = needed_deps(prog)
        for name in prog.procs:
            out.line(f"{name}: {deps[name]}", kind="neededness", proc=name,
                     implications=sorted(map(list, deps[name].implications)))
    if args.intervals:
        entry = args.entry or next((p.name for p in prog if p.public), None)
        if entry not in prog:
            raise UsageError(f"unknown entry procedure {entry!r}")
        assumed = _parse_assumptions(args.assume)
        unknown = set(assumed) - set(prog[entry].ins)
        if unknown:
            raise UsageError(f"{entry} has no input named {', '.join(sorted(unknown))}")
        results = analyze_intervals(prog, entry, {v: assumed.get(v, TOP) for v in prog[entry].ins})
        for name, s in results.summaries.items():
            out.line(f"{name} entry: {_env_text(s.ins)}", kind="summary", proc=name, side="entry",
                     env=_env_json(s.ins))
            out.line(f"{name} exit: {_env_text(s.outs)}", kind="summary", proc=name, side="exit",
                     env=_env_json(s.outs))
        for p in prog:
            for (path, index), g in iter_goals(p.body):
                key = (p.name, path, index)
                if key not in results.envs:
                    continue
                env = results.envs[key]
                out.line(f"{_loc(*key)} before {format_goal(g)}: {_env_text(env)}", kind="env",
                         proc=p.name, path=path, index=index, goal=format_goal(g), env=_env_json(env))
        for key in sorted(results.overflow):
            out.line(f"{_loc(*key)} overflow: possible", kind="overflow", proc=key[0], path=key[1], index=key[2])
        goals = {(p.name, path, i): g for p in prog for (path, i), g in iter_goals(p.body)}
        for key, verdict in check_div_safety(prog, results):
            g = goals[key]
            out.line(f"{_loc(*key)} {g.op}: {verdict}", kind="safety", proc=key[0], path=key[1],
                     index=key[2], op=g.op, verdict=verdict)
            if verdict != "safe" and args.strict:
                status = 1
    return status


def _env_json(env):
    if env is None:
        return None
    return {v: [_bound_json(i.lo), _bound_json(i.hi)] for v, i in sorted(env.items())}


def _bound_json(b):
    return b if isinstance(b, int) else ("inf" if b > 0 else "-inf")


def cmd_lower(args, out: Report) -> int:
    src = Source(args)
    prog = src.simplified() if src.tac is not None else src.checked()
    out.block("asm", print_asm(lower(prog)))
    return 0


def _parse_args(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(a) for a in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --args {text!r}; expected comma-separated integers") from None


def run_stage(src: Source, stage: str, entry: str, values: list[int], budget: int | None) -> list:
    """Outputs of ``entry`` at one pipeline stage.

    A translated entry still carrying the state token gets a dummy token,
    and for three-address code input only the return value is reported.
    """
    if stage == "tac":
        if src.tac is None:
            raise UsageError("stage tac needs three-address code input")
        funcs = {f.name: f for f in src.tac.functions}
        if entry not in funcs:
            raise UsageError(f"unknown function {entry!r}")
        if len(values) != len(funcs[entry].params):
            raise UsageError(f"{entry} expects {len(funcs[entry].params)} arguments, got {len(values)}")
        return [interp_tac(src.tac, entry, values, step_budget=budget)]
    if stage == "lp":
        prog = src.checked()
    else:
        prog = src.simplified()
    if entry not in prog:
        raise UsageError(f"unknown procedure {entry!r}")
    ins = list(values)
    if src.tac is not None and len(prog[entry].ins) == len(values) + 1:
        ins.append(STATE_TOKEN)
    if len(ins) != len(prog[entry].ins):
        raise UsageError(f"{entry} expects {len(prog[entry].ins)} arguments, got {len(values)}")
    if stage == "asm":
        outs = execute_asm(lower(prog), entry, ins, step_budget=budget).outputs
    else:
        outs = interp_lp(prog, entry, ins, step_budget=budget)
    return outs[:1] if src.tac is not None else outs


def _step_budget(args) -> int | None:
    if args.step_budget is not None:
        return args.step_budget
    env = os.environ.get("LPFORM_STEP_BUDGET", "").strip()
    if not env:
        return None
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"LPFORM_STEP_BUDGET must be an integer, got {env!r}") from None


def cmd_run(args, out: Report) -> int:
    src = Source(args)
    stage = args.stage or ("tac" if src.tac is not None else "lp")
    values = _parse_args(args.args)
    try:
        outs = run_stage(src, stage, args.entry, values, _step_budget(args))
    except Fault as e:
        print(f"fault: {e}", file=sys.stderr)
        if out.as_json:
            out.line("", kind="fault", fault=e.kind, stage=stage)
        return 1
    out.line(" ".join(str(v) for v in outs), kind="result", stage=stage, entry=args.entry, outputs=outs)
    return 0


def cmd_pipeline(args, out: Report) -> int:
    src = Source(args)

    def section(name: str, text: str):
        if out.as_json:
            out.block(name, text)
        else:
            print(f"== {name} ==")
            sys.stdout.write(text if text.endswith("\n") or not text else text + "\n")

    if src.tac is not None:
        section("tac", print_tac(src.tac))
    section("lp", print_lp(src.lp))
    diags = validate_lp(src.lp)
    section("validate", "\n".join(map(str, diags)) if diags else "valid\n")
    if diags:
        return 1
    deps = needed_deps(src.lp)
    section("neededness", "".join(f"{name}: {deps[name]}\n" for name in src.lp.procs))
    simple = src.simplified()
    section("lp-simplified", print_lp(simple))
    section("asm", print_asm(lower(simple)))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="input file, or - for standard input")
    common.add_argument("--json", action="store_true", help="one JSON object per report line")
    common.add_argument("--input-format", choices=("auto", "tac", "lp"), default="auto")

    inline = argparse.ArgumentParser(add_help=False)
    inline.add_argument("--max-rounds", type=int, help="simplification rounds (default 10)")
    inline.add_argument("--max-inline-goals", type=int, help="inline procedures with at most this many goals")

    parser = argparse.ArgumentParser(prog="lpform", description="LP-form compiler middle-end.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("translate", parents=[common], help="three-address code to LP form")
    sub.add_parser("validate", parents=[common], help="check LP-form well-formedness")
    sub.add_parser("simplify", parents=[common, inline], help="inline and prune")

    p = sub.add_parser("analyze", parents=[common, inline], help="neededness or interval analysis")
    p.add_argument("--neededness", action="store_true")
    p.add_argument("--intervals", action="store_true")
    p.add_argument("--entry", help="entry procedure for interval analysis")
    p.add_argument("--assume", action="append", default=[], metavar="VAR=LO..HI",
                   help="entry input range, e.g. x=-inf..inf")
    p.add_argument("--simplify", action="store_true", help="simplify before analysing")
    p.add_argument("--strict", action="store_true", help="exit 1 unless every division is safe")

    sub.add_parser("lower", parents=[common, inline], help="emit pseudo-assembly")

    p = sub.add_parser("run", parents=[common, inline], help="execute at a pipeline stage")
    p.add_argument("--entry", required=True)
    p.add_argument("--args", default="", help="comma-separated integers")
    p.add_argument("--stage", choices=STAGES)
    p.add_argument("--step-budget", type=int, help="overrides LPFORM_STEP_BUDGET")

    sub.add_parser("pipeline", parents=[common, inline], help="dump every stage")
    return parser


COMMANDS = {
    "translate": cmd_translate,
    "validate": cmd_validate,
    "simplify": cmd_simplify,
    "analyze": cmd_analyze,
    "lower": cmd_lower,
    "run": cmd_run,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Report(args.json)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"lpform: error: {e}", file=sys.stderr)
        return 2
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
