import pytest
from hypothesis import given, settings

from lpform.lpir import Call, iter_goals, Guard, Prim, count_goals, flatten, interp_lp, parse_lp, print_lp, validate_lp
from lpform.simplify import InlinePolicy, copy_propagate, inline, simplify_pipeline, simplify_round
from lpform.translate import translate_program

from support import (
    TAC_FIXTURES,
    Stages,
    agree,
    canonical,
    load_lp,
    load_tac,
    lp_procs,
    outcome,
    single,
    tac_programs,
    vectors,
)


def test_gcd_simplifies_to_two_clauses():
    simple = simplify_pipeline(translate_program(load_tac("gcd")))
    assert list(simple.procs) == ["gcd"]
    c1, c2 = flatten(simple["gcd"])
    assert c1.goals[0] == Guard("!=", "b", 0) and c2.goals[0] == Guard("==", "b", 0)
    mod, rec = c1.goals[1:]
    assert mod.op == "mod" and mod.ins == ("a", "b")
    assert rec == Call("gcd", ("b", mod.outs[0]), ("ret",))
    assert c2.goals[1:] == (Prim("copy", ("a",), ("ret",)),)
    assert canonical(simple) == canonical(load_lp("gcd_simplified"))


def test_branching_keeps_shared_tail():
    simple = simplify_pipeline(translate_program(load_tac("branching")))
    assert len(simple.procs) == 2
    clauses = flatten(simple["p"])
    assert [c.goals[0] for c in clauses] == [Guard("<", "x", 0), Guard(">=", "x", 0)]
    assert all(isinstance(c.goals[-1], Call) for c in clauses)
    (tail,) = flatten(simple[clauses[0].goals[-1].callee])
    assert [g.op for g in tail.goals] == ["sub", "mod"]
    # equal to the hand-written program once its copies are propagated
    assert canonical(simple) == canonical(copy_propagate(load_lp("branching")))


def test_simplified_program_is_a_fixpoint():
    gcd = load_lp("gcd_simplified")
    assert simplify_pipeline(gcd) == gcd
    for name in TAC_FIXTURES:
        simple = Stages(load_tac(name)).simple
        assert simplify_pipeline(simple) == simple, name


def test_identity_call_becomes_copy():
    prog = parse_lp(":- public f.\nf(a; r) <- id(a; t) & add(t, 1; r).\n\nid(x; y) <- y = x.\n")
    out = inline(prog)
    assert list(out.procs) == ["f"]
    assert flatten(out["f"])[0].goals == (Prim("copy", ("a",), ("t",)), Prim("add", ("t", 1), ("r",)))


def test_self_recursion_not_inlined():
    gcd = load_lp("gcd_simplified")
    assert inline(gcd, InlinePolicy(max_body_goals=100)) == gcd


def test_loop_not_unrolled_into_caller():
    prog = load_lp("needs")
    out = simplify_pipeline(prog, InlinePolicy(max_body_goals=10))
    assert "loop" in out.procs
    assert [g.callee for c in flatten(out["count"]) for g in c.goals if isinstance(g, Call)] == ["loop"]


def test_copy_propagation_keeps_outputs_defined():
    prog = parse_lp(":- public f.\nf(a; r, s) <- t = a & r = t & s = t.\n")
    out = copy_propagate(prog)
    assert validate_lp(out) == []
    assert interp_lp(out, "f", [4]) == [4, 4]


def test_inlined_locals_are_renamed():
    prog = parse_lp(
        ":- public f.\nf(a; r) <- add(a, 1; t) & g(t; u) & add(t, u; r).\n\n"
        "g(x; y) <- mul(x, 2; t) & add(t, 1; y).\n"
    )
    out = inline(prog)
    assert validate_lp(out) == []
    assert interp_lp(out, "f", [3]) == interp_lp(prog, "f", [3]) == [13]


def test_forked_callee_grafts_at_tail():
    prog = parse_lp(
        ":- public f.\nf(a; r) <- add(a, 1; b) & g(b; r).\n\n"
        "g(x; y) <- x > 0 & y = x.\ng(x; y) <- x <= 0 & negate(x; y).\n"
    )
    out = inline(prog)
    assert list(out.procs) == ["f"] and out["f"].body.fork is not None
    for v in range(-4, 5):
        assert interp_lp(out, "f", [v]) == interp_lp(prog, "f", [v])


def measure(prog):
    """Procedures, then goals, then calls: inlining a one-goal callee only
    trades a call for a primitive."""
    calls = sum(isinstance(g, Call) for p in prog for _, g in iter_goals(p.body))
    return len(prog.procs), sum(count_goals(p.body) for p in prog), calls


@pytest.mark.parametrize("name", TAC_FIXTURES)
def test_every_round_is_valid_and_shrinks(name):
    prog = translate_program(load_tac(name))
    size = measure(prog)
    for _ in range(10):
        new = simplify_round(prog)
        assert validate_lp(new) == []
        if new == prog:
            break
        new_size = measure(new)
        assert new_size < size
        prog, size = new, new_size


@pytest.mark.parametrize("name", TAC_FIXTURES)
def test_simplification_preserves_results(name):
    st = Stages(load_tac(name))
    for f in st.tac.functions:
        for v in vectors(len(f.params), -8, 8, cap=2_000):
            before = outcome(lambda: interp_lp(st.lp, f.name, st._ins(st.lp, f.name, v), step_budget=20_000)[0])
            after = outcome(lambda: interp_lp(st.simple, f.name, st._ins(st.simple, f.name, v), step_budget=20_000)[0])
            assert before == after or before[0] == "fault", (f.name, v)


@pytest.mark.parametrize("goals", [1, 3, 10])
def test_larger_policies_stay_correct(goals):
    for name in TAC_FIXTURES:
        prog = load_tac(name)
        lp = translate_program(prog)
        simple = simplify_pipeline(lp, InlinePolicy(max_body_goals=goals))
        assert validate_lp(simple) == []
        for f in prog.functions:
            for v in vectors(len(f.params), -4, 4, cap=200):
                a = outcome(lambda: interp_lp(lp, f.name, Stages._ins(lp, f.name, v), step_budget=20_000)[0])
                b = outcome(lambda: interp_lp(simple, f.name, Stages._ins(simple, f.name, v), step_budget=20_000)[0])
                assert a == b or a[0] == "fault"


@settings(max_examples=150, deadline=None)
@given(lp_procs(sound=True))
def test_copy_propagation_preserves_results(proc):
    prog = single(proc)
    out = copy_propagate(prog)
    assert validate_lp(out) == []
    for v in vectors(2, -3, 3):
        assert outcome(interp_lp, prog, "f", v) == outcome(interp_lp, out, "f", v)


@settings(max_examples=200, deadline=None)
@given(tac_programs())
def test_random_programs_simplify_soundly(prog):
    st = Stages(prog)
    assert validate_lp(st.simple) == []
    for f in prog.functions:
        for v in vectors(len(f.params), -2, 2):
            assert agree(st.run_all(f.name, v))
