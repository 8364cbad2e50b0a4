import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpform.semantics import (
    DIV_BY_ZERO,
    INT_MAX,
    INT_MIN,
    POISON,
    STEP_BUDGET,
    UNASSIGNED,
    Fault,
    StepCounter,
    apply_prim,
    check_result,
    compare,
    default_step_budget,
    trunc_div,
    trunc_mod,
    wrap,
)

words = st.integers(INT_MIN, INT_MAX)


def test_wrap_edges():
    assert wrap(INT_MAX + 1) == INT_MIN
    assert wrap(INT_MIN - 1) == INT_MAX
    assert wrap(-INT_MIN) == INT_MIN
    assert apply_prim("negate", [INT_MIN]) == [INT_MIN]


@pytest.mark.parametrize(
    "a, b, q, r",
    [(7, 2, 3, 1), (-7, 2, -3, -1), (7, -2, -3, 1), (-7, -2, 3, -1), (3, -4, 0, 3)],
)
def test_truncating_division(a, b, q, r):
    assert trunc_div(a, b) == q
    assert trunc_mod(a, b) == r
    assert apply_prim("divmod", [a, b]) == [q, r]


def test_division_by_zero_faults():
    for op in ("div", "mod", "divmod"):
        with pytest.raises(Fault) as e:
            apply_prim(op, [1, 0])
        assert e.value.kind == DIV_BY_ZERO


def test_min_int_over_minus_one_wraps():
    assert apply_prim("div", [INT_MIN, -1]) == [INT_MIN]
    assert apply_prim("mod", [INT_MIN, -1]) == [0]


@given(words, words.filter(lambda b: b != 0))
def test_division_identity(a, b):
    q, r = apply_prim("divmod", [a, b])
    assert wrap(q * b + r) == a
    assert abs(r) < abs(b)
    assert r == 0 or (r < 0) == (a < 0)


def test_poison_passes_copies_but_faults_elsewhere():
    assert apply_prim("undef", []) == [POISON]
    assert apply_prim("copy", [POISON]) == [POISON]
    with pytest.raises(Fault) as e:
        apply_prim("add", [POISON, 1])
    assert e.value.kind == UNASSIGNED
    with pytest.raises(Fault):
        compare("<", POISON, 1)
    with pytest.raises(Fault):
        check_result([1, POISON])
    assert check_result([1, 2]) == [1, 2]


def test_step_counter():
    c = StepCounter(3)
    for _ in range(3):
        c.tick()
    with pytest.raises(Fault) as e:
        c.tick()
    assert e.value.kind == STEP_BUDGET


def test_step_budget_from_environment(monkeypatch):
    monkeypatch.setenv("LPFORM_STEP_BUDGET", "123")
    assert default_step_budget() == 123
    assert StepCounter().budget == 123
    monkeypatch.delenv("LPFORM_STEP_BUDGET")
    assert default_step_budget() == 10_000_000
