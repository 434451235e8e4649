import pytest
from hypothesis import given

from lamrec.encodings import Y
from lamrec.reduction import (
    FuelExhausted,
    NormalForm,
    RedexInfo,
    contract,
    convertible,
    field_value,
    format_trace_line,
    head_step,
    merge_records,
    normalize,
    reduction_sequence,
    step,
    step_innermost,
    whnf,
    whnf_record,
)
from lamrec.syntax import App, IntLit, Record, alpha_eq, free_vars, parse_term, print_term
from strategies import closed_terms, terms

P = parse_term


def nf(source, fuel=1000):
    r = normalize(P(source), fuel)
    assert isinstance(r, NormalForm)
    return r.term


def test_beta():
    assert nf("(\\x. x x) y") == P("y y")


def test_record_selection():
    assert nf("{a = 1, b = 2}.b") == IntLit(2)


def test_missing_label_is_stuck():
    assert nf("{a = 1}.b") == P("{a = 1}.b")


def test_merge_is_right_biased():
    assert nf("{a = 1, b = 2} ++ {a = 3}") == P("{b = 2, a = 3}")
    assert alpha_eq(nf("{a = 1} ++ {a = 2}"), P("{a = 2}"))


def test_merge_waits_for_left_record():
    t = P("x ++ {a = 1}")
    assert step(t) is None
    assert nf("(\\r. r ++ {a = 1}) {b = 2}") == P("{b = 2, a = 1}")


def test_delta():
    assert nf("1 + 2 + 3") == IntLit(6)
    assert nf("(+) 1") == P("(+) 1")
    assert nf("() + 1") == P("() + 1")


def test_reduces_under_binders_and_in_records():
    assert nf("\\y. (\\x. x) y") == P("\\y. y")
    assert nf("{a = (\\x. x) 1}") == P("{a = 1}")
    assert nf("r ++ {a = (\\x. x) 1}") == P("r ++ {a = 1}")


def test_leftmost_outermost_order():
    t = P("(\\x. \\y. y) ((\\z. z z) (\\z. z z))")
    new, info = step(t)
    assert info == RedexInfo("beta", ())
    assert new == P("\\y. y")


def test_position_reporting():
    _, info = step(P("f ((\\x. x) 1)"))
    assert info.position == (1,)
    _, info = step(P("{a = 1, b = (\\x. x) 2}"))
    assert info.position == ("b",)
    assert str(info) == "beta @ b"


def test_trace_format():
    line = format_trace_line(3, RedexInfo("rsel", (0, 1)), IntLit(4))
    assert line == "step 3 [rsel @ 0.1]: 4"
    lines = []
    normalize(P("(\\x. x + 1) 2"), trace=lambda k, i, t: lines.append(format_trace_line(k, i, t)))
    assert lines == ["step 1 [beta @ root]: 2 + 1", "step 2 [delta @ root]: 3"]


def test_fuel():
    omega = P("(\\x. x x) (\\x. x x)")
    r = normalize(omega, 50)
    assert isinstance(r, FuelExhausted) and r.steps == 50
    with pytest.raises(ValueError):
        normalize(omega, 0)
    r = normalize(P("(\\x. x) 1"), 1)
    assert isinstance(r, NormalForm) and r.steps == 1


def test_whnf_stops_at_records():
    r = whnf_record(P("(\\x. {a = x, b = (\\y. y) 1}) 2"))
    assert r == P("{a = 2, b = (\\y. y) 1}")
    assert whnf_record(P("\\x. x")) is None
    assert isinstance(whnf(App(Y, P("\\s. s")), 30), FuelExhausted)


def test_field_value_observes_fixed_points():
    obj = App(Y, P("\\self. {a = 1, me = self, b = self.a + 1}"))
    assert isinstance(normalize(obj, 200), FuelExhausted)
    assert field_value(obj, "b") == IntLit(2)
    assert field_value(obj, "missing") is None


def test_contract_and_merge_records():
    assert contract(P("x")) is None
    left, right = P("{a = 1, b = 2}"), P("{b = 3, c = 4}")
    assert merge_records(left, right) == P("{a = 1, b = 3, c = 4}")


def test_reduction_sequence():
    seq = reduction_sequence(P("(\\x. x) ((\\y. y) 1)"), 10)
    assert [print_term(t) for t, _ in seq] == ["(\\x. x) ((\\y. y) 1)", "(\\y. y) 1", "1"]
    assert seq[0][1] is None


def test_convertible():
    assert convertible(P("(\\x. x) 1"), P("(\\y. 1) 2"))
    assert convertible(P("1"), P("2")) is False
    assert convertible(P("(\\x. x x) (\\x. x x)"), P("1"), fuel=20) is None


# --- properties ----------------------------------------------------------------


@given(terms)
def test_step_is_deterministic(t):
    assert step(t) == step(t)


@given(terms)
def test_reduction_does_not_add_free_variables(t):
    for u, _ in reduction_sequence(t, 20):
        assert free_vars(u) <= free_vars(t)


@given(closed_terms)
def test_closed_terms_stay_closed(t):
    for u, _ in reduction_sequence(t, 20):
        assert not free_vars(u)


@given(terms)
def test_normal_forms_are_fixed(t):
    r = normalize(t, 200)
    if isinstance(r, NormalForm):
        assert step(r.term) is None
        assert step_innermost(r.term) is None
        assert normalize(r.term, 5).term == r.term


@given(terms)
def test_strategies_agree_on_normal_forms(t):
    a, b = normalize(t, 300), normalize(t, 300, strategy=step_innermost)
    if isinstance(a, NormalForm) and isinstance(b, NormalForm):
        assert alpha_eq(a.term, b.term)


@given(terms)
def test_whnf_result_has_no_head_redex(t):
    r = whnf(t, 200)
    if isinstance(r, NormalForm):
        assert head_step(r.term) is None


@given(closed_terms, closed_terms, closed_terms)
def test_merge_associates_on_record_literals(a, b, c):
    r1, r2, r3 = Record((("a", a),)), Record((("a", b), ("b", a))), Record((("b", c),))
    left = merge_records(merge_records(r1, r2), r3)
    right = merge_records(r1, merge_records(r2, r3))
    assert alpha_eq(left, right)
    assert merge_records(r1, r1) == r1
