import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsmc.expr import (
    BinOp, Call, Cond, Const, EvalContext, ExprArityError, ExprDomainError, ExprError, ExprNameError,
    ExprSyntaxError, Neg, Num, Piecewise, Var, compile_expr, evaluate, parse, pretty,
)

EX2_DIST = "pw(t<=6, 0.5*sin(pi/2*t), t<=9, sin(pi*t), cos(pi*t)-1)"


def ev(src, t=0.0, x=(), order=None):
    return evaluate(parse(src, len(x) if order is None else order), EvalContext(t, x))


def test_parse_pendulum_disturbance():
    e = parse("0.5*sin(t)", 2)
    assert e == BinOp("*", Num(0.5), Call("sin", (Var("t"),)))
    for t in (0.0, 0.3, 2.0, 17.0):
        assert evaluate(e, EvalContext(t, (0.0, 0.0))) == 0.5 * math.sin(t)


def test_parse_example2_drift():
    e = parse("x3*sin(2*x2)+x1*cos(x4)", 4)
    x = (0.3, -1.2, 0.7, 2.5)
    assert evaluate(e, EvalContext(0.0, x)) == pytest.approx(
        x[2] * math.sin(2 * x[1]) + x[0] * math.cos(x[3]), rel=1e-15
    )


def test_variable_out_of_range():
    with pytest.raises(ExprNameError, match="x5"):
        parse("x5", 4)
    with pytest.raises(ExprNameError):
        parse("x1 + t", 0)


@pytest.mark.parametrize("src, exc", [
    ("foo + 1", ExprNameError),
    ("sin(1, 2)", ExprArityError),
    ("min(1)", ExprArityError),
    ("pw(t < 1, 2)", ExprArityError),
    ("pw(1, 2, 3)", ExprSyntaxError),
    ("pw(t < 1, t > 2, 3)", ExprSyntaxError),
    ("sin(t < 1)", ExprSyntaxError),
    ("t < 1", ExprSyntaxError),
    ("sin", ExprSyntaxError),
    ("t(2)", ExprNameError),
    ("(1 + 2", ExprSyntaxError),
    ("1 + 2)", ExprSyntaxError),
    ("3 $ 4", ExprSyntaxError),
    ("", ExprSyntaxError),
    ("   ", ExprSyntaxError),
])
def test_parse_errors(src, exc):
    with pytest.raises(exc):
        parse(src, 2)


def test_syntax_error_reports_line_and_column():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1 +\n  * 2", 1)
    assert (info.value.line, info.value.column) == (2, 3)
    with pytest.raises(ExprNameError) as info:
        parse("sin(t) + bogus", 1)
    assert (info.value.line, info.value.column) == (1, 10)


def test_example2_disturbance_branches():
    e = parse(EX2_DIST, 0)
    assert evaluate(e, EvalContext(7.5)) == pytest.approx(-1.0, abs=1e-12)
    assert evaluate(e, EvalContext(0.0)) == 0.0
    assert evaluate(e, EvalContext(3.0)) == 0.5 * math.sin(math.pi / 2 * 3.0)
    assert evaluate(e, EvalContext(10.0)) == pytest.approx(0.0, abs=1e-12)


def test_piecewise_first_match_wins_at_breakpoints():
    e = parse(EX2_DIST, 0)
    assert evaluate(e, EvalContext(6.0)) == 0.5 * math.sin(math.pi / 2 * 6.0)
    # at t=9 the middle branch (sin 9pi ~ 0) wins over the last one (cos 9pi - 1 = -2)
    assert evaluate(e, EvalContext(9.0)) == math.sin(math.pi * 9.0)
    assert evaluate(e, EvalContext(9.0 + 1e-9)) == pytest.approx(-2.0, abs=1e-9)


@pytest.mark.parametrize("src, expected", [
    ("2^3^2", 512.0),
    ("(2^3)^2", 64.0),
    ("1+2*3", 7.0),
    ("(1+2)*3", 9.0),
    ("8/4/2", 1.0),
    ("8-4-2", 2.0),
    ("-2^2", 4.0),  # unary minus binds tighter than ^
    ("2^-1", 0.5),
    ("--3", 3.0),
    ("min(3, -1) + max(2, 5)", 4.0),
    ("abs(-2.5) + sign(-3) + sign(0)", 1.5),
    ("sqrt(16) + ln(exp(2))", 6.0),
    (".5e1 + 1E-1", 5.1),
    ("pi", math.pi),
])
def test_eval_examples(src, expected):
    assert ev(src, t=0.0) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("src, t, x, fragment", [
    ("ln(-1)", 0.0, (), "ln((-1))"),
    ("ln(t)", 0.0, (), "ln(t)"),
    ("sqrt(x1)", 0.0, (-4.0,), "sqrt(x1)"),
    ("1/(t-1)", 1.0, (), "(1 / (t - 1))"),
    ("(-8)^(1/3)", 0.0, (), "((-8) ^ (1 / 3))"),
    ("exp(1000)", 0.0, (), "exp(1000)"),
])
def test_domain_errors_name_the_subexpression(src, t, x, fragment):
    with pytest.raises(ExprDomainError) as info:
        ev(src, t, x)
    assert info.value.subexpr == fragment


def test_context_dimension_checked():
    with pytest.raises(ExprError):
        evaluate(parse("x3", 3), EvalContext(0.0, (1.0, 2.0)))


def test_pretty_examples():
    assert pretty(parse("1+2*3")) == "(1 + (2 * 3))"
    assert pretty(parse("-x1", 1)) == "(-x1)"
    assert pretty(parse(EX2_DIST)) == (
        "pw(t <= 6, (0.5 * sin(((pi / 2) * t))), t <= 9, sin((pi * t)), (cos((pi * t)) - 1))"
    )
    assert pretty(parse("1e-5 + 2.5")) == "(1e-05 + 2.5)"


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_precedence_mul_before_add(a, b, c):
    assert ev("x1+x2*x3", x=(a, b, c)) == a + (b * c)
    assert ev("x1*x2+x3", x=(a, b, c)) == (a * b) + c
    assert ev("x1-x2-x3", x=(a, b, c)) == (a - b) - c


def test_evaluation_is_pure():
    e = parse("x1*sin(2*x2) + pw(t > 1, exp(-t), t)", 2)
    fn = compile_expr(e)
    first = fn(1.7, (0.3, 0.9))
    assert all(fn(1.7, (0.3, 0.9)) == first for _ in range(100))
    assert evaluate(e, EvalContext(1.7, (0.3, 0.9))) == first


# ---------------------------------------------------------------- random ASTs

LEAVES = st.one_of(
    st.integers(0, 1000).map(lambda v: Num(float(v))),
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.just(Const("pi")),
    st.just(Var("t", 0)),
    st.sampled_from([Var("x1", 1), Var("x2", 2)]),
)


def asts(depth):
    if depth == 0:
        return LEAVES
    sub = asts(depth - 1)
    cond = st.builds(Cond, st.sampled_from(["<", "<=", ">", ">="]), sub, sub)
    return st.one_of(
        LEAVES,
        st.builds(Neg, sub),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "^"]), sub, sub),
        st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(["sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "sign"]), sub),
        st.builds(lambda f, a, b: Call(f, (a, b)), st.sampled_from(["min", "max"]), sub, sub),
        st.builds(lambda bs, d: Piecewise(tuple(bs), d), st.lists(st.tuples(cond, sub), min_size=1, max_size=2), sub),
    )


def _outcome(e, t, x):
    try:
        return repr(evaluate(e, EvalContext(t, x)))
    except ExprDomainError:
        return "domain error"


@settings(max_examples=1000, deadline=None)
@given(asts(8), st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 5))
def test_random_ast_round_trip(e, x1, x2, t):
    text = pretty(e)
    again = parse(text, 2)
    assert again == e
    assert pretty(again) == text
    assert _outcome(again, t, (x1, x2)) == _outcome(e, t, (x1, x2))
