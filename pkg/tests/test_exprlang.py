import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guided_dynamics.errors import DomainError, ExprSyntaxError
from guided_dynamics.exprlang import (Add, Call, Div, Mul, Neg, Num, Pow,
                                      Sub, Var, differentiate, parse,
                                      to_source)

GOLDEN_TREES = {
    "(t+1)/2": "Div(Add(Var('t'), Num(1.0)), Num(2.0))",
    "sin(t)^2": "Pow(Call('sin', Var('t')), Num(2.0))",
    "t^2^3": "Pow(Var('t'), Pow(Num(2.0), Num(3.0)))",
    "-t^2": "Neg(Pow(Var('t'), Num(2.0)))",
    "2*t - t/3": "Sub(Mul(Num(2.0), Var('t')), Div(Var('t'), Num(3.0)))",
    "tanh(abs(t))": "Call('tanh', Call('abs', Var('t')))",
    "pi*e": "Mul(Const('pi'), Const('e'))",
    "1e-3 + t": "Add(Num(0.001), Var('t'))",
}


def test_golden_parse_trees_stable():
    for source, tree in GOLDEN_TREES.items():
        assert repr(parse(source)) == tree


def test_parse_examples():
    assert repr(parse("(t+1)/2")) == "Div(Add(Var('t'), Num(1.0)), Num(2.0))"
    assert repr(parse("sin(t)^2")) == "Pow(Call('sin', Var('t')), Num(2.0))"
    with pytest.raises(ExprSyntaxError) as exc:
        parse("2*+3")
    assert exc.value.offset == 2
    assert "NUMBER" in exc.value.expected


def test_parse_error_reports_expected_tokens():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("sin(t")
    assert ")" in exc.value.expected
    with pytest.raises(ExprSyntaxError) as exc:
        parse("frob(t)")
    assert "sin" in exc.value.expected
    with pytest.raises(ExprSyntaxError):
        parse("x + 1")  # unknown identifier under default variable "t"


def test_precedence_and_associativity():
    assert parse("2+3*t")(1.0) == 5.0
    assert parse("-2^2")(0.0) == -4.0
    assert parse("(-2)^2")(0.0) == 4.0
    assert parse("2^3^2")(0.0) == 512.0  # right-associative
    assert parse("2^-1")(0.0) == 0.5
    assert parse("--t")(3.0) == 3.0


def test_eval_examples():
    assert parse("(t+1)/2")(0.0) == 0.5
    assert abs(parse("sin(t)^2 + cos(t)^2")(0.7) - 1.0) < 1e-15
    with pytest.raises(DomainError):
        parse("log(t)")(-1.0)
    with pytest.raises(DomainError):
        parse("sqrt(t)")(-0.5)
    with pytest.raises(DomainError):
        parse("1/t")(0.0)


def test_domain_error_carries_subexpression():
    expr = parse("1 + log(t)")
    with pytest.raises(DomainError) as exc:
        expr(-2.0)
    assert isinstance(exc.value.subexpression, Call)
    assert exc.value.subexpression.func == "log"


def test_eval_vectorized_matches_scalar():
    expr = parse("sin(t)^2 + exp(t)/3 - tanh(t)")
    xs = np.linspace(-2, 2, 17)
    vec = expr(xs)
    assert vec.shape == xs.shape
    for x, v in zip(xs, vec):
        assert expr(float(x)) == v


def test_eval_deterministic():
    expr = parse("sin(t)*exp(t) - t^3/7")
    vals = {expr(0.8125) for _ in range(50)}
    assert len(vals) == 1


def test_differentiate_examples():
    d = differentiate(parse("(t+1)/2"))
    assert d == Num(0.5)
    d2 = differentiate(parse("sin(t)^2"))
    assert d2 == Mul(Mul(Num(2.0), Call("sin", Var("t"))),
                     Call("cos", Var("t")))
    assert differentiate(parse("t^3"))(2.0) == 12.0


def test_differentiate_abs_is_sign():
    d = differentiate(parse("abs(t)"))
    assert d == Call("sign", Var("t"))
    assert d(2.0) == 1.0
    assert d(-3.0) == -1.0
    assert d(0.0) == 0.0  # fixed convention
    assert differentiate(d) == Num(0.0)


def test_differentiate_function_table():
    cases = {
        "tan(t)": lambda t: 1.0 / math.cos(t) ** 2,
        "exp(2*t)": lambda t: 2.0 * math.exp(2 * t),
        "log(1 + t^2)": lambda t: 2 * t / (1 + t * t),
        "sqrt(1 + t^2)": lambda t: t / math.sqrt(1 + t * t),
        "tanh(t)": lambda t: 1.0 - math.tanh(t) ** 2,
        "t^t": lambda t: t ** t * (math.log(t) + 1.0),
        "2^t": lambda t: 2.0 ** t * math.log(2.0),
    }
    for src, want in cases.items():
        d = differentiate(parse(src))
        for x in (0.3, 0.9, 1.7):
            assert d(x) == pytest.approx(want(x), rel=1e-12)


ROUNDTRIP_CORPUS = [
    "(t+1)/2", "sin(t)^2", "t^3 - 2*t + 1", "-t^2 + 4/(1+t^2)",
    "exp(-t^2)*cos(3*t)", "t^2^t", "1 - 2 - 3", "2/(3/(4+t))",
    "tanh(abs(t)) + sign(t)", "pi + e*t", "sqrt(1+t^2)", "--t - -t",
]


def test_print_parse_roundtrip_exact_tree():
    for source in ROUNDTRIP_CORPUS:
        tree = parse(source)
        again = parse(to_source(tree))
        assert again == tree


def test_roundtrip_evaluates_identically():
    rng = np.random.default_rng(0)
    xs = rng.uniform(-2.0, 2.0, 100)
    for source in ROUNDTRIP_CORPUS:
        tree = parse(source)
        again = parse(to_source(tree))
        for x in xs:
            try:
                v1 = tree(float(x))
            except DomainError:
                continue
            assert again(float(x)) == v1


def test_derivative_of_derivative_roundtrips():
    for source in ROUNDTRIP_CORPUS:
        d = differentiate(parse(source))
        assert parse(to_source(d)) == d


@st.composite
def polynomials(draw):
    degree = draw(st.integers(min_value=0, max_value=5))
    coeffs = [draw(st.floats(min_value=-1.0, max_value=1.0)) for _ in
              range(degree + 1)]
    return np.polynomial.Polynomial(coeffs)


@given(polynomials(), st.floats(min_value=-2.0, max_value=2.0))
@settings(max_examples=200, deadline=None)
def test_polynomial_derivative_matches_central_difference(poly, x):
    source = " + ".join(f"({float(c)!r})*t^{k}"
                        for k, c in enumerate(poly.coef))
    expr = parse(source)
    d = differentiate(expr)
    h = 1e-6
    fd = (expr(x + h) - expr(x - h)) / (2 * h)
    dv = d(x)
    assert abs(dv - fd) < 1e-5 * (1.0 + abs(dv))
