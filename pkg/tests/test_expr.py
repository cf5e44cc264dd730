from __future__ import annotations

import math
from fractions import Fraction

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from cdiff.expr import (
    Add,
    Const,
    EqConfig,
    ExprSyntaxError,
    Flavor,
    FlavorError,
    Mul,
    Neg,
    NonFiniteError,
    Pow,
    Prim,
    Semiring,
    Var,
    VariableRangeError,
    eval_batch,
    eval_expr,
    expr_equal,
    format_expr,
    parse_expr,
    partial_derivative,
    poly_normal_form,
)
from cdiff.poly import PolyNF


def central_difference(e, point, i, h=1e-5):
    up = list(point)
    down = list(point)
    up[i - 1] += h
    down[i - 1] -= h
    return (eval_expr(e, up) - eval_expr(e, down)) / (2 * h)


# parsing ---------------------------------------------------------------------


def test_parse_grammar_reading():
    assert parse_expr("x1 * x2 + 3", 2) == Add(Mul(Var(1), Var(2)), Const(3))
    assert parse_expr("sin(x1)^2", 1, Flavor.FLOAT) == Pow(Prim("sin", Var(1)), 2)


def test_parse_numbers_follow_flavor():
    assert parse_expr("1/2", 0) == Const(Fraction(1, 2))
    assert parse_expr("0.25", 0) == Const(Fraction(1, 4))
    assert parse_expr("0.25", 0, Flavor.FLOAT) == Const(0.25)


def test_parse_precedence_and_subtraction():
    e = parse_expr("x1 - x2*x3^2", 3)
    assert eval_expr(e, [1, 2, 3]) == 1 - 2 * 9
    assert eval_expr(parse_expr("-x1 + 2", 1), [5]) == -3


def test_variable_out_of_range():
    with pytest.raises(VariableRangeError):
        parse_expr("x3", 2)


@pytest.mark.parametrize("text", ["x1 +", "(x1", "x1 ^ -1", "x0", "2 ** x1", "foo(x1)", "1/0", ""])
def test_syntax_errors(text):
    with pytest.raises((ExprSyntaxError, VariableRangeError)):
        parse_expr(text, 2)


def test_syntax_error_reports_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("x1 + * x2", 2)
    assert info.value.pos == 5


def test_functions_need_float_flavor():
    with pytest.raises(FlavorError):
        parse_expr("sin(x1)", 1, Flavor.EXACT)


@pytest.mark.parametrize("text", ["x1 - x2", "-x1", "exp(x1)", "1/2*x1", "0.5"])
def test_nat_semiring_forbids(text):
    flavor = Flavor.FLOAT if "exp" in text else Flavor.EXACT
    with pytest.raises(FlavorError):
        parse_expr(text, 2, flavor, Semiring.NAT)


def test_nat_semiring_accepts_polynomials():
    e = parse_expr("2*x1^2 + x2 + 3", 2, semiring=Semiring.NAT)
    assert eval_expr(e, [1, 1]) == 6


# printing ----------------------------------------------------------------------


@pytest.mark.parametrize("text", [
    "x1*x2 + 3", "x1 - x2", "(x1 + x2)^2", "1/2*x1", "-x1*x2", "x1 - (x2 - x3)", "x1^3*x2",
])
def test_print_parse_roundtrip_exact(text):
    e = parse_expr(text, 3)
    assert expr_equal(parse_expr(format_expr(e), 3), e)


@pytest.mark.parametrize("text", ["sin(x1)^2 + cos(x2)", "exp(sin(x1 - x2))*0.5", "-cos(x1)"])
def test_print_parse_roundtrip_float(text):
    e = parse_expr(text, 2, Flavor.FLOAT)
    assert parse_expr(format_expr(e), 2, Flavor.FLOAT) == e


# evaluation -------------------------------------------------------------------


def test_eval_examples():
    assert eval_expr(parse_expr("x1*x2", 2), [3, 5]) == 15
    assert eval_expr(Const(7), [1, 2, 3]) == 7
    assert eval_expr(parse_expr("sin(x1)", 1, Flavor.FLOAT), [0.0]) == 0.0


def test_eval_is_exact_on_rationals():
    assert eval_expr(parse_expr("x1^2 + 1/3", 1), [Fraction(1, 2)]) == Fraction(7, 12)


def test_eval_overflow_is_reported():
    with pytest.raises(NonFiniteError):
        eval_expr(parse_expr("exp(exp(x1))", 1, Flavor.FLOAT), [10.0])


def test_eval_batch_matches_pointwise():
    e = parse_expr("sin(x1)*x2 + exp(x2)^2", 2, Flavor.FLOAT)
    X = np.array([[0.1, -1.2, 2.0], [0.5, 0.3, -0.7]])
    got = eval_batch(e, X)
    want = [eval_expr(e, list(X[:, s])) for s in range(3)]
    assert np.allclose(got, want, rtol=1e-14, atol=0)


# differentiation --------------------------------------------------------------


def test_partial_examples():
    assert expr_equal(partial_derivative(parse_expr("x1*x2", 2), 1), Var(2))
    assert expr_equal(partial_derivative(parse_expr("x1^2", 1), 1), parse_expr("2*x1", 1))
    d = partial_derivative(parse_expr("sin(x1)", 1, Flavor.FLOAT), 1)
    assert expr_equal(d, Prim("cos", Var(1)))


def test_partial_of_square_against_finite_differences():
    e = parse_expr("x1^2", 1, Flavor.FLOAT)
    d = partial_derivative(e, 1)
    rng = np.random.default_rng(5)
    for a in rng.uniform(-2, 2, size=5):
        fd = central_difference(e, [a], 1)
        assert abs(eval_expr(d, [a]) - fd) <= 1e-6 * max(abs(fd), 1.0)


def test_partial_of_function_needs_float():
    with pytest.raises(FlavorError):
        partial_derivative(Prim("sin", Var(1)), 1, Flavor.EXACT)


@pytest.mark.parametrize("text", [
    "sin(x1)*cos(x2)", "exp(sin(x1))*x2^2", "cos(x1*x2 + 1)^3", "exp(cos(x2))*sin(x1)*x1 - x2",
])
def test_float_partials_against_finite_differences(text):
    e = parse_expr(text, 2, Flavor.FLOAT)
    rng = np.random.default_rng(11)
    for _ in range(5):
        pt = list(rng.uniform(-2, 2, size=2))
        for i in (1, 2):
            fd = central_difference(e, pt, i)
            sym = eval_expr(partial_derivative(e, i), pt)
            assert abs(sym - fd) <= 1e-6 * max(abs(sym), 1.0)


# normal forms and equality -------------------------------------------------------


def test_normal_form_examples():
    assert poly_normal_form(parse_expr("(x1+x2)^2", 2)).terms == {((1, 2),): 1, ((1, 1), (2, 1)): 2, ((2, 2),): 1}
    assert poly_normal_form(Add(Var(1), Neg(Var(1)))).terms == {}
    assert poly_normal_form(Mul(Const(0), Var(1))).terms == {}


def test_equality_examples():
    assert expr_equal(parse_expr("x1+x2", 2), parse_expr("x2+x1", 2))
    assert expr_equal(parse_expr("sin(x1)^2 + cos(x1)^2", 1, Flavor.FLOAT), Const(1.0))
    assert not expr_equal(Var(1), parse_expr("x1^2", 1))


def test_float_equality_respects_tolerance():
    a = parse_expr("x1", 1, Flavor.FLOAT)
    b = parse_expr("x1 + 0.000001", 1, Flavor.FLOAT)
    assert not expr_equal(a, b)
    assert expr_equal(a, b, EqConfig(tol_abs=1e-5))


def test_mixed_flavor_comparison_is_rejected():
    with pytest.raises(FlavorError):
        expr_equal(Const(Fraction(1, 2)), Const(0.5))


def test_non_finite_samples_are_unequal():
    e = parse_expr("exp(exp(exp(x1)))", 1, Flavor.FLOAT)
    assert not expr_equal(e, e, EqConfig(box=(3.0, 4.0)))


# property checks ----------------------------------------------------------------

small_exprs = st.recursive(
    st.one_of(st.integers(-3, 3).map(Const), st.integers(1, 3).map(Var)),
    lambda kids: st.one_of(
        st.tuples(kids, kids).map(lambda t: Add(*t)),
        st.tuples(kids, kids).map(lambda t: Mul(*t)),
        kids.map(Neg),
        st.tuples(kids, st.integers(0, 3)).map(lambda t: Pow(*t)),
    ),
    max_leaves=8,
)
int_points = st.lists(st.integers(-4, 4), min_size=3, max_size=3)


@settings(max_examples=80, deadline=None)
@given(small_exprs, int_points)
def test_normal_form_preserves_values(e, pt):
    assert poly_normal_form(e).evaluate(pt) == eval_expr(e, pt)


@settings(max_examples=80, deadline=None)
@given(small_exprs)
def test_format_then_parse_is_identity_up_to_equality(e):
    assert expr_equal(parse_expr(format_expr(e), 3), e)


@settings(max_examples=60, deadline=None)
@given(small_exprs, st.integers(1, 3))
def test_tree_partial_agrees_with_polynomial_partial(e, i):
    assert poly_normal_form(partial_derivative(e, i)) == poly_normal_form(e).partial(i)


def test_constants_survive_formatting():
    assert format_expr(Const(Fraction(-3, 4))) in ("-3/4", "(-3/4)")
    assert math.isclose(eval_expr(parse_expr(format_expr(Const(0.1)), 0, Flavor.FLOAT), [], Flavor.FLOAT), 0.1)
    assert isinstance(PolyNF.const(2).constant_term(), (int, Fraction))
