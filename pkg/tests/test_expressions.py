import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gktwist.core.errors import ExpressionSyntaxError
from gktwist.services import jets
from gktwist.services.expressions import FUNCTION_NAMES, parse_expression, var

NAMES = ("u", "v")
coords = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def test_evaluates_grammar_operators():
    expr = parse_expression("2*u^3 - v/4 + sin(u*v) + exp(0) + sqrt(4)", NAMES)
    u, v = 1.5, -2.0
    expected = 2 * u**3 - v / 4 + math.sin(u * v) + 1.0 + 2.0
    assert expr(u=u, v=v) == pytest.approx(expected)


def test_unary_minus_binds_looser_than_power():
    assert parse_expression("-u^2", NAMES)(u=3.0, v=0.0) == pytest.approx(-9.0)
    assert parse_expression("(-u)^2", NAMES)(u=3.0, v=0.0) == pytest.approx(9.0)


def test_double_star_is_a_syntax_error():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("u**2", NAMES)
    assert info.value.position in (2, 3)
    assert "u**2" in str(info.value)


def test_unknown_coordinate_is_rejected():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("u + w", NAMES)
    assert "w" in str(info.value)


def test_function_names_are_not_coordinates():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("sin + u", NAMES)


@pytest.mark.parametrize("text", ["tan(u)", "log(v)"])
def test_only_sin_cos_exp_sqrt_are_functions(text):
    assert FUNCTION_NAMES == ("sin", "cos", "exp", "sqrt")
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(text, NAMES)


@given(coords, coords)
def test_symbolic_derivative_matches_jet_gradient(u, v):
    expr = parse_expression("u^2*cos(v) + exp(u - v) / (3 + v^2)", NAMES)
    jet = expr.jet(NAMES, (u, v))
    symbolic = [expr.diff(name)(u=u, v=v) for name in NAMES]
    np.testing.assert_allclose(jets.gradient(jet, 2), symbolic, rtol=1e-10, atol=1e-12)


def test_second_partials_from_jets():
    expr = parse_expression("u^2*v^3", NAMES)
    jet = expr.jet(NAMES, (2.0, 1.0), order=2)
    np.testing.assert_allclose(jets.hessian(jet, 2), [[2.0, 12.0], [12.0, 24.0]])


def test_substitute_composes_expressions():
    expr = parse_expression("u*v", NAMES)
    moved = expr.substitute({"u": parse_expression("u + v^2", NAMES)})
    assert moved(u=1.0, v=2.0) == pytest.approx((1.0 + 4.0) * 2.0)
    assert moved.free_variables() == frozenset(NAMES)


def test_operator_overloads_build_expressions():
    u, v = var("u"), var("v")
    expr = (u + 1) * v - u / 2
    assert expr(u=2.0, v=3.0) == pytest.approx(8.0)
