"""Parser and forward-mode differentiation tests.

Derivatives are checked against a central finite-difference oracle with
step 1e-6; the tolerance 1e-6 * (1 + |derivative|) matches the evaluation
contract.
"""

from __future__ import annotations

import numpy as np
import pytest

from terracost.expr import (
    Binary,
    Call,
    DualValue,
    ExprDomainError,
    ExprSyntaxError,
    Literal,
    Negate,
    Variable,
    parse,
)

# Expressions exercising every operator/function with safe domains on [-2, 2]^2.
SAMPLE_EXPRESSIONS = [
    "cos(5*x)^2*cos(y)^2",
    "1+sin(5*x)*sin(y)",
    "sin(5*x)*sin(y)",
    "0.1",
    "x*y - y/(3+x)",
    "exp(x/4)*log(2.5+y)",
    "sqrt(1+x^2+y^2)",
    "tan(x/3) + abs(y)^3",
    "(2.5+x)^y",
    "-x^2 + 2^-y",
]


def central_diff(expression, x, y, h=1e-6):
    fxp = expression.eval(x + h, y)
    fxm = expression.eval(x - h, y)
    fyp = expression.eval(x, y + h)
    fym = expression.eval(x, y - h)
    return (fxp - fxm) / (2 * h), (fyp - fym) / (2 * h)


# ---------------------------------------------------------------------------
# parsing


def test_parse_builds_expected_tree():
    assert parse("x+y").root == Binary("+", Variable("x"), Variable("y"))


def test_parse_function_product_tree():
    expected = Binary(
        "*",
        Call("sin", Binary("*", Literal(5.0), Variable("x"))),
        Call("sin", Variable("y")),
    )
    assert parse("sin(5*x)*sin(y)").root == expected


def test_unbalanced_parenthesis_reports_position():
    with pytest.raises(ExprSyntaxError) as err:
        parse("sin(")
    assert err.value.position == 4


@pytest.mark.parametrize(
    "text,value",
    [
        ("2^3^2", 512.0),  # right-associative power
        ("-2^2", -4.0),  # power binds tighter than unary minus
        ("2^-2", 0.25),  # exponent re-admits unary minus
        ("1-2-3", -4.0),
        ("8/4/2", 1.0),
        ("2+3*4", 14.0),
        ("(2+3)*4", 20.0),
        ("--2", 2.0),
        ("-x*y", -6.0),  # unary minus binds tighter than *
    ],
)
def test_precedence(text, value):
    assert parse(text).eval(2.0, 3.0) == value


def test_unknown_identifier_rejected():
    with pytest.raises(ExprSyntaxError) as err:
        parse("z+1")
    assert "unknown identifier" in str(err.value)
    assert err.value.position == 0


def test_unknown_function_rejected():
    with pytest.raises(ExprSyntaxError):
        parse("sinh(x)")


def test_arity_mismatch():
    with pytest.raises(ExprSyntaxError) as err:
        parse("sin(x, y)")
    assert "exactly one argument" in str(err.value)


@pytest.mark.parametrize("text", ["", "   ", "x +", "* x", "(x", "x)", "3 4"])
def test_malformed_inputs(text):
    with pytest.raises(ExprSyntaxError):
        parse(text)


# ---------------------------------------------------------------------------
# evaluation


def test_eval_literal_arithmetic():
    assert parse("x+y").eval(1.0, 2.0) == 3.0


def test_eval_sin_at_origin():
    assert parse("1+sin(5*x)*sin(y)").eval(0.0, 0.0) == 1.0


def test_eval_cos_squared_at_origin():
    assert parse("cos(5*x)^2*cos(y)^2").eval(0.0, 0.0) == 1.0


@pytest.mark.parametrize(
    "text,x,y,match",
    [
        ("log(x)", -1.0, 0.0, "log"),
        ("sqrt(x)", -1.0, 0.0, "sqrt"),
        ("1/x", 0.0, 0.0, "division by zero"),
        ("x^0.5", -2.0, 0.0, "non-integer exponent"),
        ("x^(0-1)", 0.0, 0.0, "exponent"),
    ],
)
def test_domain_errors_name_subexpression(text, x, y, match):
    e = parse(text)
    with pytest.raises(ExprDomainError, match=match):
        e.eval(x, y)
    with pytest.raises(ExprDomainError):
        e.eval_dual(x, y)


def test_integer_power_of_negative_base_allowed():
    assert parse("x^3").eval(-2.0, 0.0) == -8.0
    assert parse("x^3").eval_dual(-2.0, 0.0).dx == 12.0


def test_negated_literal_exponent_stays_integer():
    # x^-2 folds the exponent to -2.0, so negative bases remain legal.
    assert parse("x^-2").eval(-2.0, 0.0) == 0.25
    assert parse("x^-2").eval_dual(-2.0, 0.0).dx == pytest.approx(0.25, abs=1e-15)


# ---------------------------------------------------------------------------
# dual evaluation


def test_dual_product_rule():
    assert parse("x*y").eval_dual(2.0, 3.0) == DualValue(6.0, 3.0, 2.0)


def test_dual_vanishes_at_origin():
    assert parse("sin(5*x)*sin(y)").eval_dual(0.0, 0.0) == DualValue(0.0, 0.0, 0.0)


def test_dual_matches_finite_differences_at_point():
    e = parse("sin(5*x)*sin(y)")
    v, dx, dy = e.eval_dual(0.3, 1.0)
    fdx, fdy = central_diff(e, 0.3, 1.0)
    assert v == pytest.approx(e.eval(0.3, 1.0), abs=0.0)
    assert abs(dx - fdx) <= 1e-6 * (1 + abs(dx))
    assert abs(dy - fdy) <= 1e-6 * (1 + abs(dy))


@pytest.mark.parametrize("text", SAMPLE_EXPRESSIONS)
def test_dual_matches_finite_differences_randomized(text):
    e = parse(text)
    rng = np.random.default_rng(hash(text) % 2**32)
    for _ in range(100):
        x, y = rng.uniform(-2.0, 2.0, size=2)
        if "abs" in text and abs(y) < 1e-3:
            continue  # keep clear of the kink, where FD is meaningless
        _, dx, dy = e.eval_dual(x, y)
        fdx, fdy = central_diff(e, x, y)
        assert abs(dx - fdx) <= 1e-6 * (1 + abs(dx))
        assert abs(dy - fdy) <= 1e-6 * (1 + abs(dy))


def test_constants_have_exactly_zero_partials():
    for text in ("0", "0.1", "3.5", "2^3", "-1.25"):
        v, dx, dy = parse(text).eval_dual(0.7, -0.3)
        assert dx == 0.0 and dy == 0.0


def test_abs_subgradient_zero_at_kink():
    assert parse("abs(x)").eval_dual(0.0, 1.0) == DualValue(0.0, 0.0, 0.0)


def test_variable_seed_tangents():
    assert parse("x").eval_dual(0.7, 0.2) == DualValue(0.7, 1.0, 0.0)
    assert parse("y").eval_dual(0.7, 0.2) == DualValue(0.2, 0.0, 1.0)


# ---------------------------------------------------------------------------
# round-trip, determinism, arrays


@pytest.mark.parametrize("text", SAMPLE_EXPRESSIONS)
def test_render_round_trip(text):
    e = parse(text)
    e2 = parse(e.render())
    assert e2.root == e.root
    rng = np.random.default_rng(7)
    for _ in range(25):
        x, y = rng.uniform(-1.5, 1.5, size=2)
        assert e2.eval(x, y) == e.eval(x, y)


def test_identical_queries_are_bit_identical():
    e = parse("exp(x/4)*log(2.5+y) - tan(x/3)")
    a = e.eval_dual(0.31830988618, -0.577215664)
    b = e.eval_dual(0.31830988618, -0.577215664)
    assert a == b


def test_array_evaluation_broadcasts():
    e = parse("sin(5*x)*sin(y)")
    xs = np.linspace(-1, 1, 7)[:, None]
    ys = np.linspace(-2, 2, 5)[None, :]
    v, dx, dy = e.eval_dual(xs, ys)
    assert v.shape == (7, 5)
    for i in range(7):
        for j in range(5):
            sv, sdx, sdy = e.eval_dual(float(xs[i, 0]), float(ys[0, j]))
            assert v[i, j] == pytest.approx(sv, rel=1e-15, abs=1e-300)
            assert dx[i, j] == pytest.approx(sdx, rel=1e-15, abs=1e-300)
            assert dy[i, j] == pytest.approx(sdy, rel=1e-15, abs=1e-300)


def test_constant_expression_broadcasts_against_arrays():
    # Literals stay scalar; downstream code must broadcast them itself.
    v = parse("0.5").eval(np.zeros(4), np.zeros(4))
    assert np.broadcast_to(v, (4,)).tolist() == [0.5] * 4
