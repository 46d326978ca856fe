import numpy as np
import pytest

from helmholtz_lab.errors import ExpressionSyntaxError, FieldDomainError, FieldEvaluationError
from helmholtz_lab.model import (
    FieldExpr,
    as_field,
    differentiate_field,
    eval_field,
    field_gradient,
    second_derivative_field,
)


class TestFieldExpr:
    def test_angular_expression(self):
        n = FieldExpr("2 + 0.5*w1", dimension=2)
        values = n(np.array([[1.0, 0.0], [0.0, 3.0]]))
        np.testing.assert_allclose(values, [2.5, 2.0])
        assert n.is_angular
        assert n.uses_radius
        assert not n.is_constant

    def test_caret_is_power(self):
        expr = FieldExpr("x1^2 + x2**3", dimension=2)
        assert eval_field(expr, [3.0, 2.0]) == pytest.approx(17.0)

    def test_constants_and_functions(self):
        expr = FieldExpr("sin(pi*x1) + exp(0*x2) + sqrt(abs(x3)) + log(E)", dimension=3)
        assert eval_field(expr, [0.5, 1.0, 4.0]) == pytest.approx(5.0)

    def test_constant_expression(self):
        expr = as_field(3.0, dimension=2)
        assert expr.is_constant
        assert expr.is_angular
        points = np.ones((4, 5, 2))
        np.testing.assert_allclose(expr(points), np.full((4, 5), 3.0))

    def test_unknown_identifier_column(self):
        with pytest.raises(ExpressionSyntaxError) as excinfo:
            FieldExpr("x1 + y", dimension=2)
        assert excinfo.value.column == 6
        assert "'y'" in str(excinfo.value)

    def test_variable_outside_dimension(self):
        with pytest.raises(ExpressionSyntaxError) as excinfo:
            FieldExpr("x1 + x3", dimension=2)
        assert excinfo.value.column == 6

    def test_invalid_character_column(self):
        with pytest.raises(ExpressionSyntaxError) as excinfo:
            FieldExpr("x1 $ 2", dimension=2)
        assert excinfo.value.column == 4

    def test_empty_expression(self):
        with pytest.raises(ExpressionSyntaxError):
            FieldExpr("   ", dimension=3)

    def test_unbalanced_parenthesis(self):
        with pytest.raises(ExpressionSyntaxError):
            FieldExpr("(x1 + 1", dimension=2)

    def test_invalid_dimension(self):
        with pytest.raises(ValueError):
            FieldExpr("x1", dimension=4)

    def test_radius_at_origin(self):
        expr = FieldExpr("1/r", dimension=3)
        with pytest.raises(FieldDomainError):
            expr(np.zeros(3))

    def test_cartesian_expression_at_origin(self):
        expr = FieldExpr("x1^2 + 1", dimension=3)
        assert eval_field(expr, np.zeros(3)) == pytest.approx(1.0)

    def test_nan_value(self):
        expr = FieldExpr("log(x1)", dimension=2)
        with pytest.raises(FieldEvaluationError):
            expr(np.array([[-1.0, 0.0]]))

    def test_wrong_point_shape(self):
        expr = FieldExpr("x1", dimension=3)
        with pytest.raises(ValueError):
            expr(np.zeros((5, 2)))

    def test_pretty_reparses_to_same_field(self):
        expr = FieldExpr("-x1/(2*r) + 0.25*w2^2", dimension=2)
        again = FieldExpr(expr.pretty(), dimension=2)
        points = np.array([[1.0, 2.0], [-3.0, 0.5], [0.1, -0.2]])
        np.testing.assert_allclose(again(points), expr(points), rtol=1e-14)

    def test_as_field_changes_dimension(self):
        expr = FieldExpr("x1", dimension=2)
        lifted = as_field(expr, dimension=3)
        assert lifted.dimension == 3
        assert eval_field(lifted, [2.0, 0.0, 0.0]) == pytest.approx(2.0)


class TestDerivatives:
    def test_first_derivative(self):
        expr = FieldExpr("x1^2*x2", dimension=2)
        assert differentiate_field(expr, [1.0, 2.0], direction=0) == pytest.approx(4.0, rel=1e-8)
        assert differentiate_field(expr, [1.0, 2.0], direction=1) == pytest.approx(1.0, rel=1e-8)

    def test_invalid_direction(self):
        expr = FieldExpr("x1", dimension=2)
        with pytest.raises(ValueError):
            differentiate_field(expr, [1.0, 2.0], direction=2)

    def test_gradient_shape(self):
        expr = FieldExpr("x1*x2*x3", dimension=3)
        points = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]])
        gradient = field_gradient(expr, points)
        assert gradient.shape == (2, 3)
        np.testing.assert_allclose(gradient[0], [6.0, 3.0, 2.0], rtol=1e-8)

    def test_mixed_second_derivative(self):
        expr = FieldExpr("x1^2*x2", dimension=2)
        values = second_derivative_field(expr, np.array([[1.0, 2.0]]), 0, 1)
        assert values[0] == pytest.approx(2.0, rel=1e-5)

    def test_pure_second_derivative(self):
        expr = FieldExpr("x1^2*x2", dimension=2)
        values = second_derivative_field(expr, np.array([[1.0, 2.0]]), 0, 0)
        assert values[0] == pytest.approx(4.0, rel=1e-5)

    def test_step_derivatives(self):
        square = FieldExpr("x1^2", dimension=3)
        assert differentiate_field(square, [3.0, 0.0, 0.0], direction=0, step=1e-4) == pytest.approx(6.0, abs=1e-7)
        assert differentiate_field(FieldExpr("x1", 3), [1.0, 2.0, 3.0], direction=1) == 0.0

        saito = FieldExpr("-x1/(2*r)", dimension=3)
        assert eval_field(saito, [2.0, 0.0, 0.0]) == pytest.approx(-0.25)
        assert differentiate_field(saito, [0.0, 1.0, 0.0], direction=0, step=1e-4) == pytest.approx(-0.5, abs=1e-6)
