import numpy as np
import pytest

from helmholtz_lab.errors import FieldDomainError
from helmholtz_lab.model import Scenario, magnetic_field, potential_jacobian


def test_uniform_field_matrix():
    scenario = Scenario(dimension=2, lam=1.0, p_tilde="0", b=("-0.5*x2", "0.5*x1"))
    data = magnetic_field(scenario, np.array([[1.0, 0.0], [0.0, 2.0]]))
    np.testing.assert_allclose(data.b_matrix[:, 0, 1], [-1.0, -1.0], rtol=1e-8)
    np.testing.assert_array_equal(data.b_matrix, -np.swapaxes(data.b_matrix, -1, -2))


def test_tangential_trace():
    scenario = Scenario(dimension=2, lam=1.0, p_tilde="0", b=("-0.5*x2", "0.5*x1"))
    data = magnetic_field(scenario, np.array([1.0, 0.0]))
    np.testing.assert_allclose(data.b_tau, [0.0, -1.0], atol=1e-8)
    assert data.b_tau_norm == pytest.approx(1.0, rel=1e-8)


def test_gradient_potential_has_no_field():
    scenario = Scenario(dimension=3, lam=1.0, p_tilde="0", b=("2*x1", "2*x2", "2*x3"))
    data = magnetic_field(scenario, np.array([[1.0, -2.0, 0.5]]))
    np.testing.assert_allclose(data.b_matrix, 0.0, atol=1e-8)


def test_no_potential():
    scenario = Scenario(dimension=3, lam=1.0, p_tilde="0")
    jacobian = potential_jacobian(scenario, np.ones((4, 3)))
    assert jacobian.shape == (4, 3, 3)
    assert not np.any(jacobian)


def test_origin_is_rejected():
    scenario = Scenario(dimension=2, lam=1.0, p_tilde="0", b=("-x2", "x1"))
    with pytest.raises(FieldDomainError):
        magnetic_field(scenario, np.zeros((1, 2)))


def test_pure_gauge_potential():
    scenario = Scenario(dimension=2, lam=1.0, p_tilde="0", b=("x2", "x1"))
    data = magnetic_field(scenario, np.array([[0.3, -1.2], [2.0, 5.0]]))
    np.testing.assert_allclose(data.b_matrix, 0.0, atol=1e-8)
    np.testing.assert_allclose(data.b_tau, 0.0, atol=1e-8)


def test_tangential_trace_is_tangential(rng):
    scenario = Scenario(dimension=3, lam=1.0, p_tilde="0", b=("x2*x3", "-x1^2", "sin(x2)"))
    points = rng.normal(size=(20, 3))
    data = magnetic_field(scenario, points)
    directions = points / np.linalg.norm(points, axis=-1, keepdims=True)
    radial = np.sum(data.b_tau * directions, axis=-1)
    np.testing.assert_allclose(radial, 0.0, atol=1e-10 * np.max(np.abs(data.b_matrix)))
