import numpy as np
import pytest

from helmholtz_lab.errors import ConfigError
from helmholtz_lab.model import PRESETS, scenario_from_preset


def test_preset_names():
    assert set(PRESETS) == {"free", "saito", "angular-index", "azimuthal-b", "coulomb-q"}


def test_free():
    scenario = scenario_from_preset("free", lam=3.0, dimension=2)
    points = np.array([[1.0, 2.0], [-4.0, 0.5]])
    np.testing.assert_allclose(scenario.refraction(points), [3.0, 3.0])
    assert scenario.n_inf.is_constant


def test_saito():
    scenario = scenario_from_preset("saito", lam=2.0)
    assert scenario.dimension == 3
    point = np.array([[2.0, 0.0, 0.0]])
    assert scenario.long_range(point)[0] == pytest.approx(-0.5)
    assert scenario.refraction(point)[0] == pytest.approx(1.0)
    assert scenario.n_inf(point)[0] == pytest.approx(1.0)
    assert scenario.n_inf.is_angular


def test_saito_requires_lambda_above_one():
    with pytest.raises(ConfigError):
        scenario_from_preset("saito", lam=1.0)


def test_angular_index():
    scenario = scenario_from_preset("angular-index")
    assert scenario.dimension == 2
    values = scenario.refraction(np.array([[5.0, 0.0], [0.0, 5.0], [-5.0, 0.0]]))
    np.testing.assert_allclose(values, [2.5, 2.0, 1.5])


def test_azimuthal_b_is_planar():
    scenario = scenario_from_preset("azimuthal-b")
    assert scenario.has_magnetic_potential
    with pytest.raises(ConfigError):
        scenario_from_preset("azimuthal-b", dimension=3)


def test_coulomb_q():
    scenario = scenario_from_preset("coulomb-q")
    assert scenario.potential(np.array([[2.0, 0.0, 0.0]]))[0] == pytest.approx(0.25)


def test_overrides_are_forwarded():
    scenario = scenario_from_preset("free", lam=1.0, dimension=2, epsilon=0.02, half_width=6.0)
    assert scenario.epsilon == 0.02
    assert scenario.half_width == 6.0


def test_index_override_replaces_preset_index():
    scenario = scenario_from_preset("free", lam=2.0, dimension=2, n="2 + exp(-r^2)")
    assert scenario.refraction(np.array([[10.0, 0.0]]))[0] == pytest.approx(2.0)
    assert scenario.p_tilde is None
    assert scenario.n_inf.is_constant


def test_unknown_preset():
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_preset("vacuum")
    assert "vacuum" in str(excinfo.value)
