import numpy as np
import pytest

from helmholtz_lab.errors import ConfigError, ExpressionSyntaxError
from helmholtz_lab.model import FieldExpr, Scenario, parse_scenario

SAMPLE_DOCUMENT = "\n".join(
    [
        "# angular index in the plane",
        "[scenario]",
        "dimension = 2",
        "lambda = 2.0",
        "epsilon = 0.05",
        "",
        "[fields]",
        'p_tilde = "-x1/(2*r)"',
        'b = "-x2", "x1"',
        "",
    ]
)


class TestScenario:
    def test_index_from_long_range_part(self):
        scenario = Scenario(dimension=2, lam=2.0, p_tilde="0.5*w1")
        values = scenario.refraction(np.array([[3.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(values, [3.0, 2.0])

    def test_long_range_part_from_index(self):
        scenario = Scenario(dimension=2, lam=2.0, n="2 + w1")
        values = scenario.long_range(np.array([[3.0, 0.0]]))
        np.testing.assert_allclose(values, [0.5])

    def test_consistent_index_pair(self):
        scenario = Scenario(dimension=3, lam=2.0, n="2 - 2*exp(-r)", p_tilde="-exp(-r)")
        assert isinstance(scenario.n, FieldExpr)
        assert isinstance(scenario.p_tilde, FieldExpr)

    def test_inconsistent_index_pair(self):
        with pytest.raises(ConfigError) as excinfo:
            Scenario(dimension=2, lam=2.0, n="3", p_tilde="0")
        assert "disagree" in str(excinfo.value)

    def test_missing_index(self):
        with pytest.raises(ConfigError):
            Scenario(dimension=2, lam=1.0)

    @pytest.mark.parametrize(
        "changes",
        [
            {"lam": 0.0},
            {"epsilon": 0.0},
            {"epsilon": -1.0},
            {"delta": 1.5},
            {"mu": 0.0},
            {"r0": 0.5},
            {"big_r0": -1.0},
            {"half_width": 0.0},
            {"c_star": -2.0},
            {"dimension": 4},
        ],
    )
    def test_invalid_parameters(self, changes):
        kwargs = {"dimension": 2, "lam": 1.0, "p_tilde": "0", **changes}
        with pytest.raises(ConfigError):
            Scenario(**kwargs)

    def test_gaussian_source(self):
        scenario = Scenario(dimension=3, lam=1.0, p_tilde="0")
        value = scenario.source(np.zeros((1, 3)))
        assert value[0] == pytest.approx((2.0 * np.pi) ** -1.5)
        assert value.dtype == np.complex128

    def test_complex_source_pair(self):
        scenario = Scenario(dimension=2, lam=1.0, p_tilde="0", source_f=("x1", "x2"))
        value = scenario.source(np.array([[1.0, 2.0]]))
        assert value[0] == pytest.approx(1.0 + 2.0j)

    def test_zero_magnetic_potential_collapses(self):
        scenario = Scenario(dimension=2, lam=1.0, p_tilde="0", b="0")
        assert not scenario.has_magnetic_potential
        np.testing.assert_array_equal(scenario.magnetic_potential(np.ones((3, 2))), np.zeros((3, 2)))

    def test_magnetic_potential_components(self):
        scenario = Scenario(dimension=2, lam=1.0, p_tilde="0", b=("-x2", "x1"))
        values = scenario.magnetic_potential(np.array([[1.0, 2.0]]))
        np.testing.assert_allclose(values, [[-2.0, 1.0]])

    def test_magnetic_potential_wrong_arity(self):
        with pytest.raises(ConfigError):
            Scenario(dimension=2, lam=1.0, p_tilde="0", b=("x2",))

    def test_with_updates_revalidates(self):
        scenario = Scenario(dimension=2, lam=1.0, p_tilde="0")
        assert scenario.with_updates(epsilon=0.2).epsilon == 0.2
        with pytest.raises(ConfigError):
            scenario.with_updates(epsilon=-0.2)

    def test_describe(self):
        snapshot = Scenario(dimension=2, lam=2.0, p_tilde="0", name="demo").describe()
        assert snapshot["name"] == "demo"
        assert snapshot["lambda"] == 2.0
        assert snapshot["b"] == []
        assert snapshot["n_inf"] is None


class TestParseScenario:
    def test_sample_document(self):
        scenario = parse_scenario(SAMPLE_DOCUMENT)
        assert scenario.dimension == 2
        assert scenario.lam == 2.0
        assert scenario.epsilon == 0.05
        assert len(scenario.b) == 2
        assert scenario.refraction(np.array([[2.0, 0.0]]))[0] == pytest.approx(1.0)

    def test_defaults(self):
        scenario = parse_scenario("[scenario]\nlambda = 1\n[fields]\nn = \"1\"\n")
        assert scenario.dimension == 3
        assert scenario.epsilon == 0.1
        assert scenario.delta == 1.0
        assert scenario.mu == 1.0
        assert scenario.r0 == 1.0
        assert scenario.big_r0 == 0.0
        assert not scenario.has_magnetic_potential

    def test_missing_lambda(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_scenario("[scenario]\ndimension = 2\n[fields]\nn = \"1\"\n")
        assert "lambda" in str(excinfo.value)

    def test_unknown_key_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_scenario("[scenario]\nlambda = 2\nfoo = 1\n")
        assert excinfo.value.line == 3

    def test_parameter_error_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_scenario("[scenario]\ndimension = 2\nlambda = -1\n[fields]\nn = \"1\"\n")
        assert excinfo.value.line == 3

    def test_non_numeric_parameter(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_scenario("[scenario]\nlambda = \"two\"\n")
        assert excinfo.value.line == 2

    def test_expression_error_location(self):
        with pytest.raises(ExpressionSyntaxError) as excinfo:
            parse_scenario("[scenario]\ndimension = 2\nlambda = 2\n[fields]\nn = \"x1 + y\"\n")
        assert excinfo.value.line == 5
        assert excinfo.value.column == 11

    def test_preset_document(self):
        scenario = parse_scenario("[scenario]\npreset = \"saito\"\nlambda = 3\ndimension = 2\n")
        assert scenario.name == "saito"
        assert scenario.lam == 3
        assert scenario.dimension == 2
