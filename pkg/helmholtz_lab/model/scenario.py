import dataclasses
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from helmholtz_lab.errors import ConfigError, ExpressionSyntaxError
from helmholtz_lab.model.expressions import FieldExpr, as_field
from helmholtz_lab.utils.document import Document, DocumentEntry, read_document, reject_unknown_keys

logger = logging.getLogger(__name__)

GAUSSIAN_SOURCE = "gaussian"
FieldLike = Union[str, float, int, FieldExpr]

SCENARIO_KEYS = frozenset(
    {
        "preset",
        "dimension",
        "lambda",
        "epsilon",
        "delta",
        "mu",
        "gamma_bound",
        "c_star",
        "r0",
        "big_r0",
        "half_width",
        "points",
    }
)
FIELD_KEYS = frozenset({"n", "p_tilde", "q", "b", "f", "n_inf"})

# Document key -> Scenario attribute
_PARAMETER_NAMES = {
    "dimension": "dimension",
    "lambda": "lam",
    "epsilon": "epsilon",
    "delta": "delta",
    "mu": "mu",
    "gamma_bound": "gamma_bound",
    "c_star": "c_star",
    "r0": "r0",
    "big_r0": "big_r0",
    "half_width": "half_width",
    "points": "points_per_axis",
}
_FIELD_NAMES = {"n": "n", "p_tilde": "p_tilde", "q": "q_pot", "b": "b", "f": "source_f", "n_inf": "n_inf"}


def gaussian_source_text(dimension: int) -> str:
    """Normalized Gaussian of unit width centered at the origin."""
    squares = " + ".join(f"x{k}^2" for k in range(1, dimension + 1))
    return f"(2*pi)^(-{dimension}/2)*exp(-({squares})/2)"


@dataclass(frozen=True)
class Scenario:
    """
    Full description of one Helmholtz problem

        (grad + i b)^2 u + n u + Q u + i eps u = f,    n = lambda (1 + p_tilde).

    Fields may be given as expression strings; they are converted to `FieldExpr` of the scenario dimension. Either
    `n` or `p_tilde` defines the refraction index; when both are given they must agree.
    """

    dimension: int = 3
    lam: float = 1.0
    epsilon: float = 0.1
    n: Optional[FieldLike] = None
    p_tilde: Optional[FieldLike] = None
    q_pot: FieldLike = "0"
    b: Tuple[FieldLike, ...] = ()
    source_f: Union[str, Tuple[FieldLike, FieldLike]] = GAUSSIAN_SOURCE
    n_inf: Optional[FieldLike] = None
    delta: float = 1.0
    mu: float = 1.0
    gamma_bound: Optional[float] = None
    c_star: Optional[float] = None
    r0: float = 1.0
    big_r0: float = 0.0
    half_width: float = 8.0
    points_per_axis: int = 65
    name: str = "custom"

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dimension}")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta <= 1:
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta}")
        if not self.mu > 0:
            raise ConfigError(f"mu must be positive, got {self.mu}")
        if self.r0 < 1:
            raise ConfigError(f"r0 must be at least 1, got {self.r0}")
        if self.big_r0 < 0:
            raise ConfigError(f"big_r0 must be nonnegative, got {self.big_r0}")
        for name in ("gamma_bound", "c_star"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if not self.half_width > 0:
            raise ConfigError(f"half_width must be positive, got {self.half_width}")

        d = self.dimension
        set_field = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731

        if self.n is None and self.p_tilde is None:
            raise ConfigError("missing refraction index: give n or p_tilde")
        if self.n is not None:
            set_field("n", as_field(self.n, d))
        if self.p_tilde is not None:
            set_field("p_tilde", as_field(self.p_tilde, d))
        set_field("q_pot", as_field(self.q_pot, d))
        if self.n_inf is not None:
            set_field("n_inf", as_field(self.n_inf, d))

        b = self.b
        if isinstance(b, (str, int, float, FieldExpr)):
            b = (b,)
        b = tuple(b)
        if len(b) == 1 and as_field(b[0], d).is_constant and float(as_field(b[0], d).expression) == 0.0:
            b = ()
        if b and len(b) != d:
            raise ConfigError(f"b must have {d} components, got {len(b)}")
        set_field("b", tuple(as_field(component, d) for component in b))

        source = self.source_f
        if isinstance(source, str) and source.strip().lower() == GAUSSIAN_SOURCE:
            source = (gaussian_source_text(d), "0")
        elif isinstance(source, (str, int, float, FieldExpr)):
            source = (source, "0")
        source = tuple(source)
        if len(source) != 2:
            raise ConfigError(f"source f must be one expression or a (re, im) pair, got {len(source)} entries")
        set_field("source_f", tuple(as_field(part, d) for part in source))

        if self.n is not None and self.p_tilde is not None:
            self._check_index_consistency()

    def _check_index_consistency(self) -> None:
        rng = np.random.default_rng(0)
        directions = rng.normal(size=(64, self.dimension))
        directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
        points = directions * rng.uniform(0.5, 2.0 * self.half_width, size=(64, 1))

        n_values = self.n(points)
        from_p = self.lam * (1.0 + self.p_tilde(points))
        gap = np.max(np.abs(n_values - from_p) / np.maximum(1.0, np.abs(n_values)))
        if gap > 1e-12:
            raise ConfigError(f"n and lambda*(1 + p_tilde) disagree (max relative gap {gap:.3e})")

    @cached_property
    def index_field(self) -> FieldExpr:
        """The refraction index n(x) consumed by the solver."""
        if self.n is not None:
            return self.n
        return FieldExpr(f"({self.lam!r})*(1 + ({self.p_tilde.source_text}))", self.dimension)

    @cached_property
    def long_range_field(self) -> FieldExpr:
        """The long-range part p_tilde(x) = n(x)/lambda - 1 consumed by the eikonal module."""
        if self.p_tilde is not None:
            return self.p_tilde
        return FieldExpr(f"({self.n.source_text})/({self.lam!r}) - 1", self.dimension)

    @property
    def has_magnetic_potential(self) -> bool:
        return len(self.b) > 0

    def refraction(self, points: ArrayLike) -> NDArray[np.float64]:
        return self.index_field(points)

    def long_range(self, points: ArrayLike) -> NDArray[np.float64]:
        return self.long_range_field(points)

    def potential(self, points: ArrayLike) -> NDArray[np.float64]:
        return self.q_pot(points)

    def magnetic_potential(self, points: ArrayLike) -> NDArray[np.float64]:
        """b(x) with shape (..., d); zeros when the scenario has no magnetic potential."""
        pts = np.asarray(points, dtype=np.float64)
        if not self.b:
            return np.zeros(pts.shape, dtype=np.float64)
        return np.stack([component(pts) for component in self.b], axis=-1)

    def source(self, points: ArrayLike) -> NDArray[np.complex128]:
        real, imag = self.source_f
        return real(points) + 1j * imag(points)

    def with_updates(self, **changes: Any) -> "Scenario":
        """Copy of the scenario with some attributes replaced (revalidated)."""
        return dataclasses.replace(self, **changes)

    def describe(self) -> Dict[str, Any]:
        """Flat parameter snapshot, used in run manifests and CSV rows."""
        return {
            "name": self.name,
            "dimension": self.dimension,
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "mu": self.mu,
            "gamma_bound": self.gamma_bound,
            "c_star": self.c_star,
            "r0": self.r0,
            "big_r0": self.big_r0,
            "half_width": self.half_width,
            "points": self.points_per_axis,
            "n": self.index_field.pretty(),
            "p_tilde": self.long_range_field.pretty(),
            "q": self.q_pot.pretty(),
            "b": [component.pretty() for component in self.b],
            "f": [part.pretty() for part in self.source_f],
            "n_inf": self.n_inf.pretty() if self.n_inf is not None else None,
        }


def _field_value(entry: DocumentEntry) -> Any:
    value = entry.value
    if isinstance(value, tuple):
        return tuple(str(v) for v in value)
    if isinstance(value, bool):
        raise ConfigError(f"field {entry.key!r} must be an expression", line=entry.line)
    return str(value)


def scenario_from_document(document: Document) -> Scenario:
    """Build a `Scenario` from an already decoded document (see `parse_scenario`)."""
    # Imported here, presets build on Scenario.
    from helmholtz_lab.model.presets import scenario_from_preset

    reject_unknown_keys(document, "scenario", SCENARIO_KEYS)
    reject_unknown_keys(document, "fields", FIELD_KEYS)
    params = document.get("scenario", {})
    fields = document.get("fields", {})

    kwargs: Dict[str, Any] = {}
    for key, attribute in _PARAMETER_NAMES.items():
        if key in params:
            value = params[key].value
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{key} must be a number", line=params[key].line)
            kwargs[attribute] = value
    for key, attribute in _FIELD_NAMES.items():
        if key in fields:
            kwargs[attribute] = _field_value(fields[key])

    preset = params.get("preset")
    if preset is None and "lam" not in kwargs:
        raise ConfigError("missing key lambda")

    try:
        if preset is not None:
            return scenario_from_preset(str(preset.value), **kwargs)
        return Scenario(**kwargs)
    except ExpressionSyntaxError as err:
        raise _locate_expression_error(err, fields) from err
    except ConfigError as err:
        if err.line is None:
            raise _locate_parameter_error(err, params) from err
        raise


def _locate_expression_error(err: ExpressionSyntaxError, fields: Dict[str, DocumentEntry]) -> ConfigError:
    message = err.message
    for entry in fields.values():
        texts = entry.value if isinstance(entry.value, tuple) else (entry.value,)
        for text in texts:
            if isinstance(text, str) and repr(text) in message:
                column = entry.value_column + 1 + (err.column - 1 if err.column else 0)
                return ExpressionSyntaxError(message, line=entry.line, column=column)
    return err


def _locate_parameter_error(err: ConfigError, params: Dict[str, DocumentEntry]) -> ConfigError:
    message = err.message
    for key, entry in params.items():
        if message.startswith(key) or message.startswith(_PARAMETER_NAMES.get(key, key)):
            return ConfigError(message, line=entry.line)
    return err


def parse_scenario(text: str) -> Scenario:
    """
    Parse a scenario document into a validated `Scenario`.

    Defaults: `dimension = 3`, `epsilon = 0.1`, `delta = 1`, `mu = 1`, `r0 = 1`, `big_r0 = 0`, `q = "0"`, `b = 0`,
    `f = "gaussian"`. `lambda` is required unless a `preset` supplies it.

    Raises:
        ConfigError: with line (and column for expression syntax errors)
    """
    return scenario_from_document(read_document(text))
