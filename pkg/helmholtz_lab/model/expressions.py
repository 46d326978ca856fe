"""
Scalar field expressions over Cartesian coordinates.

A `FieldExpr` is written in a small arithmetic language over the variables `x1..xd`, `r = |x|` and `w1..wd = x/|x|`,
with numeric constants, `pi`, `E`, the operators `+ - * / ^ **` and the functions `sin`, `cos`, `exp`, `sqrt`, `abs`,
`log`. Expressions are parsed with sympy and compiled to vectorized numpy functions.
"""

import logging
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Optional, Sequence, Union

import numpy as np
import sympy
from numpy.typing import ArrayLike, NDArray
from sympy.parsing import sympy_parser

from helmholtz_lab.errors import ExpressionSyntaxError, FieldDomainError, FieldEvaluationError

logger = logging.getLogger(__name__)

FUNCTIONS: Dict[str, Callable] = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
    "Abs": sympy.Abs,
    "log": sympy.log,
}
CONSTANTS: Dict[str, sympy.Expr] = {"pi": sympy.pi, "E": sympy.E}

_TOKEN_RE = re.compile(
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<operator>\*\*|[-+*/^(),])"
    r"|(?P<space>\s+)"
    r"|(?P<invalid>.)"
)
_TRANSFORMATIONS = sympy_parser.standard_transformations + (sympy_parser.convert_xor,)

DEFAULT_RELATIVE_STEP = 1e-5


def _variable_symbols(dimension: int) -> Dict[str, sympy.Symbol]:
    symbols: Dict[str, sympy.Symbol] = {}
    for k in range(1, dimension + 1):
        symbols[f"x{k}"] = sympy.Symbol(f"x{k}", real=True)
        symbols[f"w{k}"] = sympy.Symbol(f"w{k}", real=True)
    symbols["r"] = sympy.Symbol("r", positive=True)
    return symbols


def _check_tokens(text: str, allowed: FrozenSet[str]) -> None:
    """
    Reject characters and identifiers outside of the expression language before the text reaches sympy.

    Raises:
        ExpressionSyntaxError: with the 1-based column of the first offending token
    """
    if not text.strip():
        raise ExpressionSyntaxError("empty expression", column=1)

    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        column = match.start() + 1
        if kind == "invalid":
            raise ExpressionSyntaxError(f"unexpected character {match.group()!r} in expression {text!r}", column=column)
        if kind == "name" and match.group() not in allowed:
            raise ExpressionSyntaxError(f"unknown identifier {match.group()!r} in expression {text!r}", column=column)


@dataclass(frozen=True)
class FieldExpr:
    """
    Immutable scalar field given by an expression string.

    Args:
        source_text: expression over `x1..xd`, `r`, `w1..wd`
        dimension: spatial dimension d, fixes which `x_k`/`w_k` exist

    Example:

    ```python
    n = FieldExpr("2 + 0.5*w1", dimension=2)
    n(np.array([[1.0, 0.0], [0.0, 3.0]]))  # array([2.5, 2.0])
    ```
    """

    source_text: str
    dimension: int = 3

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"Invalid dimension: {self.dimension}")
        # Parse eagerly so that invalid text fails at construction time.
        _ = self.expression

    @cached_property
    def _symbols(self) -> Dict[str, sympy.Symbol]:
        return _variable_symbols(self.dimension)

    @cached_property
    def expression(self) -> sympy.Expr:
        allowed = frozenset(self._symbols) | frozenset(FUNCTIONS) | frozenset(CONSTANTS)
        _check_tokens(self.source_text, allowed)

        local_dict = {**self._symbols, **FUNCTIONS, **CONSTANTS}
        try:
            expr = sympy_parser.parse_expr(self.source_text, local_dict=local_dict, transformations=_TRANSFORMATIONS)
        except SyntaxError as err:
            raise ExpressionSyntaxError(f"invalid expression {self.source_text!r}", column=err.offset) from err
        except Exception as err:  # sympy raises TokenError, TypeError, ... on malformed input
            raise ExpressionSyntaxError(f"invalid expression {self.source_text!r}: {err}") from err

        if not isinstance(expr, sympy.Expr) or expr.has(sympy.zoo, sympy.nan, sympy.oo):
            raise ExpressionSyntaxError(f"expression {self.source_text!r} is not a finite scalar expression")
        return expr

    @cached_property
    def free_variables(self) -> FrozenSet[str]:
        return frozenset(str(s) for s in self.expression.free_symbols)

    @property
    def uses_radius(self) -> bool:
        """Whether the expression references `r` or a direction cosine `w_k` (undefined at the origin)."""
        return any(name == "r" or name.startswith("w") for name in self.free_variables)

    @property
    def is_angular(self) -> bool:
        """Whether the expression depends on the direction `w` only."""
        return all(name.startswith("w") for name in self.free_variables)

    @property
    def is_constant(self) -> bool:
        return not self.free_variables

    @cached_property
    def _function(self) -> Callable[..., NDArray]:
        symbols = self._symbols
        args = [symbols[f"x{k}"] for k in range(1, self.dimension + 1)]
        args += [symbols["r"]]
        args += [symbols[f"w{k}"] for k in range(1, self.dimension + 1)]
        return sympy.lambdify(args, self.expression, modules="numpy")

    def pretty(self) -> str:
        """Canonical text of the parsed expression; re-parses to the same field."""
        return str(self.expression)

    def __call__(self, points: ArrayLike) -> NDArray[np.float64]:
        """
        Evaluate the field at one point of shape (d,) or at an array of points of shape (..., d).

        Raises:
            FieldDomainError: if an r- or w-dependent expression is evaluated at the origin
            FieldEvaluationError: if any value is NaN or Inf
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape[-1] != self.dimension:
            raise ValueError(f"Points must have a trailing axis of size {self.dimension}, got shape {pts.shape}")

        coords = [pts[..., k] for k in range(self.dimension)]
        radius = np.sqrt(np.sum(pts**2, axis=-1))
        if self.uses_radius and np.any(radius == 0.0):
            raise FieldDomainError(f"expression {self.source_text!r} is undefined at the origin")

        with np.errstate(all="ignore"):
            safe_radius = np.where(radius == 0.0, 1.0, radius)
            directions = [c / safe_radius for c in coords]
            values = self._function(*coords, radius, *directions)

        values = np.broadcast_to(np.asarray(values, dtype=np.float64), radius.shape).copy()
        if not np.all(np.isfinite(values)):
            raise FieldEvaluationError(f"expression {self.source_text!r} evaluated to NaN or Inf")
        return values


def as_field(value: Union[str, float, int, FieldExpr], dimension: int) -> FieldExpr:
    """Coerce a string or a number to a `FieldExpr` of the given dimension."""
    if isinstance(value, FieldExpr):
        if value.dimension != dimension:
            return FieldExpr(value.source_text, dimension)
        return value
    return FieldExpr(str(value), dimension)


def eval_field(expr: FieldExpr, point: ArrayLike) -> Union[float, NDArray[np.float64]]:
    """
    Evaluate `expr` at a point (returns a float) or at an array of points (returns an array).
    """
    values = expr(point)
    if values.ndim == 0:
        return float(values)
    return values


def _default_step(pts: NDArray, relative_step: float) -> NDArray:
    return relative_step * (1.0 + np.sqrt(np.sum(pts**2, axis=-1)))


def differentiate_field(
    expr: FieldExpr,
    point: ArrayLike,
    direction: int,
    step: Optional[Union[float, NDArray]] = None,
) -> Union[float, NDArray[np.float64]]:
    """
    Central-difference estimate (f(x + h e_k) - f(x - h e_k)) / (2h) of the partial derivative along the 0-based axis
    `direction`. The error is O(h^2).

    Args:
        expr: field to differentiate
        point: one point (d,) or points (..., d)
        direction: axis index k in [0, d)
        step: h; defaults to 1e-5 * (1 + |x|) per point
    """
    pts = np.asarray(point, dtype=np.float64)
    if not 0 <= direction < expr.dimension:
        raise ValueError(f"Invalid direction {direction} for dimension {expr.dimension}")

    h = _default_step(pts, DEFAULT_RELATIVE_STEP) if step is None else np.asarray(step, dtype=np.float64)
    offset = np.zeros(pts.shape, dtype=np.float64)
    offset[..., direction] = h

    derivative = (expr(pts + offset) - expr(pts - offset)) / (2.0 * h)
    if derivative.ndim == 0:
        return float(derivative)
    return derivative


def field_gradient(expr: FieldExpr, points: ArrayLike, step: Optional[Union[float, NDArray]] = None) -> NDArray:
    """Central-difference gradient of `expr` at points (..., d), returned with shape (..., d)."""
    pts = np.asarray(points, dtype=np.float64)
    return np.stack([np.asarray(differentiate_field(expr, pts, k, step)) for k in range(expr.dimension)], axis=-1)


def second_derivative_field(
    expr: FieldExpr,
    points: ArrayLike,
    first: int,
    second: int,
    step: Optional[Union[float, NDArray]] = None,
) -> NDArray[np.float64]:
    """
    Central-difference estimate of the second partial derivative along axes `first` and `second`.

    The default step is 1e-4 * (1 + |x|), larger than the first-derivative step to keep round-off at bay.
    """
    pts = np.asarray(points, dtype=np.float64)
    h = _default_step(pts, 1e-4) if step is None else np.asarray(step, dtype=np.float64)

    def shifted(*moves: Sequence[int]) -> NDArray:
        offset = np.zeros(pts.shape, dtype=np.float64)
        for axis, sign in moves:
            offset[..., axis] += sign * h
        return expr(pts + offset)

    if first == second:
        return (shifted((first, 1)) - 2.0 * expr(pts) + shifted((first, -1))) / h**2
    return (
        shifted((first, 1), (second, 1))
        - shifted((first, 1), (second, -1))
        - shifted((first, -1), (second, 1))
        + shifted((first, -1), (second, -1))
    ) / (4.0 * h**2)
