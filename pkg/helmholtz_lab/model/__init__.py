from .expressions import (
    FieldExpr,
    as_field,
    differentiate_field,
    eval_field,
    field_gradient,
    second_derivative_field,
)
from .magnetic import MagneticFieldData, magnetic_field, potential_jacobian
from .presets import PRESETS, scenario_from_preset
from .scenario import Scenario, gaussian_source_text, parse_scenario, scenario_from_document
