from .config import EikonalSettings, LabConfig, load_lab_config, parse_lab_config
from .errors import (
    ConfigError,
    ConvergenceError,
    EikonalBreakdownError,
    HelmholtzLabError,
    HypothesisViolationError,
    PreconditionError,
    RangeError,
    ResourceLimitError,
    SteadyStateError,
    SweepAbortedError,
)
from .grid import Grid, WaveField, build_grid
from .model import Scenario, parse_scenario, scenario_from_preset
