from .krylov import METHODS, SolverSettings, SolveStats, manufactured_source, solve_fixed_epsilon
from .preconditioners import PRECONDITIONERS, build_preconditioner
from .sweep import SweepReport, SweepStep, epsilon_sweep, sweep_schedule, uniform_bound_ratio
