"""
Command line of the lab: `hlab <subcommand> [--config FILE | --preset NAME] [--out DIR] ...`.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure, 4 violated hypothesis with `--strict`.
"""

import logging
import math
import sys
import time
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import typer

try:  # typer >= 0.26 vendors its own click, whose exceptions are what it raises
    from typer import _click as click
except ImportError:
    import click

from helmholtz_lab.config import EikonalSettings, LabConfig, load_lab_config
from helmholtz_lab.eikonal import (
    EikonalSolution,
    Phase,
    RadialPhase,
    SaitoPhase,
    build_angular_grid,
    g_infinity_check,
    march_g,
    shell_residuals,
)
from helmholtz_lab.errors import (
    ConfigError,
    ConvergenceError,
    EikonalBreakdownError,
    FieldDomainError,
    FieldEvaluationError,
    PreconditionError,
    RangeError,
    ResourceLimitError,
    SteadyStateError,
    SweepAbortedError,
)
from helmholtz_lab.functionals import (
    FunctionalName,
    FunctionalReport,
    PhaseMode,
    Verdict,
    angular_profile,
    any_violated,
    apriori_bound_ratio,
    concentration_functional,
    concentration_ratio,
    default_norm_offset,
    dual_norm,
    hypothesis_report,
    mc_norm,
    radiation_functional,
    reports_frame,
    weighted_radiation_terms,
)
from helmholtz_lab.grid import Grid, WaveField, build_grid, export_wavefield_csv, magnetic_gradient, save_wavefield
from helmholtz_lab.identities import IdentityKind, Multiplier, multiplier_catalog, verification_matrix
from helmholtz_lab.model import scenario_from_preset
from helmholtz_lab.solver import SolveStats, epsilon_sweep, solve_fixed_epsilon
from helmholtz_lab.utils import RunManifest, config_hash, parallel_map, write_csv, write_dat

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_HYPOTHESIS = 4

CONFIG_ERRORS = (ConfigError, PreconditionError, ResourceLimitError)
NUMERICAL_ERRORS = (
    ConvergenceError,
    EikonalBreakdownError,
    SteadyStateError,
    FieldEvaluationError,
    FieldDomainError,
    RangeError,
)

app = typer.Typer(pretty_exceptions_enable=False, no_args_is_help=True, add_completion=False)

ConfigOption = Annotated[
    Optional[Path], typer.Option("--config", help="Scenario document (.cfg) or configue YAML file.")
]
PresetOption = Annotated[Optional[str], typer.Option("--preset", help="Named scenario, e.g. free or saito.")]
OutOption = Annotated[Path, typer.Option("--out", envvar="HLAB_OUT", help="Output directory.")]
LambdaOption = Annotated[Optional[float], typer.Option("--lambda", help="Override lambda.")]
DimensionOption = Annotated[Optional[int], typer.Option("--dimension", help="Override the dimension (2 or 3).")]
EpsilonOption = Annotated[Optional[float], typer.Option("--epsilon", help="Override the absorption eps.")]
HalfWidthOption = Annotated[Optional[float], typer.Option("--half-width", help="Override the box half width L.")]
PointsOption = Annotated[Optional[int], typer.Option("--points", help="Override the points per axis N.")]
MethodOption = Annotated[Optional[str], typer.Option("--method", help="gmres or bicgstab.")]
PreconditionerOption = Annotated[
    Optional[str], typer.Option("--preconditioner", help="diagonal, shifted-laplacian, ilu or none.")
]
ThreadsOption = Annotated[Optional[int], typer.Option("--threads", min=1, help="Cap on worker threads.")]
DryRunOption = Annotated[bool, typer.Option("--dry-run", help="Validate the configuration without computing.")]
VerboseOption = Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")]
DEFAULT_OUT = Path("hlab-out")


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _load_config(
    config: Optional[Path],
    preset: Optional[str],
    lam: Optional[float],
    dimension: Optional[int],
    epsilon: Optional[float],
    half_width: Optional[float],
    points: Optional[int],
) -> LabConfig:
    """Read `--config` or `--preset`, then apply the command-line overrides."""
    if config is not None and preset is not None:
        raise ConfigError("give either --config or --preset, not both")
    if config is not None:
        lab = load_lab_config(config)
        updates: Dict[str, Any] = {}
        if lam is not None:
            updates["lam"] = lam
        if dimension is not None:
            updates["dimension"] = dimension
        if updates:
            lab.scenario = lab.scenario.with_updates(**updates)
    elif preset is not None:
        lab = LabConfig(scenario=scenario_from_preset(preset, lam=lam, dimension=dimension))
    else:
        raise ConfigError("missing scenario: give --config or --preset")

    updates = {}
    if epsilon is not None:
        updates["epsilon"] = epsilon
    if half_width is not None:
        updates["half_width"] = half_width
    if points is not None:
        updates["points_per_axis"] = points
    if updates:
        lab.scenario = lab.scenario.with_updates(**updates)
    return lab


def _start(
    subcommand: str,
    lab: LabConfig,
    out: Path,
    dry_run: bool,
    extra: Optional[Dict[str, Any]] = None,
) -> RunManifest:
    out.mkdir(parents=True, exist_ok=True)
    parameters = {**lab.describe(), **(extra or {})}
    return RunManifest(
        subcommand=subcommand,
        config_hash=config_hash(parameters),
        parameters=parameters,
        dry_run=dry_run,
    )


def _finish(manifest: RunManifest, out: Path, started: float) -> None:
    manifest.wall_time = time.perf_counter() - started
    manifest.write(out)


def _grid(lab: LabConfig) -> Grid:
    scenario = lab.scenario
    return build_grid(scenario.dimension, scenario.half_width, scenario.points_per_axis)


def _solve(lab: LabConfig, grid: Grid, method: Optional[str], preconditioner: Optional[str]):
    settings = lab.solver
    return solve_fixed_epsilon(
        grid,
        lab.scenario,
        tol=settings.tol,
        max_iter=settings.max_iter,
        method=method or settings.method,
        preconditioner=preconditioner or settings.preconditioner,
        restart=settings.restart,
    )


def _stats_frame(stats: SolveStats) -> pd.DataFrame:
    row = {
        "epsilon": stats.epsilon,
        "iterations": stats.iterations,
        "final_relative_residual": stats.final_relative_residual,
        "method": stats.method,
        "preconditioner": stats.preconditioner,
    }
    return pd.DataFrame([row])


def radial_profile(u: WaveField) -> Dict[str, np.ndarray]:
    """Mean and max of |u| in radial bins of width h."""
    grid = u.grid
    bins = np.floor(grid.radii / grid.spacing).astype(int)
    modulus = np.abs(u.values)
    counts = np.bincount(bins)
    filled = counts > 0
    mean = np.bincount(bins, weights=modulus)[filled] / counts[filled]
    peak = np.zeros(counts.shape)
    np.maximum.at(peak, bins, modulus)
    radius = (np.arange(counts.size) + 0.5) * grid.spacing
    return {"r": radius[filled], "mean_abs_u": mean, "max_abs_u": peak[filled]}


def _is_short_range(lab: LabConfig) -> bool:
    field = lab.scenario.long_range_field
    return field.is_constant and float(field.expression) == 0.0


def _march(
    lab: LabConfig,
    settings: EikonalSettings,
    p_tilde: Optional[str] = None,
    r0: Optional[float] = None,
    r_max: Optional[float] = None,
) -> EikonalSolution:
    scenario = lab.scenario
    angular = build_angular_grid(scenario.dimension, settings.angles, settings.polar_angles)
    init: Any = settings.init
    if init == "default" and p_tilde is None and scenario.name == "saito":
        # Closed-form inner profile, which the march keeps unchanged.
        init = SaitoPhase(scenario.lam, scenario.dimension).profile(angular.directions)
    return march_g(
        p_tilde if p_tilde is not None else scenario.long_range_field,
        angular,
        r0=scenario.r0 if r0 is None else r0,
        r_max=settings.r_max if r_max is None else r_max,
        rho=settings.rho,
        init=init,
        margin=settings.margin,
    )


def _phase_for(lab: LabConfig) -> Phase:
    """K = |x| for short range, the closed form for the saito preset, a marched solution otherwise."""
    scenario = lab.scenario
    if _is_short_range(lab):
        return RadialPhase(scenario.dimension)
    if scenario.name == "saito":
        return SaitoPhase(scenario.lam, scenario.dimension)
    reach = scenario.half_width * math.sqrt(scenario.dimension)
    return _march(lab, lab.eikonal, r_max=max(lab.eikonal.r_max, reach))


def _parse_levels(levels: str) -> List[int]:
    try:
        values = [int(token) for token in levels.split(",") if token.strip()]
    except ValueError as err:
        raise ConfigError(f"--levels must be a comma list of integers, got {levels!r}") from err
    if len(values) < 2 or any(a >= b for a, b in zip(values, values[1:])):
        raise ConfigError(f"--levels needs at least two increasing grid sizes, got {levels!r}")
    return values


def default_multipliers(lab: LabConfig) -> List[Multiplier]:
    """The catalog exercised by `verify-identities`, scaled to the box."""
    scenario = lab.scenario
    d, scale = scenario.dimension, scenario.half_width / 4.0
    multipliers = [
        multiplier_catalog("phi_const", d),
        multiplier_catalog("phi_theta_over_R", d, R=scale),
        multiplier_catalog("psi_radial", d, R=scale, profile="capped", R_cap=scale),
        multiplier_catalog("psi_radial", d, R=scale, profile="morawetz", with_phi=True),
    ]
    if scenario.n_inf is not None and scenario.n_inf.is_angular:
        multipliers.append(multiplier_catalog("psi_q", d, R=scale / 2.0, n_inf=scenario.n_inf))
    if _is_short_range(lab):
        multipliers.append(multiplier_catalog("psi_eikonal", d, R1=scale, delta=scenario.delta))
    return multipliers


@app.command()
def solve(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    epsilon: EpsilonOption = None,
    half_width: HalfWidthOption = None,
    points: PointsOption = None,
    method: MethodOption = None,
    preconditioner: PreconditionerOption = None,
    csv: Annotated[bool, typer.Option("--csv", help="Also export u as CSV.")] = False,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """Solve at the scenario eps and write u, the solve statistics and a radial profile of |u|."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, epsilon, half_width, points)
    manifest = _start("solve", lab, out, dry_run)
    if not dry_run:
        grid = _grid(lab)
        u, stats = _solve(lab, grid, method, preconditioner)
        manifest.add(save_wavefield(out / "u.bin", u))
        manifest.add(write_csv(out / "stats.csv", _stats_frame(stats)))
        manifest.add(write_dat(out / "radial_profile.dat", radial_profile(u), comment="radial profile of |u|"))
        if csv:
            manifest.add(export_wavefield_csv(out / "u.csv", u))
    _finish(manifest, out, started)
    return EXIT_OK


@app.command()
def sweep(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    half_width: HalfWidthOption = None,
    points: PointsOption = None,
    method: MethodOption = None,
    preconditioner: PreconditionerOption = None,
    eps_start: Annotated[Optional[float], typer.Option("--eps-start")] = None,
    eps_factor: Annotated[Optional[float], typer.Option("--eps-factor")] = None,
    eps_count: Annotated[Optional[int], typer.Option("--eps-count")] = None,
    threads: ThreadsOption = None,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """Limiting absorption sweep: rho(eps) and the Cauchy gaps between consecutive solutions."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, None, half_width, points)
    settings = lab.solver
    schedule = {
        "eps_start": settings.eps_start if eps_start is None else eps_start,
        "factor": settings.eps_factor if eps_factor is None else eps_factor,
        "count": settings.eps_count if eps_count is None else eps_count,
    }
    if not schedule["eps_start"] > 0:
        raise ConfigError(f"eps_start must be positive, got {schedule['eps_start']}")
    manifest = _start("sweep", lab, out, dry_run, extra={"schedule": schedule})
    if not dry_run:
        try:
            report = epsilon_sweep(
                _grid(lab),
                lab.scenario,
                **schedule,
                warm_start=settings.warm_start,
                tol=settings.tol,
                max_iter=settings.max_iter,
                method=method or settings.method,
                preconditioner=preconditioner or settings.preconditioner,
                restart=settings.restart,
                show_progress=verbose,
                num_workers=threads,
            )
        except SweepAbortedError as err:
            manifest.add(write_csv(out / "sweep_partial.csv", err.partial_report.to_frame()))
            _finish(manifest, out, started)
            raise
        manifest.add(write_csv(out / "sweep.csv", report.to_frame()))
    _finish(manifest, out, started)
    return EXIT_OK


@app.command()
def eikonal(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    p_tilde: Annotated[Optional[str], typer.Option("--p-tilde", help="Long-range part p_tilde.")] = None,
    r0: Annotated[Optional[float], typer.Option("--r0")] = None,
    r_max: Annotated[Optional[float], typer.Option("--rmax")] = None,
    rho: Annotated[Optional[float], typer.Option("--rho")] = None,
    angles: Annotated[Optional[int], typer.Option("--angles")] = None,
    init: Annotated[Optional[str], typer.Option("--init", help="default, one or an angular expression.")] = None,
    check_steady: Annotated[bool, typer.Option("--check-steady", help="Fail on a non-steady outer shell.")] = False,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """March g = K/|x| and write the shells, the per-shell eikonal residuals and g on the outer shell."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, None, None, None)
    changes = {"rho": rho, "angles": angles, "init": init, "r_max": r_max}
    current = lab.eikonal
    lab.eikonal = EikonalSettings(
        **{
            "r_max": current.r_max,
            "rho": current.rho,
            "angles": current.angles,
            "polar_angles": current.polar_angles,
            "init": current.init,
            "margin": current.margin,
            **{key: value for key, value in changes.items() if value is not None},
        }
    )
    manifest = _start("eikonal", lab, out, dry_run, extra={"p_tilde": p_tilde, "r0": r0})
    if not dry_run:
        solution = _march(lab, lab.eikonal, p_tilde=p_tilde, r0=r0)
        residuals = shell_residuals(solution, p_tilde)
        manifest.add(write_csv(out / "eikonal_shells.csv", solution.to_frame()))
        residual_frame = pd.DataFrame({"r": solution.radii, "residual": residuals})
        manifest.add(write_csv(out / "eikonal_residuals.csv", residual_frame))

        grid = solution.angular_grid
        outer = {"theta": np.broadcast_to(grid.theta.reshape((-1,) + (1,) * (grid.dimension - 2)), grid.shape).ravel()}
        if grid.dimension == 3:
            outer["phi"] = np.broadcast_to(grid.phi, grid.shape).ravel()
        outer["g"] = solution.g_samples[-1].ravel()
        manifest.add(write_dat(out / "outer_shell.dat", outer, comment=f"g on the outer shell r={solution.r_max:.6g}"))
        if check_steady:
            gap = g_infinity_check(solution, lab.scenario.n_inf, lab.scenario.lam)
            logger.info(f"g_infinity gap on the outer shell: {gap:.3e}")
        logger.info(f"max eikonal residual {float(np.max(residuals)):.3e} over {len(residuals)} shells")
    _finish(manifest, out, started)
    return EXIT_OK


@app.command()
def norms(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    epsilon: EpsilonOption = None,
    half_width: HalfWidthOption = None,
    points: PointsOption = None,
    method: MethodOption = None,
    preconditioner: PreconditionerOption = None,
    r0_norm: Annotated[Optional[float], typer.Option("--norm-offset", help="R0 of the norms.")] = None,
    threads: ThreadsOption = None,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """Solve, then report |||u|||, |||grad_b u|||, N(f) and the a-priori ratio M^2 / N(f / n^(1/2))^2."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, epsilon, half_width, points)
    manifest = _start("norms", lab, out, dry_run)
    if not dry_run:
        grid = _grid(lab)
        scenario = lab.scenario
        offset = default_norm_offset(scenario, grid) if r0_norm is None else r0_norm
        u, _ = _solve(lab, grid, method, preconditioner)
        source = WaveField(scenario.source(grid.points), grid)
        parameters = {"R0": offset, "lambda": scenario.lam, "epsilon": scenario.epsilon}
        parameters.update({"N": grid.points_per_axis, "L": grid.half_width})
        grad_b_u = magnetic_gradient(grid, scenario, u)
        tasks = [
            (FunctionalName.MC_NORM, lambda: mc_norm(u, offset), {}),
            (FunctionalName.MC_NORM, lambda: mc_norm(grad_b_u, offset), {"phase": "grad_b"}),
            (FunctionalName.DUAL_NORM, lambda: dual_norm(source, offset), {}),
            (FunctionalName.APRIORI_RATIO, lambda: apriori_bound_ratio(u, source, scenario, offset), {}),
        ]
        reports = parallel_map(
            lambda task: FunctionalReport(task[0], task[1](), Verdict.REPORTED, {**parameters, **task[2]}),
            tasks,
            threads,
        )
        manifest.add(write_csv(out / "norms.csv", reports_frame(reports)))
    _finish(manifest, out, started)
    return EXIT_OK


@app.command()
def radiation(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    epsilon: EpsilonOption = None,
    half_width: HalfWidthOption = None,
    points: PointsOption = None,
    method: MethodOption = None,
    preconditioner: PreconditionerOption = None,
    phase: Annotated[str, typer.Option("--phase", help="eikonal, explicit_n, explicit_ninf or all.")] = "all",
    delta: Annotated[Optional[float], typer.Option("--delta")] = None,
    region_min_radius: Annotated[Optional[float], typer.Option("--region-min-radius")] = None,
    threads: ThreadsOption = None,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """Solve, then evaluate the Sommerfeld radiation functionals."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, epsilon, half_width, points)
    scenario = lab.scenario
    try:
        modes = list(PhaseMode) if phase == "all" else [PhaseMode(phase)]
    except ValueError as err:
        raise ConfigError(f"invalid --phase {phase!r}") from err
    if scenario.n_inf is None:
        modes = [mode for mode in modes if mode is not PhaseMode.EXPLICIT_NINF]
    rmin = max(1.0, scenario.r0) if region_min_radius is None else region_min_radius
    if rmin < max(1.0, scenario.r0):
        raise ConfigError(f"--region-min-radius must be at least max(1, r0) = {max(1.0, scenario.r0)}")
    manifest = _start("radiation", lab, out, dry_run, extra={"phase": phase, "region_min_radius": rmin})
    if not dry_run:
        grid = _grid(lab)
        u, _ = _solve(lab, grid, method, preconditioner)
        names = {
            PhaseMode.EIKONAL: FunctionalName.RADIATION_EIKONAL,
            PhaseMode.EXPLICIT_N: FunctionalName.RADIATION_EXPLICIT_N,
            PhaseMode.EXPLICIT_NINF: FunctionalName.RADIATION_EXPLICIT_NINF,
        }
        eikonal_phase = _phase_for(lab) if PhaseMode.EIKONAL in modes else None

        def evaluate(mode: PhaseMode) -> FunctionalReport:
            value = radiation_functional(
                u,
                scenario,
                phase_mode=mode,
                delta=delta,
                region_min_radius=rmin,
                phase=eikonal_phase,
            )
            parameters = {"R": rmin, "phase": mode.value, "lambda": scenario.lam, "epsilon": scenario.epsilon}
            parameters.update({"N": grid.points_per_axis, "L": grid.half_width})
            if mode is PhaseMode.EIKONAL:
                parameters["delta"] = scenario.delta if delta is None else delta
            return FunctionalReport(names[mode], value, Verdict.REPORTED, parameters)

        reports = parallel_map(evaluate, modes, threads)
        if PhaseMode.EIKONAL in modes:
            terms = weighted_radiation_terms(u, scenario, delta=delta, region_min_radius=rmin, phase=eikonal_phase)
            parameters = dict(reports[modes.index(PhaseMode.EIKONAL)].parameters)
            for name in (FunctionalName.RADIATION_ABSORPTION, FunctionalName.RADIATION_TANGENTIAL):
                key = name.value.removeprefix("radiation_")
                reports.append(FunctionalReport(name, terms[key], Verdict.REPORTED, dict(parameters)))
        manifest.add(write_csv(out / "radiation.csv", reports_frame(reports)))
    _finish(manifest, out, started)
    return EXIT_OK


@app.command()
def concentration(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    epsilon: EpsilonOption = None,
    half_width: HalfWidthOption = None,
    points: PointsOption = None,
    method: MethodOption = None,
    preconditioner: PreconditionerOption = None,
    radius: Annotated[float, typer.Option("--radius", help="Inner radius R >= 1 of the functional.")] = 1.0,
    bins: Annotated[int, typer.Option("--bins")] = 36,
    threads: ThreadsOption = None,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """Solve, then evaluate the concentration functional and angular profiles on two dyadic shells."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, epsilon, half_width, points)
    scenario = lab.scenario
    if scenario.n_inf is None:
        raise ConfigError("the concentration functional needs n_inf")
    manifest = _start("concentration", lab, out, dry_run, extra={"R": radius, "bins": bins})
    if not dry_run:
        grid = _grid(lab)
        u, _ = _solve(lab, grid, method, preconditioner)
        source = WaveField(scenario.source(grid.points), grid)
        L = grid.half_width  # noqa: N806
        parameters = {"R": radius, "lambda": scenario.lam, "epsilon": scenario.epsilon, "N": grid.points_per_axis}
        parameters["L"] = L
        value = concentration_functional(u, scenario.n_inf, radius)
        ratio = concentration_ratio(u, source, scenario, radius)
        reports = [
            FunctionalReport(FunctionalName.CONCENTRATION, value, Verdict.REPORTED, dict(parameters)),
            FunctionalReport(
                FunctionalName.CONCENTRATION, ratio, Verdict.REPORTED, {**parameters, "phase": "ratio"}
            ),
        ]
        manifest.add(write_csv(out / "concentration.csv", reports_frame(reports)))

        rows = []
        shells = {"inner": (L / 8.0, L / 4.0), "outer": (L / 4.0, L / 2.0)}
        profiles = parallel_map(lambda shell: angular_profile(u, shell, bins=bins), list(shells.values()), threads)
        for (label, shell), profile in zip(shells.items(), profiles):
            manifest.add(
                write_dat(
                    out / f"angular_profile_{label}.dat",
                    {"angle": profile.centers, "mass": profile.mass},
                    comment=f"|u|^2 mass per direction bin on {shell[0]:.6g} <= |x| <= {shell[1]:.6g}",
                )
            )
            rows.append({"shell": label, "r_lo": shell[0], "r_hi": shell[1], "cone_fraction": profile.cone_fraction()})
        manifest.add(write_csv(out / "cone_fractions.csv", pd.DataFrame(rows)))
    _finish(manifest, out, started)
    return EXIT_OK


@app.command("verify-identities")
def verify_identities(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    epsilon: EpsilonOption = None,
    half_width: HalfWidthOption = None,
    levels: Annotated[str, typer.Option("--levels", help="Comma list of grid sizes, coarse to fine.")] = "65,129,257",
    threads: ThreadsOption = None,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """Evaluate the identities and a-priori estimates over the multiplier catalog and grid levels."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, epsilon, half_width, None)
    grid_levels = _parse_levels(levels)
    manifest = _start("verify-identities", lab, out, dry_run, extra={"levels": grid_levels})
    if not dry_run:
        frame = verification_matrix(
            lab.scenario,
            default_multipliers(lab),
            levels=grid_levels,
            which=list(IdentityKind),
            show_progress=verbose,
            num_workers=threads,
        )
        manifest.add(write_csv(out / "identities.csv", frame))
    _finish(manifest, out, started)
    return EXIT_OK


@app.command("check-hypotheses")
def check_hypotheses(
    config: ConfigOption = None,
    preset: PresetOption = None,
    out: OutOption = DEFAULT_OUT,
    lam: LambdaOption = None,
    dimension: DimensionOption = None,
    half_width: HalfWidthOption = None,
    points: PointsOption = None,
    strict: Annotated[bool, typer.Option("--strict", help="Exit with 4 when a hypothesis is violated.")] = False,
    threads: ThreadsOption = None,
    dry_run: DryRunOption = False,
    verbose: VerboseOption = False,
) -> int:
    """Estimate beta, gamma, C*, the decay exponents and n_min on the grid."""
    _setup_logging(verbose)
    started = time.perf_counter()
    lab = _load_config(config, preset, lam, dimension, None, half_width, points)
    manifest = _start("check-hypotheses", lab, out, dry_run)
    exit_code = EXIT_OK
    if not dry_run:
        reports = hypothesis_report(lab.scenario, _grid(lab), num_workers=threads)
        manifest.add(write_csv(out / "hypotheses.csv", reports_frame(reports)))
        if strict and any_violated(reports):
            exit_code = EXIT_HYPOTHESIS
    _finish(manifest, out, started)
    return exit_code


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand and map its outcome to an exit code.

    Args:
        argv: arguments without the program name, defaults to `sys.argv[1:]`
    """
    command = typer.main.get_command(app)
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = command.main(args=args, prog_name="hlab", standalone_mode=False)
    except click.exceptions.ClickException as err:
        err.show()
        return EXIT_CONFIG
    except click.exceptions.Abort:
        return EXIT_CONFIG
    except CONFIG_ERRORS as err:
        logger.error(f"configuration error: {err}")
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as err:
        logger.error(f"numerical failure: {err}")
        return EXIT_NUMERICAL
    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
