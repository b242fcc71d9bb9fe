"""Command-line interface for Gamma Observer."""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Awaitable, Callable, Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import ValidationError

from .core.error_handler import ConfigurationError, ErrorHandler
from .core.observability import (
    GramianReport,
    ObservabilityProblem,
    domain_gramian,
    forward_K,
    is_gamma_detectable,
    is_gamma_observable,
)
from .core.observer import (
    assemble_observer,
    certify_decay,
    design_gain,
    error_trajectory,
    plant_outputs,
    simulate_observer,
    simulate_plant,
    verify_observer_identities,
)
from .core.reconstruction import (
    MonotonicityReport,
    ReconstructionProblem,
    build_observable_set,
    evaluate_errors,
    run_monotonicity_trial,
    sensor_sweep,
)
from .core.reference_solver import reference_solve
from .core.sensing import add_measurement_noise
from .core.spectral import mild_solution, uniform_time_grid
from .schemas.scenario import Scenario
from .utils import ExperimentReport, load_config, setup_logging, write_csv

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "observability", "observer", "reconstruct", "monotonicity", "all")
ORACLE_TOLERANCE = 1e-3
INCLUSION_TOLERANCE = 1e-10


def _mode_label(mode) -> str:
    return "c" + "_".join(str(n) for n in mode)


def _observability_problem(scenario: Scenario, region=None) -> ObservabilityProblem:
    simulation = scenario.config.simulation
    return ObservabilityProblem(
        scenario.basis,
        scenario.sensors,
        region or scenario.regions[0],
        simulation.horizon,
        simulation.time_steps,
    )


def run_simulate(scenario: Scenario, report: ExperimentReport) -> None:
    """Mild solution on the time grid, its outputs, and the finite-difference oracle."""
    basis = scenario.basis
    simulation = scenario.config.simulation
    time_grid = uniform_time_grid(simulation.horizon, simulation.time_steps)
    control = scenario.control(time_grid)
    z0 = scenario.initial_state()

    states = np.vstack([
        mild_solution(basis, z0, list(scenario.input_map), control, float(t)).coefficients
        for t in time_grid
    ])
    outputs = states @ _observability_problem(scenario).output_matrix.T
    header = ["time"] + [_mode_label(m) for m in basis.mode_indices]
    header += [sensor.label(i) for i, sensor in enumerate(scenario.sensors)]
    write_csv(
        scenario.output_dir / "trajectory.csv",
        header,
        (np.concatenate([[t], s, y]) for t, s, y in zip(time_grid, states, outputs)),
    )

    oracle = reference_solve(
        basis, z0, simulation.horizon, simulation.time_steps, list(scenario.input_map), control
    ).final_state(basis)
    final = states[-1]
    scale = max(float(np.linalg.norm(final)), np.finfo(float).tiny)
    oracle_error = float(np.linalg.norm(final - oracle.coefficients)) / scale

    report.section("simulate")
    report.value("modes", basis.size)
    report.value("horizon", simulation.horizon)
    report.value("initial_norm", z0.norm())
    report.value("final_norm", float(np.linalg.norm(final)))
    report.value("oracle_relative_error", oracle_error)
    report.check("oracle_equivalence", oracle_error <= ORACLE_TOLERANCE, f"tolerance {ORACLE_TOLERANCE}")
    if not scenario.input_map:
        report.check("dissipativity", float(np.linalg.norm(final)) <= z0.norm() * (1 + 1e-12))


def _spectrum_rows(label: str, gramian_report: GramianReport) -> List[Tuple[int, str, str, float]]:
    rows = [(i, label, "recoverability", s) for i, s in enumerate(gramian_report.singular_values)]
    rows.extend((i, label, "trace_gramian", s) for i, s in enumerate(gramian_report.trace_singular_values))
    return rows


def run_observability(scenario: Scenario, report: ExperimentReport) -> None:
    """Γ-observability verdict for every region of the nest, plus the Ω-level verdict."""
    threshold = scenario.config.observability.threshold
    report.section("observability")
    report.value("threshold", threshold)

    rows = []
    domain_report = domain_gramian(_observability_problem(scenario), threshold)
    rows.extend(_spectrum_rows("domain", domain_report))
    report.value("verdict[domain]", "observable" if domain_report.observable else "not observable")
    report.value("sigma_min[domain]", domain_report.sigma_min)
    report.value("kernel_dim", domain_report.kernel_dimension)
    report.check("gramian_psd", domain_report.is_psd)

    omega_set = build_observable_set(
        scenario.basis, scenario.sensors, None, threshold, scenario.config.simulation.horizon
    )
    report.value("dim[Omega_E]", omega_set.dimension)

    for region in scenario.region_nest:
        observable, gramian_report = is_gamma_observable(_observability_problem(scenario, region), threshold)
        rows.extend(_spectrum_rows(region.name, gramian_report))
        report.value(f"verdict[{region.name}]", "observable" if observable else "not observable")
        report.value(f"sigma_min[{region.name}]", gramian_report.sigma_min)
        report.value(f"kernel_leak[{region.name}]", gramian_report.kernel_leak)
        if domain_report.observable:
            report.check(f"domain_implies_region[{region.name}]", observable)

        gamma_set = build_observable_set(
            scenario.basis, scenario.sensors, region, threshold, scenario.config.simulation.horizon
        )
        residual = gamma_set.projection_residual(omega_set)
        report.value(f"dim[Gamma_E:{region.name}]", gamma_set.dimension)
        report.value(f"inclusion_residual[{region.name}]", residual)
        report.check(f"inclusion[{region.name}]", residual <= INCLUSION_TOLERANCE)

    write_csv(scenario.output_dir / "gramian_spectrum.csv", ["index", "region", "operator", "singular_value"], rows)


def run_observer(scenario: Scenario, report: ExperimentReport) -> None:
    """Design the gain, run plant and observer, certify exponential decay on the first region."""
    settings = scenario.config.observer
    basis = scenario.basis
    region = scenario.regions[0]
    options = {"shift_modes": settings.shift_modes} if settings.shift_modes else {}
    gain = design_gain(basis, scenario.sensors, settings.method, settings.target_rate, options)
    system = assemble_observer(basis, scenario.sensors, gain, region, list(scenario.input_map))
    detectability = is_gamma_detectable(basis, scenario.sensors, gain, region)

    time_grid = uniform_time_grid(settings.horizon, settings.time_steps)
    control = scenario.control(time_grid)
    z0 = scenario.initial_state()
    z_traj = simulate_plant(basis, z0, time_grid, list(scenario.input_map), control)
    y = plant_outputs(scenario.sensors, z_traj)
    w_traj = simulate_observer(system, y, control)
    errors = error_trajectory(system, z_traj, w_traj)
    certificate = certify_decay(
        time_grid,
        errors,
        tolerance=settings.bound_tolerance,
        transient_fraction=settings.transient_fraction,
        noise_floor=settings.noise_floor,
    )
    matched = error_trajectory(system, z_traj, simulate_observer(system, y, control, w0=z0))
    identities = verify_observer_identities(system, list(scenario.input_map))

    fit = certificate.fit
    bounds = [fit.bound(float(t)) if fit else 0.0 for t in time_grid]
    write_csv(
        scenario.output_dir / "decay.csv",
        ["time", "gamma_error", "fitted_bound"],
        zip(time_grid, errors, bounds),
    )

    report.section("observer")
    report.value("region", region.name)
    report.value("method", gain.design_method.value)
    report.value("target_rate", settings.target_rate)
    report.value("spectral_decay_rate", detectability.decay_rate)
    if fit is not None:
        report.value("F_gamma", fit.F)
        report.value("sigma_gamma", fit.sigma)
        report.value("fit_residual", fit.residual)
        report.value("fit_window", fit.window)
    report.value("final_gamma_error", certificate.final_error)
    report.value("final_bound", certificate.bound)
    for name, residual in identities.residuals.items():
        report.value(f"identity[{name}]", residual)

    scale = max(1.0, float(np.abs(system.generator).max()))
    report.check("detectable", detectability.detectable, f"decay rate {detectability.decay_rate:.6g}")
    report.check("decay_certified", certificate.certified)
    if fit is not None:
        report.check(
            "fitted_rate",
            fit.sigma >= settings.min_decay_ratio * settings.target_rate,
            f"σ={fit.sigma:.6g}",
        )
    report.check("matched_start", float(np.max(matched)) <= 1e-10, f"max {float(np.max(matched)):.3e}")
    report.check("identity_output_injection", identities.holds("output_injection"))
    report.check("identity_luenberger", identities.holds("sylvester_luenberger", 1e-12 * scale))
    report.check("identity_input_map", identities.holds("input_map"))


def _reconstruction_problem(scenario: Scenario, measured) -> ReconstructionProblem:
    return ReconstructionProblem(
        _observability_problem(scenario),
        measured,
        scenario.config.reconstruction.regularization,
        scenario.regions,
    )


def run_reconstruct(scenario: Scenario, report: ExperimentReport) -> None:
    """Reconstruct the configured initial state and, when configured, sweep one sensor."""
    settings = scenario.config.reconstruction
    z0 = scenario.initial_state()
    observability = _observability_problem(scenario)
    measured = add_measurement_noise(forward_K(observability, z0), settings.noise_std, scenario.rng(1))
    problem = _reconstruction_problem(scenario, measured)
    errors = evaluate_errors(problem, z0)

    report.section("reconstruct")
    report.value("regularization", settings.regularization)
    report.value("noise_std", settings.noise_std)
    report.value("residual", errors.residual)
    report.value("objective", errors.objective)
    for name, value in errors.per_region_errors:
        report.value(f"Er[{name}]", value)
    report.value("Er[domain]", errors.domain_error)
    report.check("region_monotonicity", errors.nesting_holds)
    report.check("boundary_below_domain", errors.domain_comparison_holds)

    if settings.sweep_locations:
        rows = sensor_sweep(problem, settings.sweep_locations, z0, settings.sweep_sensor)
        write_csv(
            scenario.output_dir / "sweep.csv",
            ["index", "location", "error", "residual", "modulus"],
            (
                (i, row.location, row.error, row.residual, "" if row.modulus is None else row.modulus)
                for i, row in enumerate(rows)
            ),
        )
        report.value("sweep_points", len(rows))
        report.value("sweep_max_error", max(row.error for row in rows))


async def run_trials(
    problem: ReconstructionProblem,
    trials: int,
    seed: int,
    noise_std: float,
    workers: int,
) -> MonotonicityReport:
    """Run trials on a bounded pool of worker threads; results come back sorted by trial id."""
    semaphore = asyncio.Semaphore(workers)

    async def one(trial_id: int):
        async with semaphore:
            return await asyncio.to_thread(run_monotonicity_trial, problem, trial_id, seed, noise_std)

    results = await asyncio.gather(*(one(k) for k in range(trials)))
    return MonotonicityReport(sorted(results, key=lambda r: r.trial_id), problem.regularization, noise_std)


async def run_monotonicity(scenario: Scenario, report: ExperimentReport) -> None:
    """Seeded trials comparing Er along the region nest and against the Ω-level error."""
    settings = scenario.config.reconstruction
    observability = _observability_problem(scenario)
    placeholder = forward_K(observability, scenario.initial_state())
    problem = _reconstruction_problem(scenario, placeholder)
    result = await run_trials(problem, settings.trials, settings.seed, settings.noise_std, settings.workers)

    rows = []
    for trial in result.trials:
        for name, value in trial.region_errors:
            rows.append((trial.trial_id, trial.seed, name, value, trial.domain_error, trial.residual, trial.passed))
    write_csv(
        scenario.output_dir / "monotonicity.csv",
        ["trial", "seed", "region", "er", "domain_error", "residual", "passed"],
        rows,
    )

    nested = sum(1 for trial in result.trials if trial.nesting_holds)
    compared = sum(1 for trial in result.trials if trial.domain_comparison_holds)
    total = len(result.trials)
    report.section("monotonicity")
    report.value("trials", total)
    report.value("workers", settings.workers)
    for name, stats in result.summary().items():
        report.value(f"mean_Er[{name}]", stats["mean"])
        report.value(f"max_Er[{name}]", stats["max"])
    report.check("region_monotonicity", nested == total, f"{nested}/{total} trials")
    report.check("boundary_below_domain", compared == total, f"{compared}/{total} trials")


Pipeline = Callable[[Scenario, ExperimentReport], Optional[Awaitable[None]]]

PIPELINES: Dict[str, List[Pipeline]] = {
    "simulate": [run_simulate],
    "observability": [run_observability],
    "observer": [run_observer],
    "reconstruct": [run_reconstruct],
    "monotonicity": [run_monotonicity],
    "all": [run_simulate, run_observability, run_observer, run_reconstruct, run_monotonicity],
}


async def run(
    config_path: str,
    command: str = "all",
    seed: Optional[int] = None,
    trials: Optional[int] = None,
    out: Optional[str] = None,
    quiet: bool = False,
    log_level: str = "INFO",
    error_handler: Optional[ErrorHandler] = None,
) -> int:
    """Load a scenario, run one pipeline and write its artifacts.

    Returns:
        0 when every check passes, 1 on a failed check or numerical failure,
        2 on a configuration or domain error
    """
    error_handler = error_handler or ErrorHandler()
    console_level = "WARNING" if quiet else log_level
    field_path = None
    try:
        try:
            config = load_config(config_path).with_overrides(seed=seed, trials=trials, output_dir=out)
            scenario = config.build()
        except ValidationError as e:
            first = e.errors()[0]
            field_path = ".".join(str(part) for part in first["loc"]) or None
            raise
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in {config_path}: {e}", field_path="<root>") from e

        scenario.output_dir.mkdir(parents=True, exist_ok=True)
        setup_logging(config.logging, scenario.output_dir / "run.log", console_level)
        logger.info(f"Running '{command}' for {config_path} into {scenario.output_dir}")

        report = ExperimentReport(f"gamma-observer {command}")
        report.value("config", Path(config_path).name)
        report.value("seed", config.reconstruction.seed)
        for pipeline in PIPELINES[command]:
            outcome = pipeline(scenario, report)
            if asyncio.iscoroutine(outcome):
                await outcome
        report.write(scenario.output_dir / "report.txt")

        for failed in report.failed_checks:
            logger.error(f"Invariant failed: {failed.name} {failed.detail}")
        return 0 if report.all_passed else 1

    except Exception as e:
        code = error_handler.handle_error(e, command=command, field_path=field_path)
        location = field_path or getattr(e, "field_path", None)
        prefix = f"{location}: " if location else ""
        print(f"Error ({error_handler.classify_error(e).value}) {prefix}{e}", file=sys.stderr)
        return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Gamma Observer - regional boundary observation of parabolic systems"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        "-c",
        type=str,
        default="config/example.yaml",
        help="Path to scenario file"
    )
    common.add_argument("--out", "-o", type=str, default=None, help="Output directory (overrides config)")
    common.add_argument("--seed", type=int, default=None, help="Base seed (overrides config)")
    common.add_argument("--trials", type=int, default=None, help="Monotonicity trials (overrides config)")
    common.add_argument("--quiet", "-q", action="store_true", help="Only warnings on the console")
    common.add_argument(
        "--log-level",
        "-l",
        type=str,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Console log level"
    )

    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=f"Run the {command} pipeline")
    return parser


def main(argv: Optional[List[str]] = None) -> None:
    """Main CLI entry point."""
    args = build_parser().parse_args(argv)

    setup_logging(console_level="WARNING" if args.quiet else args.log_level)

    try:
        code = asyncio.run(
            run(
                args.config,
                command=args.command,
                seed=args.seed,
                trials=args.trials,
                out=args.out,
                quiet=args.quiet,
                log_level=args.log_level,
            )
        )
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        code = 130
    sys.exit(code)


if __name__ == "__main__":
    main()
