import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from app.analytics.sweep_engine import (
    ANGLE_SHIFT_COLUMNS,
    CANONICAL_COLUMNS,
    CRANK_SWEEP_COLUMNS,
    ISOTROPY_COLUMNS,
    SCISSORS_COLUMNS,
    YRAST_COLUMNS,
    angle_shift_rows,
    canonical_rows,
    closed_form_deviation,
    crank_sweep_rows,
    isotropy_rows,
    rotation_energy_spread,
    scissors_rows,
    yrast_rows,
)
from app.core.boson_algebra import SlaterConfiguration, standard_generators
from app.core.config_loader import (
    SCENARIOS,
    RunConfig,
    Tolerances,
    check_preconditions,
    parse_config,
)
from app.core.errors import ConfigError, DomainError, OutputError
from app.engines.collective_manifold import (
    HamiltonianSpec,
    SolverSettings,
    ground_state,
    solve_cranking,
    yrast_curve,
)
from app.engines.cranked_oscillator import OscillatorFrequencies, critical_frequency
from app.engines.scissors_mode import build_two_fluid, scissors_analysis
from app.engines.symplectic_geometry import decomposition_check
from app.storage.report import ResultTable, emit


# ======================================================
# Configuration
# ======================================================

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_OUTPUT = 4

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s"
)


# ======================================================
# System Preparation
# ======================================================

def solver_settings(tolerances: Tolerances) -> SolverSettings:
    return SolverSettings(
        xatol=tolerances.solver_xatol,
        fatol=tolerances.solver_fatol,
        stationarity_tol=tolerances.stationarity_tol,
        inversion_tol=tolerances.inversion_tol,
        sweep_points=tolerances.sweep_points,
        critical_margin=tolerances.critical_margin,
        inertia_step=tolerances.inertia_step,
    )


def hamiltonian_spec(config: RunConfig) -> HamiltonianSpec:
    system = config.system
    return HamiltonianSpec(
        base_frequency=system.base_frequency,
        qq_isoscalar=system.qq_isoscalar,
        qq_isovector=system.qq_isovector,
        selfconsistent=system.selfconsistent,
    )


def explicit_frequencies(config: RunConfig) -> Optional[OscillatorFrequencies]:
    system = config.system
    if not system.explicit_frequencies:
        return None
    return OscillatorFrequencies(system.w1, system.w2, system.w3)


def single_fluid_system(config: RunConfig) -> Tuple[HamiltonianSpec, SlaterConfiguration, OscillatorFrequencies]:
    """
    Single-fluid scenarios treat Z + N nucleons as one species with
    spin-isospin degeneracy 2 * degeneracy.
    """

    spec = hamiltonian_spec(config)
    system = config.system

    configuration, freqs = ground_state(
        spec,
        system.Z + system.N,
        2 * system.degeneracy,
        explicit_frequencies(config),
    )
    return spec, configuration, freqs


def _frequency_metadata(freqs: OscillatorFrequencies, scale: float) -> Dict[str, float]:
    """Dimensionless frequencies, and the same labelled in units of system.scale."""

    values = {
        "w1": freqs.w1,
        "w2": freqs.w2,
        "w3": freqs.w3,
        "critical": critical_frequency(freqs),
    }

    metadata = {f"frequencies.{key}": value for key, value in values.items()}
    metadata.update({f"frequencies.physical.{key}": scale * value for key, value in values.items()})
    return metadata


# ======================================================
# Scenario Runners
# ======================================================

def run_crank_sweep(config: RunConfig) -> ResultTable:
    spec, configuration, freqs = single_fluid_system(config)
    check_preconditions(config, critical_frequency(freqs))

    rows = crank_sweep_rows(
        spec, configuration, freqs,
        config.scenario.omega_max, config.scenario.steps,
        solver_settings(config.tolerances),
    )

    residual = CRANK_SWEEP_COLUMNS.index("diag_residual")
    above = sum(1 for row in rows if row[residual] > config.tolerances.diagonal_threshold)

    metadata = {**config.metadata(), **_frequency_metadata(freqs, config.system.scale)}
    metadata["audit.rows_above_diagonal_threshold"] = above
    metadata["audit.max_closed_form_deviation"] = max(closed_form_deviation(row) for row in rows)

    return ResultTable(CRANK_SWEEP_COLUMNS, rows, metadata)


def run_yrast(config: RunConfig) -> ResultTable:
    spec, configuration, freqs = single_fluid_system(config)
    check_preconditions(config, critical_frequency(freqs))

    curve = yrast_curve(
        spec, configuration, freqs,
        config.scenario.I_max, config.scenario.steps,
        solver_settings(config.tolerances),
    )

    metadata = {**config.metadata(), **_frequency_metadata(freqs, config.system.scale)}
    metadata["yrast.scalar_energy_phi_spread"] = rotation_energy_spread(spec, curve)

    return ResultTable(YRAST_COLUMNS, yrast_rows(curve), metadata)


def run_canonical_check(config: RunConfig) -> ResultTable:
    spec, configuration, freqs = single_fluid_system(config)
    check_preconditions(config, critical_frequency(freqs))
    scenario = config.scenario

    rows = canonical_rows(
        spec, configuration, freqs,
        scenario.I_max, scenario.steps, scenario.phi, scenario.I,
        config.tolerances.tangent_step,
        solver_settings(config.tolerances),
    )

    metadata = {**config.metadata(), **_frequency_metadata(freqs, config.system.scale)}
    return ResultTable(CANONICAL_COLUMNS, rows, metadata)


def run_isotropy_check(config: RunConfig) -> ResultTable:
    spec, configuration, freqs = single_fluid_system(config)
    check_preconditions(config, critical_frequency(freqs))

    state = solve_cranking(
        spec, configuration, freqs, 0.0, settings=solver_settings(config.tolerances)
    )

    catalog = standard_generators(state.basis)
    report = decomposition_check(
        state, [catalog["c1"], catalog["L1"]], config.tolerances.pairing_threshold
    )

    metadata = {**config.metadata(), **_frequency_metadata(freqs, config.system.scale)}
    metadata["decomposition.angle_pairing"] = float(report.pairing_matrix[0, 0])
    metadata["decomposition.nondegenerate"] = report.nondegenerate

    return ResultTable(ISOTROPY_COLUMNS, isotropy_rows(state), metadata)


def run_scissors(config: RunConfig) -> ResultTable:
    system = config.system
    settings = solver_settings(config.tolerances)

    two_fluid = build_two_fluid(
        hamiltonian_spec(config),
        system.Z,
        system.N,
        system.degeneracy,
        explicit_frequencies(config),
        settings,
    )
    check_preconditions(config, critical_frequency(two_fluid.freqs))

    result = scissors_analysis(
        two_fluid, config.scenario.splitting, config.tolerances.restoring_step
    )

    metadata = {**config.metadata(), **_frequency_metadata(two_fluid.freqs, config.system.scale)}
    metadata["scissors.splitting"] = result.splitting
    metadata["scissors.harmonic_ratio"] = result.harmonic_ratio

    return ResultTable(SCISSORS_COLUMNS, scissors_rows(result), metadata)


def run_angle_shift(config: RunConfig) -> ResultTable:
    system = config.system
    scenario = config.scenario

    rows = angle_shift_rows(
        system.base_frequency,
        system.Z + system.N,
        2 * system.degeneracy,
        scenario.eta_max,
        scenario.steps,
        config.tolerances.angle_step,
        solver_settings(config.tolerances),
    )

    return ResultTable(ANGLE_SHIFT_COLUMNS, rows, config.metadata())


RUNNERS: Dict[str, Callable[[RunConfig], ResultTable]] = {
    "crank-sweep": run_crank_sweep,
    "yrast": run_yrast,
    "canonical-check": run_canonical_check,
    "isotropy-check": run_isotropy_check,
    "scissors": run_scissors,
    "angle-shift": run_angle_shift,
}


def run_scenario(config: RunConfig) -> ResultTable:
    name = config.scenario.name
    logging.info(f"Running scenario '{name}'")

    try:
        return RUNNERS[name](config)
    except DomainError as exc:
        raise type(exc)(f"scenario '{name}': {exc}") from exc


def validate(config: RunConfig):
    """Precondition checks on a parsed config, short of running the scenario."""

    if config.scenario.name == "scissors":
        return

    if config.scenario.name == "angle-shift":
        return

    _, _, freqs = single_fluid_system(config)
    check_preconditions(config, critical_frequency(freqs))


# ======================================================
# Command Line
# ======================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Cranked-oscillator collective manifold and scissors-mode toolkit",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for name in SCENARIOS + ("validate",):
        command = commands.add_parser(name)
        command.add_argument("--config", required=True, type=Path, help="INI run configuration")
        command.add_argument("--out", type=Path, default=None, help="output file")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        logging.error(f"Cannot read config {args.config}: {exc}")
        return EXIT_OUTPUT

    try:
        if args.command == "validate":
            config = parse_config(text)
            validate(config)
            print(f"{args.config}: valid '{config.scenario.name}' configuration")
            return EXIT_OK

        config = parse_config(text, scenario=args.command)
        table = run_scenario(config)

        out = args.out or (Path(config.output.path) if config.output.path else None)
        emit(table, config.output.format, config.output.precision, out, config.scenario.name)

    except ConfigError as exc:
        logging.error(f"Configuration error: {exc}")
        return EXIT_CONFIG
    except DomainError as exc:
        logging.error(f"Domain error: {exc}")
        return EXIT_DOMAIN
    except (OutputError, OSError) as exc:
        logging.error(f"Output error: {exc}")
        return EXIT_OUTPUT

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
