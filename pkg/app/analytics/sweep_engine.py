import math
from typing import List, Optional, Tuple

import numpy as np

from app.core.boson_algebra import SlaterConfiguration
from app.core.settings import ANGLE_STEP, TANGENT_STEP
from app.engines.collective_manifold import (
    DEFAULT_SOLVER,
    CrankedState,
    HamiltonianSpec,
    SolverSettings,
    fill_orbitals,
    manifold_point,
    scalar_energy,
    solve_cranking,
    yrast_curve,
)
from app.engines.cranked_oscillator import (
    OscillatorFrequencies,
    diagonalization_residual,
    mode_basis,
    normal_modes_oracle,
)
from app.engines.scissors_mode import ScissorsResult
from app.engines.symplectic_geometry import (
    angle_shift_check,
    canonical_pair_check,
    isotropy_check,
)
from app.storage.report import rows_sorted


# ======================================================
# Scenario Columns
# ======================================================

CRANK_SWEEP_COLUMNS = (
    "omega", "J", "energy", "lambda", "theta2", "theta3",
    "Omega_plus_oracle", "Omega_minus_oracle", "Omega2_paper", "Omega3_paper",
    "diag_residual", "stable",
)
YRAST_COLUMNS = ("I", "omega_I", "energy", "lambda", "theta2", "theta3")
CANONICAL_COLUMNS = ("I", "omega_form_value", "deviation_from_1")
ISOTROPY_COLUMNS = ("k", "expect_Lk", "max_pairwise_form")
SCISSORS_COLUMNS = (
    "inertia_p", "inertia_n", "restoring_C", "Omega", "a_p", "a_n",
    "norm_residual", "decouple_residual",
)
ANGLE_SHIFT_COLUMNS = ("deformation_eta", "analytic_rate", "numeric_rate", "difference")
ROTATION_ANGLES = (0.0, 0.7, 1.5, math.pi, 4.0)

Row = Tuple[float, ...]


# ======================================================
# Cranking Sweep
# ======================================================

def crank_sweep_rows(
    spec: HamiltonianSpec,
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    omega_max: float,
    steps: int,
    settings: SolverSettings = DEFAULT_SOLVER
) -> List[Row]:
    """
    One row per omega in linspace(0, omega_max, steps): the variational
    solution next to the closed-form audit and the normal-mode oracle.
    """

    basis = mode_basis(freqs)
    rows = []

    for omega in np.linspace(0.0, omega_max, steps):
        omega = float(omega)
        state = solve_cranking(spec, config, freqs, omega, settings=settings)
        modes = normal_modes_oracle(freqs, omega)
        audit = diagonalization_residual(state.paper, freqs, omega, basis)

        rows.append((
            omega,
            state.J,
            state.energy,
            state.params.lam,
            state.params.theta[1],
            state.params.theta[2],
            modes.Omega_plus,
            modes.Omega_minus,
            state.paper.Omega[1],
            state.paper.Omega[2],
            audit.residual,
            1.0 if modes.stable else 0.0,
        ))

    return rows_sorted(rows)


def closed_form_deviation(row: Row) -> float:
    """Largest gap between the closed-form and oracle frequencies of a crank-sweep row."""

    values = dict(zip(CRANK_SWEEP_COLUMNS, row))
    closed = sorted((values["Omega2_paper"], values["Omega3_paper"]))
    oracle = sorted((values["Omega_minus_oracle"], values["Omega_plus_oracle"]))

    return max(abs(a - b) for a, b in zip(closed, oracle))


# ======================================================
# Yrast Curve and Canonical Pair
# ======================================================

def yrast_rows(curve: List[CrankedState]) -> List[Row]:
    return rows_sorted(
        (state.J, state.omega, state.energy, state.params.lam,
         state.params.theta[1], state.params.theta[2])
        for state in curve
    )


def rotation_energy_spread(
    spec: HamiltonianSpec,
    curve: List[CrankedState],
    phis=ROTATION_ANGLES
) -> float:
    """Largest spread of the scalar energy over phi at any point of the curve."""

    return max(
        float(np.ptp([scalar_energy(spec, manifold_point(state, phi)) for phi in phis]))
        for state in curve
    )


def canonical_rows(
    spec: HamiltonianSpec,
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    I_max: float,
    steps: int,
    phi: float = 0.0,
    I: Optional[float] = None,
    tangent_step: float = TANGENT_STEP,
    settings: SolverSettings = DEFAULT_SOLVER
) -> List[Row]:
    """omega(X_phi, X_I) at every interior yrast grid point, or at I alone."""

    curve = yrast_curve(spec, config, freqs, I_max, steps, settings)
    grid = np.linspace(0.0, I_max, steps)
    targets = [I] if I is not None else [float(value) for value in grid[1:-1]]

    rows = []
    for target in targets:
        value = canonical_pair_check(curve, target, phi, tangent_step, settings)
        rows.append((target, value, abs(value - 1.0)))

    return rows_sorted(rows)


# ======================================================
# Ground-State Checks
# ======================================================

def isotropy_rows(state: CrankedState) -> List[Row]:
    """Row k: <L_k> and the form on the pair of orbit tangents complementary to k."""

    report = isotropy_check(state)
    return [
        (float(k + 1), report.expect_L[k], abs(report.complementary_form[k]))
        for k in range(3)
    ]


def angle_shift_rows(
    base_frequency: float,
    particle_count: int,
    degeneracy: int,
    eta_max: float,
    steps: int,
    angle_step: float = ANGLE_STEP,
    settings: SolverSettings = DEFAULT_SOLVER
) -> List[Row]:
    """
    Deformation grid w1 = omega0, w2^2 = omega0^2 (1 + eta),
    w3^2 = omega0^2 (1 - eta) for eta in linspace(0, eta_max, steps).
    """

    spec = HamiltonianSpec(base_frequency=base_frequency, selfconsistent=False)
    rows = []

    for eta in np.linspace(0.0, eta_max, steps):
        freqs = OscillatorFrequencies.from_deformation(base_frequency, float(eta))
        config = fill_orbitals(particle_count, degeneracy, freqs)
        state = solve_cranking(spec, config, freqs, 0.0, settings=settings)

        shift = angle_shift_check(state, angle_step)
        rows.append((float(eta), shift.analytic, shift.numeric, shift.difference))

    return rows_sorted(rows)


def scissors_rows(result: ScissorsResult) -> List[Row]:
    return [(
        result.inertia_p,
        result.inertia_n,
        result.restoring_C,
        result.Omega,
        result.a_p,
        result.a_n,
        result.norm_residual,
        result.decouple_residual,
    )]
