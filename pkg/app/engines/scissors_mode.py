import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigh

from app.core.boson_algebra import (
    QuadraticForm,
    SlaterConfiguration,
    SymplecticMap,
    commutator,
    conjugate_form,
    covariance_commutator,
    exp_generator,
    expectation,
    quadrupole_components,
    standard_generators,
)
from app.core.errors import (
    DegenerateDeformationError,
    OutOfRangeError,
    UnstableRegimeError,
)
from app.core.settings import RESTORING_STEP, SCISSORS_SPLITTING
from app.engines.collective_manifold import (
    DEFAULT_SOLVER,
    CrankedState,
    HamiltonianSpec,
    SolverSettings,
    fill_orbitals,
    joint_selfconsistent_frequencies,
    moment_of_inertia,
    seed_frequencies,
    solve_cranking,
)
from app.engines.cranked_oscillator import (
    OscillatorFrequencies,
    mode_basis,
    oscillator_hamiltonian,
)
from app.engines.symplectic_geometry import isotropy_check


# ======================================================
# Scissors Mode (Two-Fluid Counter-Rotation)
# ======================================================
#
#   B^+ = 1/2 [a_p L1^p - a_n L1^n - i (Omega / Delta)(a_p C1^p - a_n C1^n)]
#
# Proton and neutron operators act on different particles and
# commute; expectation values add over the two determinants.

SPLITTINGS = ("frequency_difference", "angle_operator")


@dataclass(frozen=True, eq=False)
class Fluid:
    """
    One species: its body-frame ground state and the angle about axis 1
    by which the body is turned in the lab.
    """

    config: SlaterConfiguration
    state: CrankedState
    orientation: float = 0.0

    @property
    def species(self) -> str:
        return self.config.species

    def turn(self) -> SymplecticMap:
        return exp_generator(standard_generators(self.state.basis)["L1"], self.orientation)

    @property
    def lab_map(self) -> SymplecticMap:
        return self.turn() @ self.state.map

    def to_lab(self, G: QuadraticForm) -> QuadraticForm:
        """Lab-frame form whose value on the turned state equals G on the body state."""
        return conjugate_form(G, self.turn().inverse())


@dataclass(frozen=True, eq=False)
class TwoFluidSystem:

    proton: Fluid
    neutron: Fluid
    coupling: float
    freqs: OscillatorFrequencies
    spec: HamiltonianSpec
    settings: SolverSettings = DEFAULT_SOLVER

    @property
    def basis(self):
        return mode_basis(self.freqs)


@dataclass(frozen=True, eq=False)
class BosonOperator:
    """
    B^+ = sum_q (hermitian_q + i anti_hermitian_q), q = proton, neutron.
    """

    hermitian: Tuple[QuadraticForm, QuadraticForm]
    anti_hermitian: Tuple[QuadraticForm, QuadraticForm]


@dataclass(frozen=True, eq=False)
class ScissorsResult:

    Omega: float
    inertia_p: float
    inertia_n: float
    restoring_C: float
    stable: bool
    a_p: Optional[float] = None
    a_n: Optional[float] = None
    Bdagger: Optional[BosonOperator] = None
    splitting: Optional[float] = None
    splitting_convention: Optional[str] = None
    norm_residual: Optional[float] = None
    decouple_residual: Optional[float] = None
    harmonic_ratio: Optional[float] = None

    @property
    def reduced_inertia(self) -> float:
        return self.inertia_p * self.inertia_n / (self.inertia_p + self.inertia_n)


# ======================================================
# System Construction
# ======================================================

def build_two_fluid(
    spec: HamiltonianSpec,
    Z: int,
    N: int,
    degeneracy: int,
    explicit: Optional[OscillatorFrequencies] = None,
    settings: SolverSettings = DEFAULT_SOLVER
) -> TwoFluidSystem:
    """
    Fills protons and neutrons in one shared potential, self-consistent
    with the combined totals unless frequencies are given, and solves
    both non-rotating ground states.
    """

    if explicit is not None:
        freqs = explicit
    elif spec.selfconsistent:
        seed = seed_frequencies(spec.base_frequency)
        freqs = joint_selfconsistent_frequencies(spec, (
            fill_orbitals(Z, degeneracy, seed, "proton"),
            fill_orbitals(N, degeneracy, seed, "neutron"),
        ))
    else:
        freqs = OscillatorFrequencies(*([spec.base_frequency] * 3))

    fluids = []
    for count, species in ((Z, "proton"), (N, "neutron")):
        config = fill_orbitals(count, degeneracy, freqs, species)
        state = solve_cranking(spec, config, freqs, 0.0, settings=settings)

        report = isotropy_check(state)
        if not report.isotropic:
            logging.warning(
                f"{species} ground state is not isotropic: max |<L_k>| = {report.max_expect:.3e}"
            )

        fluids.append(Fluid(config, state))

    return TwoFluidSystem(
        proton=fluids[0],
        neutron=fluids[1],
        coupling=spec.qq_isovector,
        freqs=freqs,
        spec=spec,
        settings=settings,
    )


def swap_fluids(sys: TwoFluidSystem) -> TwoFluidSystem:
    """Mirror system: protons and neutrons exchange roles."""

    def relabel(fluid: Fluid, species: str) -> Fluid:
        config = replace(fluid.config, species=species)
        return Fluid(config, replace(fluid.state, config=config), fluid.orientation)

    return replace(
        sys,
        proton=relabel(sys.neutron, "proton"),
        neutron=relabel(sys.proton, "neutron"),
    )


def rotate_system(sys: TwoFluidSystem, phi: float) -> TwoFluidSystem:
    """Both fluids rotated by the same angle about axis 1."""

    def turn(fluid: Fluid) -> Fluid:
        return replace(fluid, orientation=fluid.orientation + phi)

    return replace(sys, proton=turn(sys.proton), neutron=turn(sys.neutron))


# ======================================================
# Restoring Force
# ======================================================

def isovector_energy(sys: TwoFluidSystem, phi_rel: float) -> float:
    """
    -kappa1 sum_mu <Q_mu>_p <Q_mu>_n with protons turned by +phi_rel/2
    and neutrons by -phi_rel/2 from their current orientations.

    A common turn of both fluids drops out of the cross energy, so only
    the orientation difference enters and each fluid is evaluated on
    its body-frame state.
    """

    quadrupoles = quadrupole_components(sys.basis)
    L1 = standard_generators(sys.basis)["L1"]
    offset = 0.5 * (sys.proton.orientation - sys.neutron.orientation)

    def moments(fluid: Fluid, angle: float) -> np.ndarray:
        S = exp_generator(L1, angle) @ fluid.state.map
        return np.array([expectation(Q, S, fluid.config) for Q in quadrupoles.values()])

    cross = (
        moments(sys.proton, 0.5 * phi_rel + offset)
        @ moments(sys.neutron, -0.5 * phi_rel - offset)
    )
    return float(-sys.coupling * cross)


def restoring_constant(sys: TwoFluidSystem, step: float = RESTORING_STEP) -> float:
    """
    C = d^2 E / d phi_rel^2 at 0 by a Richardson-refined central difference.

    Zero for kappa1 = 0 and for bodies symmetric about axis 1.
    """

    if sys.coupling == 0 or sys.freqs.w2 == sys.freqs.w3:
        return 0.0

    center = isovector_energy(sys, 0.0)

    def second(h):
        return (isovector_energy(sys, h) - 2.0 * center + isovector_energy(sys, -h)) / h ** 2

    return (4.0 * second(0.5 * step) - second(step)) / 3.0


def small_oscillation_frequencies(
    inertia_p: float,
    inertia_n: float,
    C: float
) -> Tuple[float, float]:
    """
    Normal modes of L_p^2 / 2I_p + L_n^2 / 2I_n + C (phi_p - phi_n)^2 / 2:
    the zero mode of common rotation and the scissors mode.
    """

    stiffness = C * np.array([[1.0, -1.0], [-1.0, 1.0]])
    inertia = np.diag([inertia_p, inertia_n])

    squared = eigh(stiffness, inertia, eigvals_only=True)
    zero, scissors = sorted(squared, key=abs)

    return (
        math.copysign(math.sqrt(abs(zero)), zero),
        math.copysign(math.sqrt(abs(scissors)), scissors),
    )


# ======================================================
# Scissors Frequency
# ======================================================

def scissors_frequency(sys: TwoFluidSystem, restoring_step: float = RESTORING_STEP) -> ScissorsResult:
    """Omega = sqrt(C / I_red) with cranking inertias of each fluid."""

    if sys.freqs.w2 == sys.freqs.w3:
        raise DegenerateDeformationError(
            "no scissors mode without deformation in the rotating plane (w2 = w3)"
        )

    inertia_p = moment_of_inertia(sys.spec, sys.proton.config, sys.freqs, sys.settings)
    inertia_n = moment_of_inertia(sys.spec, sys.neutron.config, sys.freqs, sys.settings)

    if inertia_p <= 0 or inertia_n <= 0:
        raise DegenerateDeformationError(
            f"non-positive cranking inertia (proton {inertia_p:.3e}, neutron {inertia_n:.3e})"
        )

    C = restoring_constant(sys, restoring_step)
    reduced = inertia_p * inertia_n / (inertia_p + inertia_n)
    squared = C / reduced

    stable = C > 0
    if not stable:
        logging.warning(f"isovector restoring constant C={C:.6e} does not restore: unstable scissors")

    return ScissorsResult(
        Omega=math.copysign(math.sqrt(abs(squared)), squared),
        inertia_p=inertia_p,
        inertia_n=inertia_n,
        restoring_C=C,
        stable=stable,
    )


# ======================================================
# Excitation Operator
# ======================================================

def angle_operator_splitting(freqs: OscillatorFrequencies) -> float:
    """
    Delta in [H, c1] = i Delta L1, read off the form algebra by projecting
    {c1, H} onto L1. Equals omega0 eta.
    """

    basis = mode_basis(freqs)
    catalog = standard_generators(basis)
    bracket = commutator(catalog["c1"], oscillator_hamiltonian(freqs, basis))
    L1 = catalog["L1"].M

    return float(-np.sum(bracket.M * L1) / np.sum(L1 * L1))


def _splitting(freqs: OscillatorFrequencies, convention: str) -> float:
    if convention == "frequency_difference":
        return freqs.w2 - freqs.w3
    if convention == "angle_operator":
        return angle_operator_splitting(freqs)
    raise ValueError(f"unknown splitting convention '{convention}', expected one of {SPLITTINGS}")


def _fluid_bracket(G1: QuadraticForm, G2: QuadraticForm, fluid: Fluid) -> float:
    return covariance_commutator(G1, G2, fluid.lab_map, fluid.config)


def build_Bdagger(
    sys: TwoFluidSystem,
    partial: ScissorsResult,
    splitting: str = SCISSORS_SPLITTING
) -> ScissorsResult:
    """
    Fixes a_p, a_n by decoupling from the total rotation,
    <[B^+, L1^p + L1^n]> = 0, and boson normalization <[B, B^+]> = 1.

    With D_q = <N2 - N3>_q = <{c1, L1}>_q / 2 in the body frame of each
    fluid the two conditions read a_p D_p = a_n D_n and
    -(Omega/Delta)(a_p^2 D_p + a_n^2 D_n) = 1. C1^q is the body-frame c1
    carried to the lab; the residuals are measured on the lab states.
    """

    if sys.freqs.w2 == sys.freqs.w3:
        raise DegenerateDeformationError("Omega / (w2 - w3) has a pole at w2 = w3")
    if sys.freqs.w2 < sys.freqs.w3:
        raise OutOfRangeError("axes are labelled with w2 > w3; relabel the frequencies")
    if not partial.stable:
        raise UnstableRegimeError("scissors restoring constant is not positive")

    delta = _splitting(sys.freqs, splitting)
    ratio = partial.Omega / delta

    catalog = standard_generators(sys.basis)
    L1, c1 = catalog["L1"], catalog["c1"]
    fluids = (sys.proton, sys.neutron)

    D_p, D_n = (
        0.5 * covariance_commutator(c1, L1, fluid.state.map, fluid.config) for fluid in fluids
    )
    C1_p, C1_n = (fluid.to_lab(c1) for fluid in fluids)

    a_p_squared = -D_n / (ratio * D_p * (D_p + D_n))
    if not (math.isfinite(a_p_squared) and a_p_squared > 0):
        raise DegenerateDeformationError(
            f"no normalizable amplitudes for D_p={D_p:.6e}, D_n={D_n:.6e}"
        )

    a_p = math.sqrt(a_p_squared)
    a_n = a_p * D_p / D_n

    operator = BosonOperator(
        hermitian=(0.5 * a_p * L1, -0.5 * a_n * L1),
        anti_hermitian=(-0.5 * ratio * a_p * C1_p, 0.5 * ratio * a_n * C1_n),
    )

    # <[B, B^+]> = -2 sum_q <{H_q, K_q}>
    norm = -2.0 * sum(
        _fluid_bracket(h, k, fluid)
        for h, k, fluid in zip(operator.hermitian, operator.anti_hermitian, fluids)
    )

    # <[B^+, L_tot]> = i sum <{H_q, L1}> - sum <{K_q, L1}>
    decouple = complex(
        -sum(_fluid_bracket(k, L1, fluid) for k, fluid in zip(operator.anti_hermitian, fluids)),
        sum(_fluid_bracket(h, L1, fluid) for h, fluid in zip(operator.hermitian, fluids)),
    )

    harmonic = _harmonic_double_commutator(partial, a_p, a_n, D_p, D_n, ratio)

    return replace(
        partial,
        a_p=a_p,
        a_n=a_n,
        Bdagger=operator,
        splitting=delta,
        splitting_convention=splitting,
        norm_residual=abs(norm - 1.0),
        decouple_residual=abs(decouple),
        harmonic_ratio=harmonic / partial.Omega,
    )


def _harmonic_double_commutator(partial, a_p, a_n, D_p, D_n, ratio) -> float:
    """
    <[B, [H_model, B^+]]> for the two-rotor model
    H_model = sum_q L_q^2 / 2I_q + C (phi_p - phi_n)^2 / 2 with the
    quasi-boson angles phi_q = C1^q / 2 D_q, so that
    B^+ = sum_q (l_q L_q + i f_q phi_q) and the double commutator is
    C (l_p - l_n)^2 + f_p^2 / I_p + f_n^2 / I_n.
    """

    l_p, l_n = 0.5 * a_p, -0.5 * a_n
    f_p = -ratio * a_p * D_p
    f_n = ratio * a_n * D_n

    return (
        partial.restoring_C * (l_p - l_n) ** 2
        + f_p ** 2 / partial.inertia_p
        + f_n ** 2 / partial.inertia_n
    )


def scissors_analysis(
    sys: TwoFluidSystem,
    splitting: str = SCISSORS_SPLITTING,
    restoring_step: float = RESTORING_STEP
) -> ScissorsResult:
    return build_Bdagger(sys, scissors_frequency(sys, restoring_step), splitting)
