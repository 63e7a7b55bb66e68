import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.core.boson_algebra import (
    P,
    P2,
    P3,
    X,
    X2,
    X3,
    ModeBasis,
    QuadraticForm,
    SymplecticMap,
    conjugate_form,
    exp_generator,
    monomial_form,
    standard_generators,
    symplectic_unit,
)
from app.core.errors import BasisMismatchError, UnstableRegimeError
from app.core.settings import (
    CRITICAL_BISECTION_TOL,
    DIAGONAL_THRESHOLD,
)


# ======================================================
# Cranked Anisotropic Oscillator
# ======================================================
#
# H' = sum_k (p_k^2 + w_k^2 x_k^2) / 2 - omega L1
#
# Closed-form transformation parameters next to an independent
# normal-mode oracle built from the linear flow of H'.

QUARTER_TURN = math.pi / 4.0
BRANCH_SLACK = 1e-15


@dataclass(frozen=True)
class OscillatorFrequencies:

    w1: float
    w2: float
    w3: float

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_deformation(cls, base: float, eta: float) -> "OscillatorFrequencies":
        """w1 = omega0 = base, w2^2 = base^2 (1 + eta), w3^2 = base^2 (1 - eta)."""
        if not -1.0 < eta < 1.0:
            raise ValueError(f"deformation eta must lie in (-1, 1), got {eta}")
        return cls(base, base * math.sqrt(1.0 + eta), base * math.sqrt(1.0 - eta))

    @property
    def omega0(self) -> float:
        return math.sqrt(0.5 * (self.w2 ** 2 + self.w3 ** 2))

    @property
    def eta(self) -> float:
        return (self.w2 ** 2 - self.w3 ** 2) / (2.0 * self.omega0 ** 2)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.w1, self.w2, self.w3)


@dataclass(frozen=True)
class CrankedParams:
    """
    Transformation parameters at cranking frequency omega.

    theta[k] is None where Omega_k^2 <= 0; Omega holds the signed
    frequency sign(Omega^2) sqrt(|Omega^2|) so the record stays finite.
    """

    omega: float
    lam: float
    theta: Tuple[Optional[float], Optional[float], Optional[float]]
    Omega: Tuple[float, float, float]
    eps2: float
    eps3: float
    eta: float
    omega0: float
    stable: bool


@dataclass(frozen=True)
class NormalModes:

    Omega_plus: float
    Omega_minus: float
    Omega_1: float
    stable: bool
    energetically_stable: bool


@dataclass(frozen=True)
class DiagonalizationReport:

    residual: float
    Omega_transformed: Tuple[float, float, float]

    @property
    def diagonal(self) -> bool:
        return self.residual < DIAGONAL_THRESHOLD


def mode_basis(freqs: OscillatorFrequencies) -> ModeBasis:
    """Boson basis with the common scale omega0 of the rotating plane."""
    return ModeBasis(omega0=freqs.omega0)


# ======================================================
# Closed-Form Parameters
# ======================================================

def _mixing_angle(omega: float, omega0: float, eta: float) -> float:
    lam = 0.5 * math.atan2(2.0 * omega, omega0 * eta)

    # fold into [-pi/4, pi/4]; lambda and lambda +- pi/2 solve tan 2 lambda alike
    if lam > QUARTER_TURN + BRANCH_SLACK:
        lam -= 2.0 * QUARTER_TURN
    elif lam < -QUARTER_TURN - BRANCH_SLACK:
        lam += 2.0 * QUARTER_TURN

    return lam


def _signed_sqrt(value: float) -> float:
    return math.copysign(math.sqrt(abs(value)), value)


def _squeeze(omega0: float, w: float, Omega: float) -> float:
    return 0.5 * math.asinh(omega0 * (1.0 - w ** 2 / omega0 ** 2) / (2.0 * Omega))


def paper_params(
    freqs: OscillatorFrequencies,
    omega: float,
    strict: bool = False
) -> CrankedParams:
    """
    Closed-form parameters of U = exp(-i lam c1) exp(-i sum theta_k s_k):

        tan 2 lam        = 2 omega / (omega0 eta)
        eps2 = -eps3     = (omega0 eta / 2) cos 2 lam
        Omega_1          = w1
        Omega_{2,3}^2    = (omega0 + eps_{2,3})^2 - (omega0 eta / 2)^2
        sinh 2 theta_k   = omega0 (1 - w_k^2 / omega0^2) / (2 Omega_k)

    An unstable mode is returned with stable=False; strict=True raises.
    """

    omega0 = freqs.omega0
    eta = freqs.eta
    lam = _mixing_angle(omega, omega0, eta)

    eps2 = 0.5 * omega0 * eta * math.cos(2.0 * lam)
    eps3 = -eps2
    half_split = 0.5 * omega0 * eta

    squared = (
        freqs.w1 ** 2,
        (omega0 + eps2) ** 2 - half_split ** 2,
        (omega0 + eps3) ** 2 - half_split ** 2,
    )
    Omega = tuple(_signed_sqrt(value) for value in squared)
    stable = all(value > 0 for value in squared)

    theta = tuple(
        _squeeze(omega0, w, Om) if sq > 0 else None
        for w, Om, sq in zip(freqs.as_tuple(), Omega, squared)
    )

    if not stable:
        message = f"closed-form parameters unstable at omega={omega}: Omega^2={squared}"
        if strict:
            raise UnstableRegimeError(message)
        logging.warning(message)

    return CrankedParams(
        omega=float(omega),
        lam=lam,
        theta=theta,
        Omega=Omega,
        eps2=eps2,
        eps3=eps3,
        eta=eta,
        omega0=omega0,
        stable=stable,
    )


def squeeze_map(theta, basis: ModeBasis) -> SymplecticMap:
    catalog = standard_generators(basis)
    generator = QuadraticForm.zero(basis)

    for k, value in enumerate(theta):
        generator = generator + value * catalog[f"s{k + 1}"]

    return exp_generator(generator, 1.0)


def transformation_map(lam: float, theta, basis: ModeBasis) -> SymplecticMap:
    """exp(-i lam c1) applied last, the squeeze product first."""

    mixing = exp_generator(standard_generators(basis)["c1"], lam)
    return mixing @ squeeze_map(theta, basis)


def build_U(params: CrankedParams, basis: ModeBasis) -> SymplecticMap:

    if not params.stable or any(t is None for t in params.theta):
        raise UnstableRegimeError(
            f"no transformation for unstable parameters at omega={params.omega}"
        )

    if not math.isclose(basis.omega0, params.omega0, rel_tol=1e-12):
        raise BasisMismatchError(
            f"basis omega0={basis.omega0} differs from parameter omega0={params.omega0}"
        )

    return transformation_map(params.lam, params.theta, basis)


# ======================================================
# Cranked Hamiltonian
# ======================================================

def oscillator_hamiltonian(freqs: OscillatorFrequencies, basis: ModeBasis) -> QuadraticForm:
    terms = {}

    for k, w in enumerate(freqs.as_tuple()):
        terms[(X[k], X[k])] = 0.5 * w ** 2
        terms[(P[k], P[k])] = 0.5

    return monomial_form(basis, terms)


def cranked_hamiltonian(
    freqs: OscillatorFrequencies,
    omega: float,
    basis: ModeBasis
) -> QuadraticForm:
    """H' = H - omega (x2 p3 - x3 p2)."""

    rotation = monomial_form(basis, {(X2, P3): -omega, (X3, P2): omega})
    return oscillator_hamiltonian(freqs, basis) + rotation


# ======================================================
# Normal-Mode Oracle
# ======================================================

ROTATING_PLANE = [X2, X3, P2, P3]


def _plane_matrix(freqs: OscillatorFrequencies, omega: float) -> np.ndarray:
    M = cranked_hamiltonian(freqs, omega, mode_basis(freqs)).M
    return M[np.ix_(ROTATING_PLANE, ROTATING_PLANE)]


def is_energetically_stable(freqs: OscillatorFrequencies, omega: float) -> bool:
    """H' positive definite: the Routhian has a minimum at the origin."""
    return bool(np.linalg.eigvalsh(_plane_matrix(freqs, omega))[0] > 0)


def normal_modes_oracle(freqs: OscillatorFrequencies, omega: float) -> NormalModes:
    """
    Frequencies from the eigenvalues +-i Omega of the 4x4 flow matrix J M'
    of modes 2 and 3; u = -lambda^2 = Omega^2 pairs up the four eigenvalues.
    """

    flow = symplectic_unit(2) @ _plane_matrix(freqs, omega)
    eigenvalues = np.linalg.eigvals(flow)

    u = -(eigenvalues.astype(complex) ** 2)
    u = u[np.argsort(u.real)]

    scale = max(freqs.w1, freqs.w2, freqs.w3, abs(omega)) ** 2
    tol = 1e-10 * scale

    u_minus = 0.5 * (u[0].real + u[1].real)
    u_plus = 0.5 * (u[2].real + u[3].real)

    stable = bool(np.max(np.abs(u.imag)) <= tol and u_minus > tol)

    return NormalModes(
        Omega_plus=_signed_sqrt(u_plus),
        Omega_minus=_signed_sqrt(u_minus),
        Omega_1=freqs.w1,
        stable=stable,
        energetically_stable=is_energetically_stable(freqs, omega),
    )


def characteristic_residual(freqs: OscillatorFrequencies, omega: float, Omega: float) -> float:
    """Relative residual of u^2 - u(w2^2 + w3^2 + 2 omega^2) + (omega^2 - w2^2)(omega^2 - w3^2)."""

    u = Omega ** 2
    w2s, w3s, om2 = freqs.w2 ** 2, freqs.w3 ** 2, omega ** 2

    linear = w2s + w3s + 2.0 * om2
    constant = (om2 - w2s) * (om2 - w3s)
    scale = u ** 2 + abs(u * linear) + abs(constant)

    return abs(u ** 2 - u * linear + constant) / max(scale, 1e-300)


def diagonalization_residual(
    params: CrankedParams,
    freqs: OscillatorFrequencies,
    omega: float,
    basis: ModeBasis
) -> DiagonalizationReport:
    """
    Conjugates H' with U(params) and measures how far the result is
    from sum_k (a_k x_k^2 + b_k p_k^2) / 2.

    residual = ||off-diagonal part of M''||_F / ||M''||_F; the mode
    frequencies sqrt(a_k b_k) are read off the diagonal.
    """

    transformed = conjugate_form(
        cranked_hamiltonian(freqs, omega, basis),
        build_U(params, basis),
    ).M

    diagonal = np.diag(np.diag(transformed))
    residual = float(
        np.linalg.norm(transformed - diagonal) / np.linalg.norm(transformed)
    )

    Omega_transformed = tuple(
        _signed_sqrt(transformed[X[k], X[k]] * transformed[P[k], P[k]])
        for k in range(3)
    )

    if residual > DIAGONAL_THRESHOLD:
        logging.warning(
            f"closed-form transformation leaves coupling {residual:.3e} at omega={omega}"
        )

    return DiagonalizationReport(residual=residual, Omega_transformed=Omega_transformed)


# ======================================================
# Stability Boundary
# ======================================================

def critical_frequency(
    freqs: OscillatorFrequencies,
    tol: float = CRITICAL_BISECTION_TOL
) -> float:
    """
    Smallest omega at which the cranked oscillator stops being stable:
    min(w2, w3). Cross-checked by bisection on positive definiteness of H'.
    """

    closed_form = min(freqs.w2, freqs.w3)

    low, high = 0.0, math.hypot(freqs.w2, freqs.w3)
    while high - low > tol:
        middle = 0.5 * (low + high)
        if is_energetically_stable(freqs, middle):
            low = middle
        else:
            high = middle

    bisected = 0.5 * (low + high)
    if abs(bisected - closed_form) > tol:
        logging.warning(
            f"stability bisection {bisected:.10f} disagrees with min(w2, w3)={closed_form:.10f}"
        )

    return closed_form
