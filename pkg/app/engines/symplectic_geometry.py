import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from app.core.boson_algebra import (
    QuadraticForm,
    conjugate_form,
    covariance_commutator,
    exp_generator,
    expectation,
    standard_generators,
)
from app.core.errors import BasisMismatchError, NonSmoothPathError, OutOfRangeError
from app.core.settings import (
    ANGLE_STEP,
    PAIRING_THRESHOLD,
    TANGENT_STEP,
)
from app.engines.collective_manifold import (
    DEFAULT_SOLVER,
    CrankedState,
    ManifoldPoint,
    SolverSettings,
    manifold_point,
    state_at_momentum,
)


# ======================================================
# Symplectic Geometry of the Collective Manifold
# ======================================================
#
# Tangent vectors are flows -i G |Z> of quadratic generators, so
# 2 Im <X|Y> = -i <[G_X, G_Y]> and no determinant overlap is needed.
# Constant shifts G - <G> commute with everything and are dropped.

NON_SMOOTH_RATIO = 1e-2
ISOTROPY_TOL = 1e-12

# (i, j) -> (k, sign) with {L_i, L_j} = sign L_k
SO3_PAIRS = {
    (0, 1): (2, 1.0),
    (1, 2): (0, 1.0),
    (0, 2): (1, -1.0),
}


@dataclass(frozen=True, eq=False)
class TangentVector:

    base: ManifoldPoint
    generator: QuadraticForm

    def __mul__(self, factor: float) -> "TangentVector":
        return TangentVector(self.base, factor * self.generator)

    __rmul__ = __mul__


@dataclass(frozen=True)
class IsotropyReport:

    expect_L: Tuple[float, float, float]
    complementary_form: Tuple[float, float, float]
    identity_residual: float

    @property
    def max_expect(self) -> float:
        return max(abs(v) for v in self.expect_L)

    @property
    def max_pairwise(self) -> float:
        return max(abs(v) for v in self.complementary_form)

    @property
    def isotropic(self) -> bool:
        return self.max_expect < ISOTROPY_TOL and self.max_pairwise < ISOTROPY_TOL


@dataclass(frozen=True, eq=False)
class DecompositionReport:
    """
    Pairing of candidate directions P_q with the orbit tangent T_qQ.

    pairing_matrix[i, 0] = omega(X_L1, X_candidate_i).
    """

    orbit_dim: int
    isotropy_residual: float
    pairing_matrix: np.ndarray
    smallest_singular_value: float
    nondegenerate: bool


@dataclass(frozen=True)
class AngleShift:

    analytic: float
    numeric: float

    @property
    def difference(self) -> float:
        return abs(self.analytic - self.numeric)


# ======================================================
# Symplectic Form
# ======================================================

def _same_point(a: ManifoldPoint, b: ManifoldPoint) -> bool:
    return a is b or (
        a.config == b.config
        and a.state.freqs == b.state.freqs
        and np.array_equal(a.total_map.S, b.total_map.S)
    )


def symplectic_form(X: TangentVector, Y: TangentVector) -> float:
    """omega(X, Y) = 2 Im <X|Y> = -i <[G_X, G_Y]> at the common base point."""

    if not _same_point(X.base, Y.base):
        raise BasisMismatchError("tangent vectors are attached to different points")

    return covariance_commutator(
        X.generator, Y.generator, X.base.total_map, X.base.config
    )


def orbit_tangent(point: ManifoldPoint, name: str = "L1") -> TangentVector:
    return TangentVector(point, standard_generators(point.state.basis)[name])


# ======================================================
# Tangents of Parameterized Families
# ======================================================

def _parameters(point: ManifoldPoint) -> np.ndarray:
    params = point.state.params
    return np.array([point.phi, params.lam, *params.theta], dtype=float)


def _wrap_angle(delta: np.ndarray) -> np.ndarray:
    # phi is stored mod 2 pi
    out = delta.copy()
    out[0] = (out[0] + math.pi) % (2.0 * math.pi) - math.pi
    return out


def path_tangent(
    curve: Callable[[float], ManifoldPoint],
    t: float,
    step: float = TANGENT_STEP
) -> TangentVector:
    """
    Generator of d/dt e^{-i phi L1} e^{-i lam c1} e^{-i sum theta_k s_k} |Slater>:

        G = phi' L1 + R (lam' c1 + sum_k theta_k' C s_k C^+) R^+

    with R, C the rotation and mixing factors at t and the scalar
    derivatives taken by central differences.
    """

    point = curve(t)
    here = _parameters(point)
    forward = _wrap_angle(_parameters(curve(t + step)) - here) / step
    backward = _wrap_angle(here - _parameters(curve(t - step))) / step

    derivative = 0.5 * (forward + backward)
    jump = np.abs(forward - backward)
    if np.any(jump > NON_SMOOTH_RATIO * (1.0 + np.abs(derivative))):
        raise NonSmoothPathError(
            f"parameters jump at t={t}: one-sided derivatives differ by {jump.max():.3e}"
        )

    phi_dot, lam_dot, theta_dot = derivative[0], derivative[1], derivative[2:]
    catalog = standard_generators(point.state.basis)
    params = point.state.params

    mixing_inverse = exp_generator(catalog["c1"], params.lam).inverse()
    rotation_inverse = exp_generator(catalog["L1"], point.phi).inverse()

    intrinsic = lam_dot * catalog["c1"]
    for k, rate in enumerate(theta_dot):
        intrinsic = intrinsic + rate * conjugate_form(catalog[f"s{k + 1}"], mixing_inverse)

    generator = phi_dot * catalog["L1"] + conjugate_form(intrinsic, rotation_inverse)

    return TangentVector(point, generator)


def yrast_tangent(
    state: CrankedState,
    phi: float = 0.0,
    step: float = TANGENT_STEP,
    settings: SolverSettings = DEFAULT_SOLVER
) -> TangentVector:
    """d/dI of the yrast family at I = <L1>(state), at angle phi."""

    def curve(I):
        return manifold_point(state_at_momentum(state.config, state.freqs, I, settings), phi)

    return path_tangent(curve, state.J, step)


# ======================================================
# Checks
# ======================================================

def isotropy_check(state: CrankedState) -> IsotropyReport:
    """
    <L_k> and omega(X_{L_i}, X_{L_j}) at the state, with the residual of
    omega(X_{L_i}, X_{L_j}) = eps_ijk <L_k>.
    """

    point = manifold_point(state, 0.0)
    L = [orbit_tangent(point, f"L{k + 1}") for k in range(3)]

    expect_L = tuple(
        expectation(X.generator, point.total_map, point.config) for X in L
    )

    complementary = [0.0, 0.0, 0.0]
    residual = 0.0

    for (i, j), (k, sign) in SO3_PAIRS.items():
        value = symplectic_form(L[i], L[j])
        complementary[k] = value
        residual = max(residual, abs(value - sign * expect_L[k]))

    if residual > ISOTROPY_TOL * max(1.0, max(abs(v) for v in expect_L)):
        logging.warning(f"so(3) identity violated by {residual:.3e}")

    return IsotropyReport(
        expect_L=expect_L,
        complementary_form=tuple(complementary),
        identity_residual=residual,
    )


def canonical_pair_check(
    yrast: Sequence[CrankedState],
    I: float,
    phi: float = 0.0,
    step: float = TANGENT_STEP,
    settings: SolverSettings = DEFAULT_SOLVER
) -> float:
    """
    omega(X_phi, X_I) on the yrast manifold; equals dJ/dI = 1 when
    (phi, I) are canonically conjugate.
    """

    momenta = [state.J for state in yrast]
    if not min(momenta) < I < max(momenta):
        raise OutOfRangeError(
            f"I={I} is not interior to the yrast grid [{min(momenta)}, {max(momenta)}]"
        )

    reference = yrast[0]

    def curve(value):
        return manifold_point(
            state_at_momentum(reference.config, reference.freqs, value, settings), phi
        )

    X_I = path_tangent(curve, I, step)
    X_phi = orbit_tangent(X_I.base)

    return symplectic_form(X_phi, X_I)


def decomposition_check(
    state: CrankedState,
    candidates: List[QuadraticForm],
    threshold: float = PAIRING_THRESHOLD
) -> DecompositionReport:
    """
    The orbit of rotations about axis 1 is one dimensional and isotropic;
    the candidates must pair with it non-degenerately.
    """

    point = manifold_point(state, 0.0)
    X_L1 = orbit_tangent(point)

    column = [
        symplectic_form(X_L1, TangentVector(point, candidate)) for candidate in candidates
    ]
    pairing = np.array(column, dtype=float).reshape(-1, 1)

    singular = np.linalg.svd(pairing, compute_uv=False) if pairing.size else np.zeros(1)
    smallest = float(singular.min())

    return DecompositionReport(
        orbit_dim=1,
        isotropy_residual=abs(symplectic_form(X_L1, X_L1)),
        pairing_matrix=pairing,
        smallest_singular_value=smallest,
        nondegenerate=smallest > threshold,
    )


def angle_shift_check(state: CrankedState, step: float = ANGLE_STEP) -> AngleShift:
    """
    Rate of <L1> along e^{-i lam c1} |Z> at lam = 0: analytically
    -<{c1, L1}> = -2 <N2 - N3>, numerically a Richardson-refined
    central difference.
    """

    catalog = standard_generators(state.basis)
    c1, L1 = catalog["c1"], catalog["L1"]

    analytic = -covariance_commutator(c1, L1, state.map, state.config)

    def momentum(lam):
        return expectation(L1, exp_generator(c1, lam) @ state.map, state.config)

    def central(h):
        return (momentum(h) - momentum(-h)) / (2.0 * h)

    numeric = (4.0 * central(0.5 * step) - central(step)) / 3.0

    return AngleShift(analytic=analytic, numeric=numeric)

