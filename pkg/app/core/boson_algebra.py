import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import expm

from app.core.errors import (
    BasisMismatchError,
    NoConvergenceError,
    SymplecticityError,
)
from app.core.settings import SYMPLECTIC_TOL


# ======================================================
# Phase-Space Layout
# ======================================================
#
# z = (x1, x2, x3, p1, p2, p3), hbar = m = 1.

N_MODES = 3
DIM = 2 * N_MODES

X1, X2, X3, P1, P2, P3 = range(DIM)
X = (X1, X2, X3)
P = (P1, P2, P3)

SQRT3 = math.sqrt(3.0)


def symplectic_unit(n_modes: int = N_MODES) -> np.ndarray:
    identity = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, identity], [-identity, zero]])


J_UNIT = symplectic_unit()
J_UNIT.setflags(write=False)


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float, copy=True)
    out.setflags(write=False)
    return out


# ======================================================
# Domain Types
# ======================================================

@dataclass(frozen=True)
class ModeBasis:
    """Three oscillator modes sharing the boson scale omega0."""

    omega0: float = 1.0
    n_modes: int = N_MODES

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.n_modes != N_MODES:
            raise ValueError("only three oscillator modes are supported")

    @property
    def dim(self) -> int:
        return 2 * self.n_modes


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """
    G = 1/2 z^T M z + g^T z + c, Weyl ordered.

    M is symmetrized on construction, so every form is Hermitian.
    """

    M: np.ndarray
    g: np.ndarray = None
    c: float = 0.0
    basis: ModeBasis = ModeBasis()

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.shape != (DIM, DIM):
            raise ValueError(f"quadratic part must be {DIM}x{DIM}, got {M.shape}")
        g = np.zeros(DIM) if self.g is None else np.asarray(self.g, dtype=float)
        if g.shape != (DIM,):
            raise ValueError(f"linear part must have length {DIM}")

        object.__setattr__(self, "M", _frozen(0.5 * (M + M.T)))
        object.__setattr__(self, "g", _frozen(g))
        object.__setattr__(self, "c", float(self.c))

    @classmethod
    def zero(cls, basis: ModeBasis = ModeBasis()) -> "QuadraticForm":
        return cls(np.zeros((DIM, DIM)), basis=basis)

    def __call__(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.M @ z + self.g @ z + self.c)

    def _check_basis(self, other: "QuadraticForm"):
        if self.basis != other.basis:
            raise BasisMismatchError(
                f"forms live in different bases: {self.basis} vs {other.basis}"
            )

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        self._check_basis(other)
        return QuadraticForm(self.M + other.M, self.g + other.g, self.c + other.c, self.basis)

    def __sub__(self, other: "QuadraticForm") -> "QuadraticForm":
        return self + (-1.0) * other

    def __mul__(self, factor: float) -> "QuadraticForm":
        return QuadraticForm(factor * self.M, factor * self.g, factor * self.c, self.basis)

    __rmul__ = __mul__

    def __neg__(self) -> "QuadraticForm":
        return (-1.0) * self

    @property
    def is_linear_free(self) -> bool:
        return not np.any(self.g)

    def max_abs_difference(self, other: "QuadraticForm") -> float:
        self._check_basis(other)
        return float(max(
            np.max(np.abs(self.M - other.M)),
            np.max(np.abs(self.g - other.g)),
            abs(self.c - other.c),
        ))

    def allclose(self, other: "QuadraticForm", atol: float = 1e-12) -> bool:
        return self.max_abs_difference(other) <= atol


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """
    Linear canonical map z -> S z.

    A unitary U acts on operators as U^dagger z U = S z, so the map
    of a product U1 U2 is S1 @ S2.
    """

    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.shape != (DIM, DIM):
            raise ValueError(f"symplectic map must be {DIM}x{DIM}")
        object.__setattr__(self, "S", _frozen(S))

    @classmethod
    def identity(cls) -> "SymplecticMap":
        return cls(np.eye(DIM))

    def __matmul__(self, other: "SymplecticMap") -> "SymplecticMap":
        return SymplecticMap(self.S @ other.S)

    def inverse(self) -> "SymplecticMap":
        return SymplecticMap(-J_UNIT @ self.S.T @ J_UNIT)

    def symplectic_error(self) -> float:
        return float(np.max(np.abs(self.S.T @ J_UNIT @ self.S - J_UNIT)))

    def is_symplectic(self, tol: float = SYMPLECTIC_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.S))) ** 2)
        return self.symplectic_error() <= tol * scale


@dataclass(frozen=True)
class SlaterConfiguration:
    """
    Occupied oscillator orbitals (n1, n2, n3) with spin degeneracy.
    """

    orbitals: Tuple[Tuple[int, int, int], ...]
    degeneracy: int = 1
    species: str = "single-fluid"

    def __post_init__(self):
        orbitals = tuple(tuple(int(n) for n in orb) for orb in self.orbitals)
        object.__setattr__(self, "orbitals", orbitals)

        if not orbitals:
            raise ValueError("configuration needs at least one orbital")
        if any(len(orb) != N_MODES or min(orb) < 0 for orb in orbitals):
            raise ValueError(f"orbitals must be non-negative triples: {orbitals}")
        if len(set(orbitals)) != len(orbitals):
            raise ValueError("orbitals must be pairwise distinct")
        if self.degeneracy < 1:
            raise ValueError("degeneracy must be >= 1")
        if self.species not in ("proton", "neutron", "single-fluid"):
            raise ValueError(f"unknown species '{self.species}'")

    @property
    def particle_count(self) -> int:
        return self.degeneracy * len(self.orbitals)

    @property
    def totals(self) -> Tuple[float, float, float]:
        """Sigma_k = sum over orbitals of degeneracy * (n_k + 1/2)."""
        return tuple(
            self.degeneracy * sum(orb[k] + 0.5 for orb in self.orbitals)
            for k in range(N_MODES)
        )


# ======================================================
# Form Construction
# ======================================================

def monomial_form(
    basis: ModeBasis,
    terms: Dict[Tuple[int, int], float],
    constant: float = 0.0
) -> QuadraticForm:
    """
    Builds sum of coefficient * z_i z_j (+ constant) as a QuadraticForm.
    """

    M = np.zeros((DIM, DIM))

    for (i, j), coefficient in terms.items():
        if i == j:
            M[i, i] += 2.0 * coefficient
        else:
            M[i, j] += coefficient
            M[j, i] += coefficient

    return QuadraticForm(M, c=constant, basis=basis)


def standard_generators(basis: ModeBasis) -> Dict[str, QuadraticForm]:
    """
    Catalog of the operators used throughout the toolkit:

        L1, L2, L3   angular momenta
        c1           b2^+ b3 + b3^+ b2 (angle operator)
        s1, s2, s3   i (b^+ b^+ - b b) / 2 = (x p + p x) / 2
        N1, N2, N3   number operators in the omega0 basis
        x1_sq .. p3_sq
        Q0, Q2, Q12, Q23, Q13   real quadrupole components
    """

    w0 = basis.omega0

    catalog = {
        "L1": monomial_form(basis, {(X2, P3): 1.0, (X3, P2): -1.0}),
        "L2": monomial_form(basis, {(X3, P1): 1.0, (X1, P3): -1.0}),
        "L3": monomial_form(basis, {(X1, P2): 1.0, (X2, P1): -1.0}),
        "c1": monomial_form(basis, {(X2, X3): w0, (P2, P3): 1.0 / w0}),
    }

    for k in range(N_MODES):
        x, p = X[k], P[k]
        label = k + 1
        catalog[f"s{label}"] = monomial_form(basis, {(x, p): 1.0})
        catalog[f"N{label}"] = monomial_form(
            basis, {(x, x): 0.5 * w0, (p, p): 0.5 / w0}, constant=-0.5
        )
        catalog[f"x{label}_sq"] = monomial_form(basis, {(x, x): 1.0})
        catalog[f"p{label}_sq"] = monomial_form(basis, {(p, p): 1.0})

    catalog.update(quadrupole_components(basis))

    return catalog


def quadrupole_components(basis: ModeBasis) -> Dict[str, QuadraticForm]:
    return {
        "Q0": monomial_form(basis, {(X3, X3): 2.0, (X1, X1): -1.0, (X2, X2): -1.0}),
        "Q2": monomial_form(basis, {(X1, X1): SQRT3, (X2, X2): -SQRT3}),
        "Q12": monomial_form(basis, {(X1, X2): 2.0 * SQRT3}),
        "Q23": monomial_form(basis, {(X2, X3): 2.0 * SQRT3}),
        "Q13": monomial_form(basis, {(X1, X3): 2.0 * SQRT3}),
    }


def angular_momenta(basis: ModeBasis) -> Tuple[QuadraticForm, QuadraticForm, QuadraticForm]:
    catalog = standard_generators(basis)
    return catalog["L1"], catalog["L2"], catalog["L3"]


# ======================================================
# Algebra
# ======================================================

def commutator(G1: QuadraticForm, G2: QuadraticForm) -> QuadraticForm:
    """
    Returns G3 with [G1, G2] = i G3.

    For quadratic forms G3 is the Poisson bracket {G1, G2}, exactly.
    """

    G1._check_basis(G2)

    M3 = G1.M @ J_UNIT @ G2.M - G2.M @ J_UNIT @ G1.M
    g3 = G1.M @ J_UNIT @ G2.g - G2.M @ J_UNIT @ G1.g
    c3 = float(G1.g @ J_UNIT @ G2.g)

    return QuadraticForm(M3, g3, c3, G1.basis)


def exp_generator(G: QuadraticForm, t: float) -> SymplecticMap:
    """
    Symplectic map of exp(-i t G): the time-t flow exp(t J M).
    """

    if not G.is_linear_free:
        raise ValueError("exp_generator needs a form without linear part")

    S = expm(t * (J_UNIT @ G.M))

    if not np.all(np.isfinite(S)):
        raise NoConvergenceError(f"matrix exponential diverged at t={t}")

    return SymplecticMap(S)


def conjugate_form(G: QuadraticForm, S: SymplecticMap) -> QuadraticForm:
    """
    Heisenberg transform U^dagger G U, with S the map of U.
    """

    if not S.is_symplectic():
        raise SymplecticityError(
            f"map violates S^T J S = J by {S.symplectic_error():.3e}"
        )

    return QuadraticForm(S.S.T @ G.M @ S.S, S.S.T @ G.g, G.c, G.basis)


# ======================================================
# Slater Determinant Expectations
# ======================================================

def slater_covariance(config: SlaterConfiguration, basis: ModeBasis) -> np.ndarray:
    """
    Diagonal of the summed Fock covariances:
    <x_k^2> = Sigma_k / omega0, <p_k^2> = Sigma_k * omega0.
    """

    totals = np.asarray(config.totals)
    return np.concatenate([totals / basis.omega0, totals * basis.omega0])


def expectation(
    G: QuadraticForm,
    S: SymplecticMap,
    config: SlaterConfiguration
) -> float:
    """
    <Z|G|Z> for |Z> = U |Slater>, G summed over particles.

    Fock orbitals have zero mean and no x-p cross covariance, so only
    the diagonal of S^T M S contributes; the linear part drops out.
    """

    transformed = conjugate_form(G, S)
    covariance = slater_covariance(config, G.basis)

    return float(
        0.5 * np.dot(np.diag(transformed.M), covariance)
        + G.c * config.particle_count
    )


def covariance_commutator(
    G1: QuadraticForm,
    G2: QuadraticForm,
    S: SymplecticMap,
    config: SlaterConfiguration
) -> float:
    """-i <[G1, G2]> = 2 Im <X1|X2> for the flows X = -i G |Z>."""

    return expectation(commutator(G1, G2), S, config)
