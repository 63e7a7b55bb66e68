import heapq
import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize, root

from app.core.boson_algebra import (
    QuadraticForm,
    SlaterConfiguration,
    SymplecticMap,
    conjugate_form,
    covariance_commutator,
    exp_generator,
    expectation,
    quadrupole_components,
    standard_generators,
)
from app.core.errors import (
    NoConvergenceError,
    OpenShellError,
    OutOfRangeError,
    UnstableRegimeError,
)
from app.core.settings import (
    BRANCH_TOL,
    CRITICAL_MARGIN,
    DEFAULT_QQ_ISOSCALAR,
    DEFAULT_QQ_ISOVECTOR,
    INERTIA_STEP,
    INVERSION_TOL,
    SEED_DEFORMATION,
    SELFCONSISTENT_MAX_ITER,
    SOLVER_FATOL,
    SOLVER_MAXITER,
    SOLVER_XATOL,
    STATIONARITY_TOL,
    SWEEP_POINTS,
)
from app.engines.cranked_oscillator import (
    CrankedParams,
    OscillatorFrequencies,
    cranked_hamiltonian,
    critical_frequency,
    mode_basis,
    oscillator_hamiltonian,
    paper_params,
    squeeze_map,
    transformation_map,
)


# ======================================================
# Collective Manifold
# ======================================================
#
# Trial states U(lam, theta) |Slater>, the cranking problem
# delta <H - omega L1> = 0 over them, the momentum map J = <L1>
# and the canonical (phi, I) chart built on the yrast curve.

@dataclass(frozen=True)
class HamiltonianSpec:

    base_frequency: float
    qq_isoscalar: float = DEFAULT_QQ_ISOSCALAR
    qq_isovector: float = DEFAULT_QQ_ISOVECTOR
    selfconsistent: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.base_frequency) and self.base_frequency > 0):
            raise ValueError(f"base_frequency must be positive, got {self.base_frequency}")


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and steps of the variational machinery."""

    xatol: float = SOLVER_XATOL
    fatol: float = SOLVER_FATOL
    maxiter: int = SOLVER_MAXITER
    stationarity_tol: float = STATIONARITY_TOL
    branch_tol: float = BRANCH_TOL
    inversion_tol: float = INVERSION_TOL
    sweep_points: int = SWEEP_POINTS
    critical_margin: float = CRITICAL_MARGIN
    inertia_step: float = INERTIA_STEP


DEFAULT_SOLVER = SolverSettings()


@dataclass(frozen=True, eq=False)
class CrankedState:
    """
    Solution of the cranking problem at params.omega.

    params carries the optimized (lam, theta); paper keeps the closed-form
    candidate and paper_gap = F(paper) - F(optimum) >= 0.
    """

    params: CrankedParams
    map: SymplecticMap
    config: SlaterConfiguration
    freqs: OscillatorFrequencies
    energy: float
    J: float
    routhian: float
    paper: CrankedParams
    paper_gap: float
    gradient_norm: float

    @property
    def omega(self) -> float:
        return self.params.omega

    @property
    def basis(self):
        return mode_basis(self.freqs)


@dataclass(frozen=True, eq=False)
class ManifoldPoint:

    phi: float
    I: float
    state: CrankedState
    total_map: SymplecticMap

    @property
    def config(self) -> SlaterConfiguration:
        return self.state.config


# ======================================================
# Orbital Filling
# ======================================================

def orbital_energy(orbital, freqs: OscillatorFrequencies) -> float:
    return sum(w * (n + 0.5) for w, n in zip(freqs.as_tuple(), orbital))


def fill_orbitals(
    particle_count: int,
    degeneracy: int,
    freqs: OscillatorFrequencies,
    species: str = "single-fluid"
) -> SlaterConfiguration:
    """
    Occupies the lowest orbitals of sum_k w_k (n_k + 1/2), ties in
    ascending lexicographic order.

    Raises OpenShellError when the count does not fill whole orbitals
    or the Fermi level is degenerate and only partly occupied.
    """

    if particle_count < 1 or degeneracy < 1:
        raise ValueError("particle_count and degeneracy must be positive")
    if particle_count % degeneracy:
        raise OpenShellError(
            f"{particle_count} particles do not fill whole orbitals of degeneracy {degeneracy}"
        )

    wanted = particle_count // degeneracy
    tol = 1e-10 * max(freqs.as_tuple())

    # Dijkstra-style walk over the quanta lattice in energy order
    start = (0, 0, 0)
    heap = [(orbital_energy(start, freqs), start)]
    seen = {start}
    ordered = []

    while heap:
        energy, orbital = heapq.heappop(heap)
        ordered.append((energy, orbital))

        for k in range(3):
            neighbour = tuple(n + (1 if i == k else 0) for i, n in enumerate(orbital))
            if neighbour not in seen:
                seen.add(neighbour)
                heapq.heappush(heap, (orbital_energy(neighbour, freqs), neighbour))

        if len(ordered) > wanted and heap[0][0] > ordered[wanted][0] + tol:
            break

    # group near-equal energies, lexicographic inside each group
    groups, current = [], [ordered[0]]
    for item in ordered[1:]:
        if item[0] - current[-1][0] <= tol:
            current.append(item)
        else:
            groups.append(current)
            current = [item]
    groups.append(current)

    occupied = []
    for group in groups:
        if len(occupied) >= wanted:
            break
        if len(occupied) + len(group) > wanted:
            raise OpenShellError(
                f"Fermi level at energy {group[0][0]:.6f} holds {len(group)} degenerate "
                f"orbitals, {wanted - len(occupied)} left to place"
            )
        occupied.extend(orbital for _, orbital in sorted(group, key=lambda item: item[1]))

    return SlaterConfiguration(tuple(occupied), degeneracy, species)


# ======================================================
# Deformed Mean Field
# ======================================================

def seed_frequencies(base: float, deformation: float = SEED_DEFORMATION) -> OscillatorFrequencies:
    """Prolate, volume-conserving start: w1 = w2 = base s, w3 = base / s^2."""

    s = (1.0 + deformation) ** (1.0 / 3.0)
    return OscillatorFrequencies(base * s, base * s, base / s ** 2)


def _volume_conserving_minimum(totals: Sequence[float], base: float) -> np.ndarray:
    """
    Minimum of sum_k w_k Sigma_k at w1 w2 w3 = base^3, searched in
    log-frequencies with the third one eliminated.
    """

    sigma = np.asarray(totals, dtype=float)
    log_volume = 3.0 * math.log(base)

    def frequencies(u):
        return np.exp([u[0], u[1], log_volume - u[0] - u[1]])

    def energy(u):
        return float(frequencies(u) @ sigma)

    def gradient(u):
        weighted = frequencies(u) * sigma
        return np.array([weighted[0] - weighted[2], weighted[1] - weighted[2]])

    def hessian(u):
        weighted = frequencies(u) * sigma
        return np.array([
            [weighted[0] + weighted[2], weighted[2]],
            [weighted[2], weighted[1] + weighted[2]],
        ])

    start = np.full(2, math.log(base))
    coarse = minimize(energy, start, jac=gradient, method="BFGS", options={"gtol": 1e-10})
    polished = root(gradient, coarse.x, jac=hessian)

    u = polished.x if polished.success else coarse.x
    w = frequencies(u)

    return w * (base ** 3 / np.prod(w)) ** (1.0 / 3.0)


def selfconsistent_frequencies(
    spec: HamiltonianSpec,
    config: SlaterConfiguration,
    max_iter: int = SELFCONSISTENT_MAX_ITER
) -> OscillatorFrequencies:
    """
    Deformed frequencies minimizing the mean-field energy sum_k w_k Sigma_k
    at fixed volume, refilling the configuration until it reproduces itself.

    At the answer w1 Sigma_1 = w2 Sigma_2 = w3 Sigma_3. The isoscalar
    coupling sets the size of the deformation energy but not its minimum.
    """

    return joint_selfconsistent_frequencies(spec, (config,), max_iter)


def joint_selfconsistent_frequencies(
    spec: HamiltonianSpec,
    configs: Sequence[SlaterConfiguration],
    max_iter: int = SELFCONSISTENT_MAX_ITER
) -> OscillatorFrequencies:
    """Shared potential of several species, driven by their summed totals."""

    if not spec.selfconsistent:
        raise ValueError("self-consistent frequencies need spec.selfconsistent")

    configs = tuple(configs)
    visited = set()

    for iteration in range(max_iter):
        totals = np.sum([config.totals for config in configs], axis=0)
        w = _volume_conserving_minimum(totals, spec.base_frequency)

        spread = np.ptp(w * totals) / np.mean(w * totals)
        if spread > 1e-8:
            raise NoConvergenceError(f"Mottelson condition off by {spread:.3e}")

        freqs = OscillatorFrequencies(*w)

        refilled = tuple(
            fill_orbitals(config.particle_count, config.degeneracy, freqs, config.species)
            for config in configs
        )

        key = tuple(frozenset(config.orbitals) for config in configs)
        if tuple(frozenset(config.orbitals) for config in refilled) == key:
            logging.info(
                f"Self-consistent frequencies {freqs.as_tuple()} after {iteration + 1} iteration(s)"
            )
            return freqs

        visited.add(key)
        if tuple(frozenset(config.orbitals) for config in refilled) in visited:
            raise NoConvergenceError("level crossings cycle between configurations")

        configs = refilled

    raise NoConvergenceError(f"no self-consistent configuration after {max_iter} iterations")


def ground_state(
    spec: HamiltonianSpec,
    particle_count: int,
    degeneracy: int,
    explicit: Optional[OscillatorFrequencies] = None,
    species: str = "single-fluid"
) -> Tuple[SlaterConfiguration, OscillatorFrequencies]:
    """
    Configuration and frequencies at omega = 0.

    Explicit frequencies win; otherwise a fixed spherical potential or
    the self-consistent solution started from a prolate seed.
    """

    if explicit is not None:
        return fill_orbitals(particle_count, degeneracy, explicit, species), explicit

    if not spec.selfconsistent:
        spherical = OscillatorFrequencies(*([spec.base_frequency] * 3))
        return fill_orbitals(particle_count, degeneracy, spherical, species), spherical

    seed = fill_orbitals(
        particle_count, degeneracy, seed_frequencies(spec.base_frequency), species
    )
    freqs = selfconsistent_frequencies(spec, seed)

    return fill_orbitals(particle_count, degeneracy, freqs, species), freqs


# ======================================================
# Variational Cranking
# ======================================================

class _Routhian:
    """F(lam, theta2, theta3) = <H - omega L1> with theta1 held at its retuning value."""

    def __init__(self, config, freqs, omega, theta1):
        self.config = config
        self.basis = mode_basis(freqs)
        self.theta1 = theta1
        self.form = cranked_hamiltonian(freqs, omega, self.basis)
        self.catalog = standard_generators(self.basis)

    def theta(self, x) -> Tuple[float, float, float]:
        return (self.theta1, float(x[1]), float(x[2]))

    def transformation(self, x) -> SymplecticMap:
        return transformation_map(float(x[0]), self.theta(x), self.basis)

    def __call__(self, x) -> float:
        return expectation(self.form, self.transformation(x), self.config)

    def gradient(self, x) -> np.ndarray:
        """
        dF/dlam    = -<{c1, H'}> at U
        dF/dtheta_k = -<{s_k, K}> at the squeeze, K = H' conjugated by exp(-i lam c1)
        """

        mixing = exp_generator(self.catalog["c1"], float(x[0]))
        squeeze = squeeze_map(self.theta(x), self.basis)
        inner = conjugate_form(self.form, mixing)

        return np.array([
            -covariance_commutator(self.catalog["c1"], self.form, mixing @ squeeze, self.config),
            -covariance_commutator(self.catalog["s2"], inner, squeeze, self.config),
            -covariance_commutator(self.catalog["s3"], inner, squeeze, self.config),
        ])


def _stationary_point(routhian: _Routhian, start: np.ndarray, settings: SolverSettings) -> np.ndarray:
    """Nelder-Mead descent followed by a root polish of the analytic gradient."""

    descent = minimize(
        routhian,
        start,
        method="Nelder-Mead",
        options={
            "xatol": settings.xatol,
            "fatol": settings.fatol,
            "maxiter": settings.maxiter,
            "maxfev": 2 * settings.maxiter,
        },
    )

    best = descent.x
    polished = root(routhian.gradient, best, method="hybr")

    if polished.success and routhian(polished.x) <= routhian(best) + settings.fatol:
        best = polished.x

    return np.asarray(best, dtype=float)


def _assemble_state(
    routhian: _Routhian,
    x: np.ndarray,
    freqs: OscillatorFrequencies,
    paper: CrankedParams,
    paper_value: float
) -> CrankedState:

    S = routhian.transformation(x)
    basis = routhian.basis
    value = routhian(x)

    params = replace(paper, lam=float(x[0]), theta=routhian.theta(x))

    return CrankedState(
        params=params,
        map=S,
        config=routhian.config,
        freqs=freqs,
        energy=expectation(oscillator_hamiltonian(freqs, basis), S, routhian.config),
        J=expectation(routhian.catalog["L1"], S, routhian.config),
        routhian=value,
        paper=paper,
        paper_gap=paper_value - value,
        gradient_norm=float(np.linalg.norm(routhian.gradient(x))),
    )


@lru_cache(maxsize=4096)
def _solve_cold(
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    omega: float,
    settings: SolverSettings
) -> CrankedState:
    return _solve(config, freqs, omega, None, settings)


def _solve(
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    omega: float,
    warm_start: Optional[CrankedParams],
    settings: SolverSettings
) -> CrankedState:

    paper = paper_params(freqs, omega, strict=True)
    retune = paper_params(freqs, 0.0, strict=True)

    routhian = _Routhian(config, freqs, omega, paper.theta[0])

    candidates = [
        np.array([paper.lam, paper.theta[1], paper.theta[2]]),
        np.array([0.0, retune.theta[1], retune.theta[2]]),
    ]
    if warm_start is not None:
        candidates.insert(0, np.array([warm_start.lam, warm_start.theta[1], warm_start.theta[2]]))

    values = [routhian(x) for x in candidates]
    paper_value = values[-2]
    start = candidates[int(np.argmin(values))]
    scale = max(1.0, abs(min(values)))

    if np.linalg.norm(routhian.gradient(start)) < 1e-12 * scale:
        x = start
    else:
        x = _stationary_point(routhian, start, settings)

    state = _assemble_state(routhian, x, freqs, paper, paper_value)

    if state.gradient_norm > settings.stationarity_tol * scale:
        raise NoConvergenceError(
            f"cranking at omega={omega} stalled with gradient {state.gradient_norm:.3e}"
        )

    return state


def solve_cranking(
    spec: HamiltonianSpec,
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    omega: float,
    warm_start: Optional[CrankedParams] = None,
    settings: SolverSettings = DEFAULT_SOLVER
) -> CrankedState:
    """
    Minimizes <H - omega L1> over (lam, theta2, theta3) with theta1 at the
    mode-1 retuning value.

    The descent starts from the lowest of the closed-form candidate, the
    non-rotating candidate and an optional warm start. A warm-started
    solution that lands away from the cold-start one is kept and logged.
    """

    crit = critical_frequency(freqs)
    if omega < 0:
        raise OutOfRangeError(f"cranking frequency must be non-negative, got {omega}")
    if omega >= crit:
        raise UnstableRegimeError(
            f"omega={omega} is at or beyond the critical frequency {crit}"
        )

    cold = _solve_cold(config, freqs, float(omega), settings)
    if warm_start is None:
        return cold

    warm = _solve(config, freqs, float(omega), warm_start, settings)

    shift = max(
        abs(warm.params.lam - cold.params.lam),
        abs(warm.params.theta[1] - cold.params.theta[1]),
        abs(warm.params.theta[2] - cold.params.theta[2]),
    )
    if shift > settings.branch_tol:
        logging.warning(
            f"warm-started branch at omega={omega} differs from cold start by {shift:.3e}"
        )

    return warm


def energy_gradient(state: CrankedState) -> np.ndarray:
    """
    Derivatives of <H - omega L1> along (lam, theta1, theta2, theta3)
    at the state; all vanish at a solution.
    """

    routhian = _Routhian(state.config, state.freqs, state.omega, state.params.theta[0])
    x = np.array([state.params.lam, state.params.theta[1], state.params.theta[2]])

    squeeze = squeeze_map(state.params.theta, routhian.basis)
    mixing = exp_generator(routhian.catalog["c1"], state.params.lam)
    inner = conjugate_form(routhian.form, mixing)
    d_theta1 = -covariance_commutator(routhian.catalog["s1"], inner, squeeze, state.config)

    gradient = routhian.gradient(x)
    return np.array([gradient[0], d_theta1, gradient[1], gradient[2]])


# ======================================================
# Momentum Map
# ======================================================

def momentum_map(state) -> float:
    """J = <L1>, for a CrankedState or a ManifoldPoint."""

    if isinstance(state, ManifoldPoint):
        S, freqs = state.total_map, state.state.freqs
    else:
        S, freqs = state.map, state.freqs

    L1 = standard_generators(mode_basis(freqs))["L1"]
    return expectation(L1, S, state.config)


def _forward_sweep(config, freqs, settings: SolverSettings):
    top = critical_frequency(freqs) * (1.0 - settings.critical_margin)
    grid = np.linspace(0.0, top, settings.sweep_points)
    return grid, [_solve_cold(config, freqs, float(omega), settings).J for omega in grid]


def invert_momentum_map(
    spec: HamiltonianSpec,
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    I: float,
    warm_start: Optional[CrankedParams] = None,
    settings: SolverSettings = DEFAULT_SOLVER
) -> CrankedState:
    """
    Cranking state with <L1> = I: a forward sweep brackets omega_I,
    Brent's method closes it.
    """

    if I < 0:
        raise OutOfRangeError(f"angular momentum must be non-negative, got {I}")
    if I == 0:
        return solve_cranking(spec, config, freqs, 0.0, warm_start, settings)

    omega_I = _invert(config, freqs, I, settings)
    state = solve_cranking(spec, config, freqs, omega_I, warm_start, settings)

    if abs(state.J - I) > settings.inversion_tol * max(1.0, I):
        raise NoConvergenceError(f"inversion at I={I} missed by {abs(state.J - I):.3e}")

    logging.info(f"Momentum map inverted: I={I:.6g} at omega={omega_I:.10f}")
    return state


def _invert(config, freqs, I: float, settings: SolverSettings) -> float:
    grid, values = _forward_sweep(config, freqs, settings)

    upper = next((j for j, J in enumerate(values) if J >= I), None)
    if upper is None or upper == 0:
        raise OutOfRangeError(
            f"I={I} is not attained below the critical frequency (max J={max(values):.6g})"
        )
    if values[upper] == I:
        return float(grid[upper])

    return float(brentq(
        lambda omega: _solve_cold(config, freqs, float(omega), settings).J - I,
        grid[upper - 1],
        grid[upper],
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        maxiter=200,
    ))


def state_at_momentum(
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    I: float,
    settings: SolverSettings = DEFAULT_SOLVER
) -> CrankedState:
    """
    Yrast family continued to negative I through J(-omega) = -J(omega),
    so it can be differentiated at I = 0.
    """

    if I == 0:
        return _solve_cold(config, freqs, 0.0, settings)

    omega_I = _invert(config, freqs, abs(I), settings)
    return _solve_cold(config, freqs, math.copysign(omega_I, I), settings)


def yrast_curve(
    spec: HamiltonianSpec,
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    I_max: float,
    steps: int,
    settings: SolverSettings = DEFAULT_SOLVER
) -> List[CrankedState]:
    """States at I = linspace(0, I_max, steps), each warm-started from the previous one."""

    if steps < 2:
        raise ValueError("yrast curve needs at least two steps")

    curve = []
    previous = None

    for I in np.linspace(0.0, I_max, steps):
        state = invert_momentum_map(spec, config, freqs, float(I), previous, settings)
        curve.append(state)
        previous = state.params

    energies = [state.energy for state in curve]
    if any(b < a - 1e-10 for a, b in zip(energies, energies[1:])):
        logging.warning("yrast energies decrease along the curve")

    return curve


# ======================================================
# Canonical Chart
# ======================================================

def manifold_point(state: CrankedState, phi: float) -> ManifoldPoint:
    rotation = exp_generator(standard_generators(state.basis)["L1"], phi)

    return ManifoldPoint(
        phi=float(phi) % (2.0 * math.pi),
        I=state.J,
        state=state,
        total_map=rotation @ state.map,
    )


# ======================================================
# Scalar Energy
# ======================================================
#
#   E = <H_sph> + kappa0 / 2 * sum_mu <Q_mu>^2
#
# Spherical oscillator plus the Hartree term of the isoscalar QQ
# interaction. The five <Q_mu> turn into each other orthogonally
# under rotations, so E is the same at every phi.

def spherical_hamiltonian(spec: HamiltonianSpec, basis) -> QuadraticForm:
    base = spec.base_frequency
    return oscillator_hamiltonian(OscillatorFrequencies(base, base, base), basis)


def scalar_energy(spec: HamiltonianSpec, point: ManifoldPoint) -> float:
    basis = point.state.basis
    S = point.total_map

    one_body = expectation(spherical_hamiltonian(spec, basis), S, point.config)
    moments = np.array([
        expectation(Q, S, point.config) for Q in quadrupole_components(basis).values()
    ])

    return float(one_body + 0.5 * spec.qq_isoscalar * (moments @ moments))


def moment_of_inertia(
    spec: HamiltonianSpec,
    config: SlaterConfiguration,
    freqs: OscillatorFrequencies,
    settings: SolverSettings = DEFAULT_SOLVER
) -> float:
    """
    dJ/domega at omega = 0. J is odd in omega, so J(h)/h is even and
    one Richardson step removes the h^2 term.
    """

    h = settings.inertia_step

    def slope(step):
        return solve_cranking(spec, config, freqs, step, settings=settings).J / step

    return (4.0 * slope(0.5 * h) - slope(h)) / 3.0


def rigid_inertia(state: CrankedState) -> float:
    """<sum (x2^2 + x3^2)> with unit mass."""

    catalog = standard_generators(state.basis)
    return expectation(catalog["x2_sq"] + catalog["x3_sq"], state.map, state.config)
