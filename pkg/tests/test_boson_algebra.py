import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.boson_algebra import (
    DIM,
    J_UNIT,
    ModeBasis,
    QuadraticForm,
    SlaterConfiguration,
    SymplecticMap,
    angular_momenta,
    commutator,
    conjugate_form,
    covariance_commutator,
    exp_generator,
    expectation,
    monomial_form,
    quadrupole_components,
    standard_generators,
)
from app.core.errors import BasisMismatchError, SymplecticityError
from fock_oracle import (
    commutator_block,
    form_matrix,
    matrix_block,
    quadratures,
    slater_expectation,
)

BASIS = ModeBasis(omega0=1.3)
CATALOG = standard_generators(BASIS)
Z_OPS = quadratures(BASIS.omega0)

NUMBER_CONSERVING = ("L1", "c1", "N1", "N2", "N3")


# ======================================================
# Strategies
# ======================================================

orbital = st.tuples(*(st.integers(0, 6) for _ in range(3)))

configurations = st.builds(
    lambda orbitals, degeneracy: SlaterConfiguration(tuple(orbitals), degeneracy),
    st.lists(orbital, min_size=1, max_size=5, unique=True),
    st.integers(1, 4),
)

low_orbital = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
low_configurations = st.builds(
    lambda orbitals: SlaterConfiguration(tuple(orbitals), 2),
    st.lists(low_orbital, min_size=1, max_size=4, unique=True),
)

generator_steps = st.lists(
    st.tuples(st.sampled_from(sorted(CATALOG)), st.floats(-0.5, 0.5)),
    min_size=1,
    max_size=6,
)


def compose(steps) -> SymplecticMap:
    S = SymplecticMap.identity()
    for name, t in steps:
        S = exp_generator(CATALOG[name], t) @ S
    return S


def random_form(seed: int) -> QuadraticForm:
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(DIM, DIM))
    return QuadraticForm(M, rng.normal(size=DIM), rng.normal(), BASIS)


# ======================================================
# Form Algebra
# ======================================================

def test_angle_operator_bracket_with_rotation_is_number_difference():
    bracket = commutator(CATALOG["c1"], CATALOG["L1"])
    expected = 2.0 * (CATALOG["N2"] - CATALOG["N3"])
    assert bracket.max_abs_difference(expected) < 1e-15


@pytest.mark.parametrize("i, j, k", [(0, 1, 2), (1, 2, 0), (2, 0, 1)])
def test_angular_momenta_close_into_so3(i, j, k):
    L = angular_momenta(BASIS)
    assert commutator(L[i], L[j]).allclose(L[k], atol=1e-15)


def test_commutator_is_antisymmetric():
    A, B = random_form(1), random_form(2)
    assert commutator(A, B).allclose(-commutator(B, A), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(sorted(CATALOG)), min_size=3, max_size=3))
def test_jacobi_identity_on_catalog_generators(names):
    A, B, C = (CATALOG[name] for name in names)
    total = (
        commutator(A, commutator(B, C))
        + commutator(B, commutator(C, A))
        + commutator(C, commutator(A, B))
    )
    assert total.allclose(QuadraticForm.zero(BASIS), atol=1e-12)


def test_rotation_commutes_with_isotropic_radius():
    r2 = CATALOG["x1_sq"] + CATALOG["x2_sq"] + CATALOG["x3_sq"]
    assert commutator(CATALOG["L1"], r2).allclose(QuadraticForm.zero(BASIS))


def test_linear_parts_bracket_to_constant():
    q = QuadraticForm(np.zeros((DIM, DIM)), np.eye(DIM)[0], basis=BASIS)
    p = QuadraticForm(np.zeros((DIM, DIM)), np.eye(DIM)[3], basis=BASIS)
    assert commutator(q, p).c == pytest.approx(1.0)


def test_forms_from_different_bases_are_rejected():
    with pytest.raises(BasisMismatchError):
        commutator(CATALOG["L1"], standard_generators(ModeBasis(omega0=2.0))["L1"])


def test_monomial_form_evaluates_the_polynomial():
    form = monomial_form(BASIS, {(0, 0): 2.0, (1, 4): -0.5}, constant=3.0)
    z = np.array([1.0, 2.0, 0.0, 0.0, 4.0, 0.0])
    assert form(z) == pytest.approx(2.0 * 1.0 + (-0.5) * 2.0 * 4.0 + 3.0)


def test_quadrupole_square_sum_is_rotation_invariant():
    quadrupoles = quadrupole_components(BASIS)
    R = exp_generator(CATALOG["L1"], 0.83)
    z = np.array([0.3, -1.1, 0.7, 0.0, 0.0, 0.0])

    before = sum(Q(z) ** 2 for Q in quadrupoles.values())
    after = sum(Q(R.S @ z) ** 2 for Q in quadrupoles.values())

    assert before == pytest.approx(4.0 * (z[:3] @ z[:3]) ** 2)
    assert after == pytest.approx(before, rel=1e-12)


# ======================================================
# Symplectic Maps
# ======================================================

@settings(max_examples=1000, deadline=None)
@given(generator_steps)
def test_random_compositions_stay_symplectic(steps):
    assert compose(steps).is_symplectic()


@settings(max_examples=50, deadline=None)
@given(generator_steps)
def test_inverse_undoes_the_map(steps):
    S = compose(steps)
    assert np.max(np.abs((S @ S.inverse()).S - np.eye(DIM))) < 1e-10


def test_exponential_composes_additively():
    L1 = CATALOG["L1"]
    product = exp_generator(L1, 0.4) @ exp_generator(L1, 0.5)
    assert np.allclose(product.S, exp_generator(L1, 0.9).S, atol=1e-14)


def test_full_turn_is_identity():
    assert np.allclose(exp_generator(CATALOG["L1"], 2.0 * math.pi).S, np.eye(DIM), atol=1e-12)


def test_exp_generator_rejects_linear_terms():
    with pytest.raises(ValueError):
        exp_generator(random_form(7), 1.0)


def test_conjugate_form_rejects_non_symplectic_maps():
    with pytest.raises(SymplecticityError):
        conjugate_form(CATALOG["L1"], SymplecticMap(2.0 * np.eye(DIM)))


def test_conjugation_preserves_brackets():
    S = compose([("c1", 0.3), ("s2", -0.2), ("L1", 0.7)])
    A, B = CATALOG["N2"], CATALOG["Q0"]
    lhs = conjugate_form(commutator(A, B), S)
    rhs = commutator(conjugate_form(A, S), conjugate_form(B, S))
    assert lhs.allclose(rhs, atol=1e-12)


def test_symplectic_unit_squares_to_minus_identity():
    assert np.array_equal(J_UNIT @ J_UNIT, -np.eye(DIM))


# ======================================================
# Fock-Space Oracle
# ======================================================

@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_commutators_match_matrices(name):
    other = CATALOG["c1"] if name != "c1" else CATALOG["L1"]

    bracket = commutator(CATALOG[name], other)
    lhs = commutator_block(form_matrix(CATALOG[name], Z_OPS), form_matrix(other, Z_OPS))
    rhs = 1j * matrix_block(form_matrix(bracket, Z_OPS))

    assert np.max(np.abs(lhs - rhs)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(configurations)
def test_catalog_expectations_match_fock_matrices(config):
    identity = SymplecticMap.identity()
    for name, form in CATALOG.items():
        expected = slater_expectation(form_matrix(form, Z_OPS), config)
        assert expectation(form, identity, config) == pytest.approx(expected, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    low_configurations,
    st.sampled_from(("L1", "c1")),
    st.floats(-1.5, 1.5),
    st.sampled_from(sorted(CATALOG)),
)
def test_rotated_expectations_match_fock_evolution(config, generator, t, name):
    S = exp_generator(CATALOG[generator], t)
    matrix = form_matrix(CATALOG[name], Z_OPS)
    expected = slater_expectation(
        matrix, config, rotation=(form_matrix(CATALOG[generator], Z_OPS), t)
    )
    assert expectation(CATALOG[name], S, config) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(configurations, st.sampled_from(NUMBER_CONSERVING), st.sampled_from(sorted(CATALOG)))
def test_covariance_commutator_matches_fock_commutator(config, first, second):
    A = form_matrix(CATALOG[first], Z_OPS)
    B = form_matrix(CATALOG[second], Z_OPS)
    bracket = A @ B - B @ A

    expected = slater_expectation(-1j * bracket, config)
    value = covariance_commutator(CATALOG[first], CATALOG[second], SymplecticMap.identity(), config)

    assert value == pytest.approx(expected, abs=1e-10)


# ======================================================
# Slater Expectations
# ======================================================

def test_ground_orbital_has_zero_quanta():
    config = SlaterConfiguration(((0, 0, 0),), 2)
    identity = SymplecticMap.identity()
    for k in (1, 2, 3):
        assert expectation(CATALOG[f"N{k}"], identity, config) == pytest.approx(0.0, abs=1e-15)


def test_rotation_moves_width_between_axes():
    config = SlaterConfiguration(((0, 0, 0), (0, 0, 1)), 2)
    phi = 0.6
    S = exp_generator(CATALOG["L1"], phi)

    x2, x3 = (expectation(CATALOG[f"x{k}_sq"], SymplecticMap.identity(), config) for k in (2, 3))
    rotated = expectation(CATALOG["x2_sq"], S, config)

    assert rotated == pytest.approx(math.cos(phi) ** 2 * x2 + math.sin(phi) ** 2 * x3, rel=1e-12)


def test_configuration_validation():
    with pytest.raises(ValueError):
        SlaterConfiguration(((0, 0, 0), (0, 0, 0)))
    with pytest.raises(ValueError):
        SlaterConfiguration(((0, -1, 0),))
    with pytest.raises(ValueError):
        SlaterConfiguration(((0, 0, 0),), species="deuteron")


def test_totals_count_half_quanta():
    config = SlaterConfiguration(((0, 0, 0), (0, 0, 1)), 4)
    assert config.totals == (4.0, 4.0, 8.0)
    assert config.particle_count == 8
