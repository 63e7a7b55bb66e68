from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.analytics.sweep_engine import angle_shift_rows
from app.core.boson_algebra import SymplecticMap, SlaterConfiguration, exp_generator, standard_generators
from app.core.errors import BasisMismatchError, NonSmoothPathError, OutOfRangeError
from app.engines.collective_manifold import (
    HamiltonianSpec,
    manifold_point,
    solve_cranking,
    yrast_curve,
)
from app.engines.cranked_oscillator import OscillatorFrequencies
from app.engines.symplectic_geometry import (
    SO3_PAIRS,
    TangentVector,
    angle_shift_check,
    canonical_pair_check,
    decomposition_check,
    isotropy_check,
    orbit_tangent,
    path_tangent,
    symplectic_form,
)

GENERATORS = ("L1", "L2", "L3", "c1", "s1", "s2", "s3")


@pytest.fixture(scope="module")
def yrast(reference_system):
    spec, config, freqs = reference_system
    return yrast_curve(spec, config, freqs, 4.0, 9)


# ======================================================
# Symplectic Form
# ======================================================

def test_form_is_antisymmetric(reference_state):
    point = manifold_point(reference_state, 0.3)
    catalog = standard_generators(reference_state.basis)
    X, Y = TangentVector(point, catalog["c1"]), TangentVector(point, catalog["Q2"])

    assert symplectic_form(X, Y) == pytest.approx(-symplectic_form(Y, X), abs=1e-14)
    assert symplectic_form(X, X) == 0.0


def test_form_is_bilinear(reference_state):
    point = manifold_point(reference_state, 0.0)
    catalog = standard_generators(reference_state.basis)
    X = TangentVector(point, catalog["c1"])
    Y = TangentVector(point, catalog["L1"])

    assert symplectic_form(2.5 * X, Y) == pytest.approx(2.5 * symplectic_form(X, Y), rel=1e-14)


def test_vectors_at_different_points_are_rejected(reference_state):
    here = manifold_point(reference_state, 0.0)
    there = manifold_point(reference_state, 0.5)

    with pytest.raises(BasisMismatchError):
        symplectic_form(orbit_tangent(here), orbit_tangent(there))


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.sampled_from(GENERATORS), st.floats(-0.8, 0.8)), min_size=1, max_size=5),
    st.lists(st.tuples(*(st.integers(0, 3) for _ in range(3))), min_size=1, max_size=4, unique=True),
)
def test_rotation_orbit_form_is_structure_constant_times_momentum(reference_state, steps, orbitals):
    catalog = standard_generators(reference_state.basis)

    S = SymplecticMap.identity()
    for name, t in steps:
        S = exp_generator(catalog[name], t) @ S

    state = replace(reference_state, map=S, config=SlaterConfiguration(tuple(orbitals), 2))
    point = manifold_point(state, 0.0)
    L = [orbit_tangent(point, f"L{k + 1}") for k in range(3)]
    scale = max(1.0, float(np.max(np.abs(S.S))) ** 2)

    for (i, j), (k, sign) in SO3_PAIRS.items():
        expected = sign * isotropy_check(state).expect_L[k]
        assert symplectic_form(L[i], L[j]) == pytest.approx(expected, abs=1e-12 * scale * 10)


# ======================================================
# Isotropy and Decomposition
# ======================================================

def test_ground_state_is_isotropic(reference_state):
    report = isotropy_check(reference_state)

    assert report.max_expect < 1e-12
    assert report.max_pairwise < 1e-12
    assert report.isotropic


def test_cranked_state_is_not_isotropic(reference_system):
    spec, config, freqs = reference_system
    report = isotropy_check(solve_cranking(spec, config, freqs, 0.3))

    assert report.expect_L[0] > 0.1
    assert not report.isotropic
    assert report.identity_residual < 1e-10


def test_angle_operator_pairs_with_rotation_orbit(reference_state):
    catalog = standard_generators(reference_state.basis)
    report = decomposition_check(reference_state, [catalog["c1"], catalog["L1"]])

    assert report.orbit_dim == 1
    assert report.isotropy_residual == 0.0
    assert report.pairing_matrix[0, 0] > 0.0
    assert report.pairing_matrix[1, 0] == 0.0
    assert report.nondegenerate


def test_spherical_closed_shell_has_no_pairing():
    freqs = OscillatorFrequencies(1.0, 1.0, 1.0)
    spec = HamiltonianSpec(1.0, selfconsistent=False)
    config = SlaterConfiguration(((0, 0, 0),), 2)

    state = solve_cranking(spec, config, freqs, 0.0)
    catalog = standard_generators(state.basis)
    report = decomposition_check(state, [catalog["c1"]])

    assert not report.nondegenerate


# ======================================================
# Tangents and the Canonical Pair
# ======================================================

def test_kinked_path_is_rejected(reference_state):
    with pytest.raises(NonSmoothPathError):
        path_tangent(lambda t: manifold_point(reference_state, abs(t)), 0.0)


def test_rotation_path_tangent_is_the_orbit_generator(reference_system):
    spec, config, freqs = reference_system
    state = solve_cranking(spec, config, freqs, 0.2)

    tangent = path_tangent(lambda t: manifold_point(state, t), 0.4)
    expected = standard_generators(state.basis)["L1"]

    assert tangent.generator.allclose(expected, atol=1e-8)


def test_canonical_pair_at_interior_grid_points(yrast):
    for state in yrast[1:-1]:
        assert canonical_pair_check(yrast, state.J) == pytest.approx(1.0, abs=1e-6)


def test_canonical_pair_does_not_depend_on_angle(yrast):
    I = yrast[3].J
    values = [canonical_pair_check(yrast, I, phi) for phi in (0.0, 0.9, 2.5)]
    assert np.ptp(values) < 1e-8


def test_canonical_pair_needs_interior_momentum(yrast):
    with pytest.raises(OutOfRangeError):
        canonical_pair_check(yrast, yrast[-1].J)


# ======================================================
# Angle Shift
# ======================================================

def test_angle_shift_rate_matches_finite_difference():
    rows = angle_shift_rows(1.0, 16, 4, 0.4, 9)

    assert rows[0][0] == 0.0
    assert rows[0][1] == pytest.approx(0.0, abs=1e-14)
    for _, analytic, numeric, difference in rows:
        assert difference < 1e-8
        assert difference == pytest.approx(abs(analytic - numeric))


def test_angle_shift_at_identity_is_number_difference():
    freqs = OscillatorFrequencies(1.0, 1.0, 1.0)
    spec = HamiltonianSpec(1.0, selfconsistent=False)
    config = SlaterConfiguration(((0, 0, 0), (0, 0, 1)), 2)
    state = solve_cranking(spec, config, freqs, 0.0)

    _, sigma2, sigma3 = config.totals
    shift = angle_shift_check(state)

    assert shift.analytic == pytest.approx(-2.0 * (sigma2 - sigma3), rel=1e-12)
    assert shift.numeric == pytest.approx(shift.analytic, abs=1e-8)
