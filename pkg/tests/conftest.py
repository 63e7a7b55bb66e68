import pytest

from app.engines.collective_manifold import (
    HamiltonianSpec,
    ground_state,
    solve_cranking,
)
from app.engines.scissors_mode import build_two_fluid


# ======================================================
# Reference System
# ======================================================
#
# Eight nucleons, spin-isospin degeneracy 4: the s orbital and the
# lowest p orbital along the long axis. Self-consistent frequencies
# are (2^(1/3), 2^(1/3), 2^(-2/3)) times the base frequency.

REFERENCE_COUNT = 8
REFERENCE_DEGENERACY = 4


@pytest.fixture(scope="session")
def reference_spec():
    return HamiltonianSpec(base_frequency=1.0)


@pytest.fixture(scope="session")
def reference_system(reference_spec):
    config, freqs = ground_state(reference_spec, REFERENCE_COUNT, REFERENCE_DEGENERACY)
    return reference_spec, config, freqs


@pytest.fixture(scope="session")
def reference_state(reference_system):
    spec, config, freqs = reference_system
    return solve_cranking(spec, config, freqs, 0.0)


@pytest.fixture(scope="session")
def two_fluid(reference_spec):
    return build_two_fluid(reference_spec, 4, 4, 2)
