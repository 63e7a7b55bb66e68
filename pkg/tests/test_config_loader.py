from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from app.core import settings as defaults
from app.core.config_loader import (
    SCENARIOS,
    check_preconditions,
    parse_config,
)
from app.core.errors import ConfigError, ParseError, ValidationError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
[system]
Z = 4
N = 4

[scenario]
name = isotropy-check
"""

MALFORMED = {
    "missing_section_header.ini": ParseError,
    "bad_line.ini": ParseError,
    "duplicate_key.ini": ParseError,
    "misspelled_key.ini": ValidationError,
    "misspelled_section.ini": ValidationError,
    "non_numeric_count.ini": ValidationError,
    "negative_frequency.ini": ValidationError,
    "unknown_format.ini": ValidationError,
    "partial_frequencies.ini": ValidationError,
}


def document(**scenario) -> str:
    lines = ["[system]", "Z = 4", "N = 4", "", "[scenario]"]
    lines += [f"{key} = {value}" for key, value in scenario.items()]
    return "\n".join(lines) + "\n"


# ======================================================
# Defaults
# ======================================================

def test_minimal_document_gets_defaults():
    config = parse_config(MINIMAL)

    assert config.system.degeneracy == 2
    assert config.system.selfconsistent
    assert not config.system.explicit_frequencies
    assert config.output.precision == 12
    assert config.output.format == "csv"
    assert config.tolerances.inertia_step == defaults.INERTIA_STEP


def test_subcommand_supplies_missing_scenario_section():
    config = parse_config("[system]\nZ = 2\nN = 2\n", scenario="isotropy-check")
    assert config.scenario.name == "isotropy-check"


def test_subcommand_must_agree_with_file():
    with pytest.raises(ValidationError, match="scenario.name"):
        parse_config(MINIMAL, scenario="yrast")


def test_tolerance_overrides_are_echoed():
    text = MINIMAL + "\n[tolerances]\ninertia_step = 2e-4\nsweep_points = 40\n"
    metadata = parse_config(text).metadata()

    assert metadata["tolerances.inertia_step"] == 2e-4
    assert metadata["tolerances.sweep_points"] == 40
    assert metadata["library_version"] == defaults.LIBRARY_VERSION
    assert "output.path" not in metadata


def test_explicit_frequencies_are_read():
    text = MINIMAL.replace("N = 4", "N = 4\nw1 = 1.0\nw2 = 1.2\nw3 = 0.8")
    config = parse_config(text)

    assert config.system.explicit_frequencies
    assert (config.system.w1, config.system.w2, config.system.w3) == (1.0, 1.2, 0.8)


def test_hash_inside_value_is_not_a_comment():
    text = MINIMAL + "\n[output]\npath = out/run#1.csv\n"
    assert parse_config(text).output.path == "out/run#1.csv"


# ======================================================
# Rejections
# ======================================================

def test_misspelled_key_suggests_nearest():
    with pytest.raises(ValidationError) as raised:
        parse_config(document(name="crank-sweep", omga_max=0.3))

    assert raised.value.key == "scenario.omga_max"
    assert "omega_max" in str(raised.value)


def test_parse_error_carries_line():
    with pytest.raises(ParseError) as raised:
        parse_config((CONFIGS / "malformed" / "bad_line.ini").read_text())
    assert raised.value.line == 4


@pytest.mark.parametrize("name, error", sorted(MALFORMED.items()))
def test_malformed_configs_are_rejected(name, error):
    with pytest.raises(error):
        parse_config((CONFIGS / "malformed" / name).read_text())


def test_omega_beyond_critical_is_rejected_at_dispatch():
    config = parse_config((CONFIGS / "malformed" / "beyond_critical.ini").read_text())

    with pytest.raises(ValidationError) as raised:
        check_preconditions(config, critical_frequency=0.8)
    assert raised.value.key == "scenario.omega_max"


@pytest.mark.parametrize("scenario, keys, bad_key", [
    ("crank-sweep", {"steps": 3}, "scenario.omega_max"),
    ("crank-sweep", {"omega_max": -0.1}, "scenario.omega_max"),
    ("yrast", {"I_max": 2.0, "steps": 1}, "scenario.steps"),
    ("canonical-check", {"I_max": 2.0, "I": 2.0}, "scenario.I"),
    ("angle-shift", {"eta_max": 1.0}, "scenario.eta_max"),
    ("scissors", {"splitting": "geometric"}, "scenario.splitting"),
])
def test_scenario_ranges(scenario, keys, bad_key):
    with pytest.raises(ValidationError) as raised:
        parse_config(document(name=scenario, **keys))
    assert raised.value.key == bad_key


def test_unknown_scenario_is_rejected():
    with pytest.raises(ValidationError, match="yrast"):
        parse_config(document(name="yarst"))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 4), st.floats(0.1, 10.0))
def test_valid_systems_parse(Z, N, degeneracy, base):
    text = (
        f"[system]\nZ = {Z}\nN = {N}\ndegeneracy = {degeneracy}\n"
        f"base_frequency = {base!r}\n\n[scenario]\nname = isotropy-check\n"
    )
    system = parse_config(text).system

    assert (system.Z, system.N, system.degeneracy) == (Z, N, degeneracy)
    assert system.base_frequency == base


@settings(max_examples=50, deadline=None)
@given(st.text(max_size=200))
def test_arbitrary_text_fails_only_with_config_errors(text):
    try:
        parse_config(text)
    except ConfigError:
        pass


# ======================================================
# Shipped Examples
# ======================================================

@pytest.mark.parametrize("scenario", SCENARIOS)
def test_example_configs_parse(scenario):
    config = parse_config((CONFIGS / "examples" / f"{scenario}.ini").read_text(), scenario)
    assert config.scenario.name == scenario
