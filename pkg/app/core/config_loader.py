import configparser
import difflib
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

from app.core.errors import ParseError, ValidationError
from app.core import settings


# ======================================================
# Run Configuration
# ======================================================
#
# INI text: [system], [scenario], [output] and optional
# [tolerances]; "#" starts a comment line. The grammar is
# documented in configs/README.md.

SCENARIOS = (
    "crank-sweep",
    "yrast",
    "canonical-check",
    "isotropy-check",
    "scissors",
    "angle-shift",
)

FORMATS = ("csv", "json", "xlsx")
SPLITTINGS = ("frequency_difference", "angle_operator")

SYSTEM_KEYS = (
    "Z", "N", "degeneracy", "base_frequency", "qq_isoscalar", "qq_isovector",
    "selfconsistent", "w1", "w2", "w3", "scale",
)
SCENARIO_KEYS = ("name", "omega_max", "I_max", "steps", "phi", "I", "eta_max", "splitting")
OUTPUT_KEYS = ("format", "path", "precision")
TOLERANCE_KEYS = (
    "inertia_step", "tangent_step", "angle_step", "restoring_step",
    "solver_xatol", "solver_fatol", "stationarity_tol", "inversion_tol",
    "sweep_points", "critical_margin", "pairing_threshold", "diagonal_threshold",
)

KNOWN = {
    "system": SYSTEM_KEYS,
    "scenario": SCENARIO_KEYS,
    "output": OUTPUT_KEYS,
    "tolerances": TOLERANCE_KEYS,
}
REQUIRED_SECTIONS = ("system", "scenario")
INTEGER_TOLERANCES = ("sweep_points",)


@dataclass(frozen=True)
class SystemSection:

    Z: int
    N: int
    degeneracy: int = settings.DEFAULT_DEGENERACY
    base_frequency: float = settings.DEFAULT_BASE_FREQUENCY
    qq_isoscalar: float = settings.DEFAULT_QQ_ISOSCALAR
    qq_isovector: float = settings.DEFAULT_QQ_ISOVECTOR
    selfconsistent: bool = True
    w1: Optional[float] = None
    w2: Optional[float] = None
    w3: Optional[float] = None
    scale: float = 1.0

    @property
    def explicit_frequencies(self) -> bool:
        return self.w1 is not None


@dataclass(frozen=True)
class ScenarioSection:

    name: str
    omega_max: Optional[float] = None
    I_max: Optional[float] = None
    steps: int = settings.DEFAULT_STEPS
    phi: float = 0.0
    I: Optional[float] = None
    eta_max: float = settings.DEFAULT_ETA_MAX
    splitting: str = settings.SCISSORS_SPLITTING


@dataclass(frozen=True)
class OutputSection:

    format: str = settings.DEFAULT_FORMAT
    path: Optional[str] = None
    precision: int = settings.DEFAULT_PRECISION


@dataclass(frozen=True)
class Tolerances:

    inertia_step: float = settings.INERTIA_STEP
    tangent_step: float = settings.TANGENT_STEP
    angle_step: float = settings.ANGLE_STEP
    restoring_step: float = settings.RESTORING_STEP
    solver_xatol: float = settings.SOLVER_XATOL
    solver_fatol: float = settings.SOLVER_FATOL
    stationarity_tol: float = settings.STATIONARITY_TOL
    inversion_tol: float = settings.INVERSION_TOL
    sweep_points: int = settings.SWEEP_POINTS
    critical_margin: float = settings.CRITICAL_MARGIN
    pairing_threshold: float = settings.PAIRING_THRESHOLD
    diagonal_threshold: float = settings.DIAGONAL_THRESHOLD


@dataclass(frozen=True)
class RunConfig:

    system: SystemSection
    scenario: ScenarioSection
    output: OutputSection = OutputSection()
    tolerances: Tolerances = field(default_factory=Tolerances)

    def metadata(self) -> Dict[str, Any]:
        """Flat config echo with section-qualified keys; unset values omitted."""

        echo = {"library_version": settings.LIBRARY_VERSION}

        for section in ("system", "scenario", "output", "tolerances"):
            for key, value in asdict(getattr(self, section)).items():
                if value is not None and not (section == "output" and key == "path"):
                    echo[f"{section}.{key}"] = value

        return echo


# ======================================================
# Parsing
# ======================================================

def _reader() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None,
        comment_prefixes=("#",),
        inline_comment_prefixes=None,
        strict=True,
        empty_lines_in_values=False,
    )
    parser.optionxform = str
    return parser


def _suggest(word: str, candidates) -> str:
    matches = difflib.get_close_matches(word, candidates, n=1)
    return f"; did you mean '{matches[0]}'?" if matches else ""


def _read(text: str) -> configparser.ConfigParser:
    parser = _reader()

    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key-value line before any [section] header", exc.lineno) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ParseError(exc.message.split(":")[-1].strip() or "duplicate entry", exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("line is neither a [section], a comment nor 'key = value'", line) from exc
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc

    return parser


def _number(section: str, key: str, raw: str, kind=float):
    qualified = f"{section}.{key}"

    try:
        if kind is int:
            value = int(raw)
        else:
            value = float(raw)
    except ValueError as exc:
        expected = "an integer" if kind is int else "a number"
        raise ValidationError(qualified, f"expected {expected}, got '{raw}'") from exc

    if kind is float and not math.isfinite(value):
        raise ValidationError(qualified, f"must be finite, got '{raw}'")

    return value


def _boolean(section: str, key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValidationError(f"{section}.{key}", f"expected true or false, got '{raw}'")


def _check(condition: bool, key: str, message: str):
    if not condition:
        raise ValidationError(key, message)


def _system(values: Dict[str, str]) -> SystemSection:
    for required in ("Z", "N"):
        _check(required in values, f"system.{required}", "missing required key")

    parsed = {}
    for key, raw in values.items():
        if key in ("Z", "N", "degeneracy"):
            parsed[key] = _number("system", key, raw, int)
        elif key == "selfconsistent":
            parsed[key] = _boolean("system", key, raw)
        else:
            parsed[key] = _number("system", key, raw)

    section = SystemSection(**parsed)

    _check(section.Z >= 1, "system.Z", "must be >= 1")
    _check(section.N >= 1, "system.N", "must be >= 1")
    _check(section.degeneracy >= 1, "system.degeneracy", "must be >= 1")
    _check(section.base_frequency > 0, "system.base_frequency", "must be positive")
    _check(section.scale > 0, "system.scale", "must be positive")

    given = [k for k in ("w1", "w2", "w3") if getattr(section, k) is not None]
    if given:
        missing = [k for k in ("w1", "w2", "w3") if k not in given]
        _check(not missing, f"system.{(missing or ['w1'])[0]}",
               "explicit frequencies need all of w1, w2, w3")
        for k in given:
            _check(getattr(section, k) > 0, f"system.{k}", "must be positive")

    return section


def _scenario(values: Dict[str, str], requested: Optional[str]) -> ScenarioSection:
    name = values.get("name")

    if name is not None:
        _check(name in SCENARIOS, "scenario.name",
               f"unknown scenario '{name}'{_suggest(name, SCENARIOS)}")
    if requested is not None and name is not None:
        _check(name == requested, "scenario.name",
               f"config is for '{name}' but '{requested}' was requested")

    name = requested or name
    _check(name is not None, "scenario.name", "missing scenario name")

    parsed = {"name": name}
    for key, raw in values.items():
        if key == "name":
            continue
        if key == "steps":
            parsed[key] = _number("scenario", key, raw, int)
        elif key == "splitting":
            _check(raw in SPLITTINGS, "scenario.splitting",
                   f"expected one of {', '.join(SPLITTINGS)}{_suggest(raw, SPLITTINGS)}")
            parsed[key] = raw
        else:
            parsed[key] = _number("scenario", key, raw)

    section = ScenarioSection(**parsed)
    _scenario_ranges(section)

    return section


def _scenario_ranges(section: ScenarioSection):
    name = section.name

    if name == "crank-sweep":
        _check(section.omega_max is not None, "scenario.omega_max", "required for crank-sweep")
        _check(section.omega_max >= 0, "scenario.omega_max", "must be >= 0")
        _check(section.steps >= 1, "scenario.steps", "must be >= 1")

    if name in ("yrast", "canonical-check"):
        _check(section.I_max is not None, "scenario.I_max", f"required for {name}")
        _check(section.I_max >= 0, "scenario.I_max", "must be >= 0")
        _check(section.steps >= (3 if name == "canonical-check" else 2),
               "scenario.steps", f"too few steps for {name}")

    if name == "canonical-check":
        _check(section.I_max > 0, "scenario.I_max", "canonical-check needs I_max > 0")
        if section.I is not None:
            _check(0 < section.I < section.I_max, "scenario.I", "must lie strictly inside (0, I_max)")

    if name == "angle-shift":
        _check(0 <= section.eta_max < 1, "scenario.eta_max", "must lie in [0, 1)")
        _check(section.steps >= 1, "scenario.steps", "must be >= 1")


def _output(values: Dict[str, str]) -> OutputSection:
    parsed = {}

    for key, raw in values.items():
        if key == "format":
            _check(raw in FORMATS, "output.format",
                   f"expected one of {', '.join(FORMATS)}{_suggest(raw, FORMATS)}")
            parsed[key] = raw
        elif key == "precision":
            parsed[key] = _number("output", key, raw, int)
        else:
            parsed[key] = raw

    section = OutputSection(**parsed)
    _check(1 <= section.precision <= 17, "output.precision", "must lie in 1..17")

    return section


def _tolerances(values: Dict[str, str]) -> Tolerances:
    parsed = {
        key: _number("tolerances", key, raw, int if key in INTEGER_TOLERANCES else float)
        for key, raw in values.items()
    }
    section = Tolerances(**parsed)

    for key, value in asdict(section).items():
        _check(value > 0, f"tolerances.{key}", "must be positive")
    _check(section.sweep_points >= 2, "tolerances.sweep_points", "must be >= 2")
    _check(section.critical_margin < 1, "tolerances.critical_margin", "must be < 1")

    return section


def parse_config(text: str, scenario: Optional[str] = None) -> RunConfig:
    """
    Parses and validates a run configuration.

    scenario, when given, is the subcommand being run; a scenario.name
    in the file must then agree with it.
    """

    parser = _read(text)

    for section in parser.sections():
        if section not in KNOWN:
            raise ValidationError(section, f"unknown section{_suggest(section, KNOWN)}")
        for key in parser[section]:
            if key not in KNOWN[section]:
                raise ValidationError(
                    f"{section}.{key}", f"unknown key{_suggest(key, KNOWN[section])}"
                )

    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section) and not (section == "scenario" and scenario):
            raise ValidationError(section, "missing required section")

    def values(section):
        return dict(parser[section]) if parser.has_section(section) else {}

    return RunConfig(
        system=_system(values("system")),
        scenario=_scenario(values("scenario"), scenario),
        output=_output(values("output")),
        tolerances=_tolerances(values("tolerances")),
    )


def check_preconditions(config: RunConfig, critical_frequency: float):
    """Range checks that need the ground-state frequencies."""

    scenario = config.scenario

    if scenario.name == "crank-sweep" and scenario.omega_max >= critical_frequency:
        raise ValidationError(
            "scenario.omega_max",
            f"{scenario.omega_max} is not below the critical frequency {critical_frequency:.10g}",
        )
