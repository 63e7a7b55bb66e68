# ======================================================
# Exception Hierarchy
# ======================================================


class PhaseSpaceError(Exception):
    """Base class for every error raised by the toolkit."""


# ======================================================
# Configuration Errors (exit status 2)
# ======================================================

class ConfigError(PhaseSpaceError):
    pass


class ParseError(ConfigError):

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{location}")


class ValidationError(ConfigError):

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


# ======================================================
# Domain Errors (exit status 3)
# ======================================================

class DomainError(PhaseSpaceError):
    pass


class UnstableRegimeError(DomainError):
    pass


class OpenShellError(DomainError):
    pass


class NoConvergenceError(DomainError):
    pass


class OutOfRangeError(DomainError):
    pass


class DegenerateDeformationError(DomainError):
    pass


class NonSmoothPathError(DomainError):
    pass


class BasisMismatchError(DomainError):
    pass


class SymplecticityError(DomainError):
    pass


# ======================================================
# Output Errors (exit status 4)
# ======================================================

class OutputError(PhaseSpaceError):
    pass
