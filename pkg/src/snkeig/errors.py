class SnkeigError(Exception):
    """Base class for package errors."""


class ConfigurationError(SnkeigError, ValueError):
    """Unsupported or inconsistent input."""


class InputError(SnkeigError, ValueError):
    """Malformed numerical input (non-finite sources, bad shapes)."""


class SingularMatrixError(SnkeigError, ArithmeticError):
    pass


class NonFissileError(SnkeigError, ArithmeticError):
    """The fission operator annihilates the current vector."""


class ConvergenceError(SnkeigError, RuntimeError):
    pass
