"""Exception hierarchy shared by the estimators, the simulator and the CLI."""


class NpivError(Exception):
    """Base class for all errors raised by npivquad."""


class InvalidInputError(NpivError, ValueError):
    """Malformed arguments or violated preconditions."""


class DomainError(InvalidInputError):
    """A point lies outside the basis domain [0, 1]."""


class ConditioningError(NpivError, ArithmeticError):
    """A Gram matrix is numerically singular."""


class IllposednessOverflow(NpivError, ArithmeticError):
    """The estimated minimal singular value vanished, so tau_hat is infinite."""


class RangeExhaustedError(NpivError):
    """No index in the supplied sequence satisfies the defining inequality."""


class ResourceError(NpivError):
    """A brute-force routine was asked to run beyond its cost guard."""


class DgpError(InvalidInputError):
    """A synthetic model violates its construction invariants."""


class ConfigError(InvalidInputError):
    """An experiment configuration file is malformed; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
