"""Exception types shared across the package."""


class InputDomainError(ValueError):
    """An argument lies outside the domain an operation accepts."""


class ConfigError(InputDomainError):
    """A scenario configuration file is malformed or inconsistent."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    The last iterate and its residual are kept so callers can decide
    whether the partial result is usable.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class DegenerateStepError(ArithmeticError):
    """A manifold retraction was asked to normalise a (near) zero entry."""


class RankDeficiencyError(ArithmeticError):
    """A Gram matrix is too ill-conditioned to invert."""
