"""Exceptions raised by fsibeam.

Every error carries the process exit code the CLI reports for it
(see fsi_vars.EXIT_CODES).
"""


class FSIError(Exception):
    exit_code = 4


class CollisionError(FSIError):
    """The beam touched (or came closer than allowed to) the channel bottom."""
    exit_code = 2

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class HorizonFloorError(FSIError):
    exit_code = 3

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SolverError(FSIError):
    exit_code = 4

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(FSIError):
    exit_code = 5

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DimensionError(FSIError, ValueError):
    exit_code = 4


class DomainError(FSIError, ValueError):
    exit_code = 4


class PreconditionError(FSIError, ValueError):
    exit_code = 4


class CompatibilityError(FSIError, ValueError):
    """Initial data violates one of the compatibility conditions (named in `condition`)."""
    exit_code = 4

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class BallError(FSIError):
    """An iterate left the admissible ball; `bound` is "norm" or "gap"."""
    exit_code = 4

    def __init__(self, message, bound):
        super().__init__(message)
        self.bound = bound
