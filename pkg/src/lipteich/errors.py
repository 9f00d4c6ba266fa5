"""Shared exception types.

The CLI maps InputError to exit code 2 and PreconditionError to exit
code 3; numeric non-convergence is reported in-band, never by exit code.
"""


class InputError(ValueError):
    """Malformed or invalid input data."""


class PreconditionError(ValueError):
    """Operation invoked outside its stated domain."""


class ChartDomainError(PreconditionError):
    """Chart coordinates fall outside the parameter domain."""


class ConvergenceError(RuntimeError):
    """An iterative scheme did not reach its tolerance within its cap."""
