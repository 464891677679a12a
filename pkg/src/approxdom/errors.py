"""Exception hierarchy shared by the library and the CLI."""


class ApproxDomError(Exception):
    """Base class for all errors raised by this package."""


class ElectionFormatError(ApproxDomError, ValueError):
    """Malformed election, tournament or lottery input.

    ``line`` is the 1-based line number of the offending input line, or
    ``None`` when the problem is not tied to a single line.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GuardError(ApproxDomError):
    """A resource guard (search space, materialization size) was exceeded."""


class SolverError(ApproxDomError):
    """A lottery solver failed to produce a certified answer."""


class IterationLimitError(SolverError):
    """An iterative procedure ran out of its iteration budget."""

    def __init__(self, message, iterations=None, observed=None):
        self.iterations = iterations
        self.observed = observed
        super().__init__(message)


class AttackError(ApproxDomError):
    """The adversarial attack could not find a valid small set."""
