"""Exception types shared across the package.

The CLI maps each class onto a stable exit code, so new failure modes
should subclass one of these rather than raising bare exceptions.
"""


class PnetError(Exception):
    """Base class for all package errors."""


class ValidationError(PnetError, ValueError):
    """Bad input: malformed config, invariant violation, degenerate alpha."""


class InfeasibleError(PnetError):
    """No protocol schedule exists for the given omega set and pass count."""


class InconclusiveError(PnetError):
    """The exhaustive search hit its node budget before reaching a verdict."""


class VerificationError(PnetError):
    """A schedule or QFI matrix failed a saturation or consistency check."""
