"""Exception hierarchy.

Value-like errors also derive from ValueError so callers that only know the builtins
keep working.
"""


class EvaError(Exception):
    """Root of every error raised by this package."""


class InputShapeError(EvaError, ValueError):
    """Sizes of two inputs do not agree (bit vector vs register, circuit vs state)."""


class InvalidInputError(EvaError, ValueError):
    pass


class ParseError(InvalidInputError):
    """Malformed input document."""


class HamiltonianParseError(ParseError):
    pass


class AnsatzParseError(ParseError):
    pass


class ConstraintError(EvaError, ValueError):
    """An input is well formed but violates a method precondition (e.g. single-axis ansatz)."""


class ResourceError(EvaError, MemoryError):
    """The request would need a dense object too large to build."""
