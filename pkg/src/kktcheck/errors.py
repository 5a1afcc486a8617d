"""Exception hierarchy.

Everything raised on purpose by this package derives from :class:`KktError`,
so callers (the CLI in particular) can map failures to exit codes without
catching unrelated bugs.
"""


class KktError(Exception):
    """Base class for all package errors."""


class ParseError(KktError, ValueError):
    """Malformed expression or problem file.

    ``offset`` is the UTF-8 byte offset into the parsed text (expressions);
    ``line`` is the 1-based line number (problem files).
    """

    def __init__(self, message, offset=None, line=None):
        self.reason = message
        self.offset = offset
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class UnknownIdentifier(ParseError):
    pass


class VariableOutOfRange(ParseError):
    pass


class DomainError(KktError, ArithmeticError):
    """Expression evaluated outside its domain (log of x <= 0, division by zero, ...)."""


class DimensionMismatch(KktError, ValueError):
    pass


class OutsideDomain(KktError, ValueError):
    """Point is not strictly inside the problem's open box domain."""


class PreconditionError(KktError):
    """An operation refused to run because its input does not meet its contract."""


class NumericalError(KktError):
    """A numerical construction failed; the CLI maps these to exit code 3."""


class RankDeficient(NumericalError):
    pass


class LicqFailure(NumericalError):
    pass


class DependentFamily(NumericalError):
    """Objective gradient lies in the span of the active gradients."""


class NoConvergence(NumericalError):
    pass


class JacobianSingular(NumericalError):
    pass


class IdentityCheckFailed(NumericalError):
    """Jacobian at the origin of a dual-basis chart is not the identity."""


class NoDescentFound(NumericalError):
    pass
