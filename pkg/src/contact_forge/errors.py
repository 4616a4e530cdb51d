"""Exception hierarchy shared by every module."""


class ContactForgeError(Exception):
    pass


class ParseError(ContactForgeError):
    """Malformed expression text.

    ``offset`` is a byte offset into the UTF-8 encoded input, ``expected``
    the set of token kinds that would have been accepted there.
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownFunction(ParseError):
    def __init__(self, name, offset):
        self.name = name
        ContactForgeError.__init__(self, f"unknown function {name!r} at offset {offset}")
        self.offset = offset
        self.expected = frozenset()


class UnboundSymbol(ContactForgeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"symbol {name!r} is not bound")


class DomainError(ContactForgeError):
    """Evaluation left the real domain of an operation."""

    def __init__(self, message, subexpr=None):
        self.subexpr = subexpr
        where = f" in {subexpr}" if subexpr is not None else ""
        super().__init__(f"{message}{where}")


class ChartMismatch(ContactForgeError):
    pass


class DegreeOverflow(ContactForgeError):
    pass


class ArityMismatch(ContactForgeError):
    pass


class SingularSystem(ContactForgeError):
    pass


class DegenerateVolume(ContactForgeError):
    pass


class DegenerateParametrization(ContactForgeError):
    pass


class StepSizeUnderflow(ContactForgeError):
    pass


class LeftDomain(ContactForgeError):
    pass


class BracketFailure(ContactForgeError):
    pass


class UnknownKind(ContactForgeError):
    pass


class ConfigError(ContactForgeError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")
