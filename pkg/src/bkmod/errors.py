"""Exception hierarchy shared by every layer of the package."""


class BKError(Exception):
    """Base class for all package errors."""


class ContextMismatch(BKError):
    pass


class DimensionMismatch(BKError):
    pass


class InsufficientPrecision(BKError):
    """The requested answer is not determined at the working (N, M)."""


class ExactDivisionError(BKError):
    """A division that must be exact was not; this signals an arithmetic bug."""


class NotEisenstein(BKError):
    pass


class DegenerateFrobenius(BKError):
    pass


class HeightError(BKError):
    pass


class NotAMorphism(BKError):
    pass


class MissingProvenance(BKError):
    pass


class MissingMonodromy(BKError):
    pass


class NotComposable(BKError):
    pass


class NotAResolution(BKError):
    pass


class FilMembershipError(BKError):
    pass


class ParseError(BKError):
    """Syntax or semantic error in a module file, with a source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        self.bare_message = message
        if line:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
