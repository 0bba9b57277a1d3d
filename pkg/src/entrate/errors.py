"""Exception hierarchy shared by the library and the command line front end."""


class EntrateError(Exception):
    """Base class for all errors raised by entrate."""

    exit_code = 1


class InputError(EntrateError, ValueError):
    """Malformed input: bad symbols, mismatched alphabets, invalid parameters."""

    exit_code = 2


class ValidationError(InputError):
    """A model failed its validator; the report is attached."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ResourceError(EntrateError, MemoryError):
    """An enumeration or search would exceed a configured cap."""

    exit_code = 3


class ContractError(EntrateError, ArithmeticError):
    """A numerical contract that should hold was observed to fail."""

    exit_code = 1
