"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: InputError/ContractError -> 1,
NumericalError -> 2.
"""


class GmvLabError(Exception):
    """Base class for all package errors."""


class InputError(GmvLabError):
    """Bad user-supplied data: shapes, ranges, files, config values."""


class ContractError(GmvLabError):
    """An internal precondition was violated by the caller."""


class NumericalError(GmvLabError):
    """Computation produced non-finite values or failed to converge."""
