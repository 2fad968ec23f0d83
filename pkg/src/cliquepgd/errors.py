"""Exception types shared across the package.

The CLI maps these onto exit codes: input/config problems exit with 2,
numeric failures with 3, oracle failures with 4.
"""


class InputError(ValueError):
    """Invalid argument, dimension mismatch, or malformed configuration."""


class InfeasibleSetError(InputError):
    """A constraint set specification is empty (e.g. inconsistent A z = b)."""


class UnsupportedError(InputError):
    """The requested computation is outside the supported problem class."""


class NumericError(RuntimeError):
    """A solver produced non-finite values or failed a numeric postcondition."""


class OracleError(RuntimeError):
    """A ground-truth provider (Dykstra, numeric projection) failed to converge."""


class ResourceLimitError(RuntimeError):
    """A configurable resource cap (e.g. clique count) was exceeded."""
