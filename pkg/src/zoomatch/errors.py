"""Error taxonomy shared by all modules.

The split mirrors the CLI exit-code contract: usage problems are handled by
argparse itself, ``DataError`` family maps to exit 2, ``NumericError`` to 3.
"""


class ZoomatchError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ZoomatchError):
    """Invalid input data: bad ids, malformed values, broken preconditions."""


class InputError(DataError):
    """Ill-formed numeric input (non-finite entries, wrong shapes)."""


class EstimationError(DataError):
    """Too little data to estimate the requested quantity."""


class FormatError(DataError):
    """On-disk container violates its format contract."""


class ConfigError(DataError):
    """Infeasible or inconsistent configuration."""


class NumericError(ZoomatchError):
    """Numeric-domain failure (asymmetry, eigenvalues below tolerance, ...)."""
