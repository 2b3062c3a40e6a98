"""Exception hierarchy shared across modules; the CLI maps each family to an exit code."""


class RegennError(Exception):
    pass


class ConfigError(RegennError, ValueError):
    """Bad command-line usage or configuration (exit status 1)."""


class DataError(RegennError, ValueError):
    """Malformed, inconsistent or too-short input data (exit status 2)."""


class NumericError(RegennError, ArithmeticError):
    """Non-finite values during training (exit status 3)."""
