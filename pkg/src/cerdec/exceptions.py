"""Exception hierarchy shared across the package.

CLI exit-code mapping: ValidationError and SchemaError are user/input
problems (exit 1), everything else deriving from CerdecError is a runtime
failure (exit 2).
"""


class CerdecError(Exception):
    """Base class for all package errors."""


class DimensionError(CerdecError):
    """Operands act on different qubit counts or have mismatched shapes."""


class CapacityError(CerdecError):
    """Requested dense object exceeds a configured size guard."""


class ValidationError(CerdecError):
    """Input violates a documented invariant (not CPTP, bad distribution, ...)."""


class SchemaError(ValidationError):
    """Serialized file does not match its declared schema/version."""


class SamplingError(CerdecError):
    """A rejection-sampling loop exhausted its attempt budget."""


class FitError(CerdecError):
    """Too few usable points to fit a decay curve."""


class DegenerateSyndromeError(CerdecError):
    """Conditional probability mass for a syndrome is identically zero."""
