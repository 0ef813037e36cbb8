"""Exception types shared across the package.

Validation problems (bad labels, dimension mismatches, malformed input,
exceeded size guardrails) raise :class:`ValidationError` or one of its
subclasses.  Iterative routines that fail to converge or to meet a residual
tolerance raise :class:`NumericalFailureError`.  The command line maps the
former to exit code 2 and the latter to exit code 3.
"""


class QcapError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(QcapError):
    """An input violates a documented precondition."""


class LabelCollisionError(ValidationError):
    """Two subsystems in one tensor space share a label."""


class UnknownLabelError(ValidationError):
    """A subsystem label does not exist in the given space."""


class DimensionMismatchError(ValidationError):
    """Operator or state dimensions do not line up."""


class ResourceLimitError(ValidationError):
    """A requested computation exceeds a built-in size guardrail."""


class NumericalFailureError(QcapError):
    """An iterative numerical routine failed to reach its tolerance."""
