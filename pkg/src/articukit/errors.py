"""Exception hierarchy shared by every articukit module."""


class ArticuError(Exception):
    """Base class for all articukit errors."""


class ValidationError(ArticuError, ValueError):
    """Malformed input: wrong shapes, bad ranges, inconsistent data."""


class InvalidParameterError(ValidationError):
    """Joint parameters that violate their invariants (e.g. non-unit axis)."""


class UnsupportedMetricError(ArticuError):
    pass


class JointLimitError(ArticuError):
    pass


class ContactLostError(ArticuError):
    pass


class InsufficientSupportError(ArticuError):
    pass


class DegenerateFitError(ArticuError):
    pass
