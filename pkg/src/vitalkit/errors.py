"""Exception types shared across the package."""


class VitalkitError(Exception):
    """Base class for all package errors."""


class ValidationError(VitalkitError):
    """A parameter or input fails its documented precondition."""


class NoClosedFormError(VitalkitError):
    """The requested quantity has no closed-form route for this model."""


class ConvergenceError(VitalkitError):
    """An iterative numerical procedure failed to converge."""


class DataFormatError(VitalkitError):
    """An input file does not match its documented schema."""
