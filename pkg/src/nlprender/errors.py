"""Exception hierarchy. The CLI maps these onto exit codes."""


class NlpRenderError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NlpRenderError, ValueError):
    """Invalid parameters, constraint specs or mapping descriptors."""


class DimensionError(NlpRenderError, ValueError):
    """Image or pyramid shapes that do not fit together."""


class DomainError(NlpRenderError, ValueError):
    """Input values outside the domain of an operation (NaN, negative, ...)."""


class ConstraintViolation(NlpRenderError, ValueError):
    """An image that does not satisfy a display constraint."""


class NumericalError(NlpRenderError, ArithmeticError):
    """Non-finite values produced during optimization."""


class FormatError(NlpRenderError, ValueError):
    """Malformed or unsupported image file.

    ``offset`` is the byte position where decoding failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
