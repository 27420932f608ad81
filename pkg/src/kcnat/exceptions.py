"""Exception hierarchy for kcnat.

Every error raised on purpose by the library derives from ``KCError`` so that
callers (the CLI in particular) can separate configuration/input problems from
programming errors.
"""


class KCError(Exception):
    """Base class for all library errors."""


class ImageLoadError(KCError):
    """An image file could not be decoded."""


class MalformedHeaderError(ImageLoadError):
    pass


class TruncatedPayloadError(ImageLoadError):
    pass


class UnsupportedFormatError(ImageLoadError):
    pass


class SizeMismatchError(ImageLoadError):
    pass


class ValidationError(KCError, ValueError):
    """Input failed a contract check (shape, finiteness, parameter range)."""


class NonFiniteError(ValidationError):
    pass


class DegenerateImageError(ValidationError):
    """Image has zero variance where a standardization was requested."""


class DegenerateVarianceError(ValidationError):
    """Sample variance is below the degeneracy threshold; kurtosis undefined."""


class KernelTooLongError(ValidationError):
    pass


class EmptyReportError(KCError):
    """Every subband was degenerate, nothing to report."""


class InsufficientSubbandsError(KCError):
    """Fewer than two non-degenerate subbands; the KC loss is undefined."""


class UnsupportedConfigurationError(KCError):
    pass


class DivergenceError(KCError):
    """The optimizer produced a non-finite objective.

    The partial trace recorded up to the failing iteration is attached as
    ``trace``.
    """

    def __init__(self, message, iteration, trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace
