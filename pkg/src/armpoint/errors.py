"""Exception types shared across the package."""


class ArmpointError(Exception):
    """Base class for all armpoint-specific errors."""


class DegenerateVector(ArmpointError):
    """A direction vector has near-zero length where a direction is required."""


class SeriesTooShort(ArmpointError):
    """A time series has too few samples for the requested operation."""


class ParseError(ArmpointError):
    """Malformed motion file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedChannel(ParseError):
    """A motion file declares a channel this reader cannot represent."""


class SchemaError(ArmpointError):
    """A clip/config document is missing a field or carries an invalid value."""

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"missing or invalid field: {field!r}")


class NoMovementFound(ArmpointError):
    """Segmentation found no displacement peak that clears the thresholds."""


class Unreachable(ArmpointError):
    """A pointing target lies outside the arm's reachable volume."""


class TargetOutOfRange(ArmpointError):
    """An episode target lies outside the environment's configured shell."""


class SteppedAfterDone(ArmpointError):
    """step() was called on an episode that already terminated."""


class DimensionMismatch(ArmpointError):
    """Array or network dimensions do not line up."""


class LengthMismatch(ArmpointError):
    """Parallel sequences have different lengths."""


class SkeletonMismatch(ArmpointError):
    """Two poses/states do not share the same skeleton."""


class NonFiniteLoss(ArmpointError):
    """A training loss or gradient became NaN/inf; parameters were restored."""


class IncompatibleCheckpoint(ArmpointError):
    """A checkpoint's dimensions do not match the evaluation environment."""


class EmptyInput(ArmpointError):
    """An aggregate operation received no data."""
