"""Exception types shared across the toolkit."""


class PacxplainError(Exception):
    """Base class for all toolkit errors."""


class LayoutError(PacxplainError):
    """Maze layout violates an invariant (border, connectivity, charset)."""


class UsageError(PacxplainError):
    """An operation was called with arguments outside its contract."""


class ShapeError(PacxplainError):
    """Tensor shapes are incompatible for the requested primitive."""

    def __init__(self, primitive, *shapes):
        self.primitive = primitive
        self.shapes = shapes
        super().__init__(f"{primitive}: incompatible shapes {shapes}")


class FormatError(PacxplainError):
    """A serialized file is malformed. Carries the byte offset of the problem."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class TrainingError(PacxplainError):
    """Numeric failure during training (NaN loss or gradient)."""


class DataError(PacxplainError):
    """Input data violates a precondition (e.g. reference without a direction)."""


class ConfigError(PacxplainError):
    """Run configuration is invalid (unknown key, bad value, missing file)."""


class CompatibilityError(PacxplainError):
    """Artifacts disagree (e.g. corpus vocabulary vs checkpoint embedding)."""
