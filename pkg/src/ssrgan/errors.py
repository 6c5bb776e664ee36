"""Exception hierarchy shared by every ssrgan module."""


class SSRGANError(Exception):
    """Base class for all library errors."""


class ShapeError(SSRGANError, ValueError):
    """Operand extents are invalid or do not agree."""


class ContractError(SSRGANError, RuntimeError):
    """An API precondition was violated (e.g. backward from a non-scalar)."""


class ConfigError(SSRGANError, ValueError):
    pass


class RangeError(SSRGANError, ValueError):
    pass


class DegenerateBatchError(SSRGANError, ValueError):
    """Batch statistics are undefined (a channel holds a single element)."""


class DivergenceError(SSRGANError, FloatingPointError):
    """Training produced a non-finite gradient or loss."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UndefinedReferenceError(SSRGANError, ZeroDivisionError):
    """NMSE reference image has zero norm."""


class EmptyInputError(SSRGANError, ValueError):
    pass


class FormatError(SSRGANError, ValueError):
    """Unsupported image format or bit depth."""


class ImageIOError(SSRGANError, OSError):
    """Unreadable or truncated image file."""


class EmptyDatasetError(EmptyInputError):
    pass


class CheckpointError(SSRGANError, ValueError):
    """Malformed, corrupted or incompatible checkpoint file."""


class MalformedCSVError(SSRGANError, ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path} line {line}: {message}")
        self.path, self.line = str(path), line
