"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an array argument violates a documented precondition."""


class InconsistentEvidenceError(ValueError):
    """Raised when a label has zero likelihood under every hypothesis."""


class ConfigError(ValueError):
    """Raised for malformed or contradictory experiment configuration."""


class TensorFormatError(ValueError):
    """Raised when a prediction tensor file is malformed.

    Parameters
    ----------
    message : str
        Human-readable description of the problem.
    offset : int
        Byte offset into the file at which the problem was detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
