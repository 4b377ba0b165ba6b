"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateInputError(ValueError):
    """Input data cannot support the requested operation (e.g. too few
    distinct values, insufficient rank)."""


class FormatError(ValueError):
    """A serialized artifact is corrupt or truncated.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
