"""Exception types raised while parsing counts input."""


class ParseError(ValueError):
    """Malformed counts input. ``where`` names the offending row/column."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        if where is not None:
            message = f"{message} ({where})"
        super().__init__(message)


class HeaderError(ParseError):
    """Missing or malformed header row."""


class DuplicateLabelError(ParseError):
    """A population, category, or block label appears more than once."""


class CellValueError(ParseError):
    """A count cell is negative, non-integer, or not a number at all."""


class RaggedRowError(ParseError):
    """A body row has a different number of cells than the header."""


class ZeroRowError(ParseError):
    """A population has zero total count, so no proportions exist for it."""
