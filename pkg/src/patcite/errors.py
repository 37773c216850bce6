"""Shared exception types."""


class DataError(Exception):
    """Malformed or inconsistent input data (bad file format, bad offsets, ...).

    The CLI maps this to exit code 2; anything else unexpected is exit code 3.
    """


class FormatError(DataError):
    """A file does not conform to one of the interchange formats.

    Carries the offending line number when known.
    """

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)
        self.line = line
        self.path = path
