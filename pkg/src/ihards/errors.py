"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its stable exit-code contract (2 config, 3 data, 4 numeric).
"""


class IhardsError(Exception):
    exit_code = 1


class ConfigError(IhardsError, ValueError):
    """Invalid parameters, unknown architecture names, bad flag values."""

    exit_code = 2


class DataError(IhardsError):
    """Anything wrong with input data or on-disk containers."""

    exit_code = 3


class ParseError(DataError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class StructuralError(DataError, ValueError):
    """Missing files, length mismatches, absent classes."""


class CapacityError(DataError, ValueError):
    """A sampling pool is too small for a draw without replacement."""


class MappingError(DataError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ShapeError(DataError, ValueError):
    pass


class LabelError(DataError, ValueError):
    pass


class FormatError(DataError, ValueError):
    """Bad magic bytes or malformed container header."""


class VersionError(FormatError):
    pass


class CorruptionError(FormatError):
    """Truncated or internally inconsistent container."""


class NumericError(IhardsError, ArithmeticError):
    exit_code = 4
