class IsobenefitError(Exception):
    """Base class for all package errors."""


class DimensionError(IsobenefitError, ValueError):
    pass


class ParameterError(IsobenefitError, ValueError):
    pass


class InfeasibleConfigError(IsobenefitError):
    """A growth configuration cannot satisfy a hard constraint."""

    def __init__(self, constraint, message):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class RasterParseError(IsobenefitError, ValueError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class ConfigError(IsobenefitError, ValueError):
    pass
