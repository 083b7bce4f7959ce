"""Exception types raised across the package."""


class MamorlError(Exception):
    """Base class for all package errors."""


class DimensionError(MamorlError, ValueError):
    pass


class DegenerateNormalizationError(MamorlError, ValueError):
    pass


class NumericInputError(MamorlError, ValueError):
    pass


class ContractError(MamorlError, ValueError):
    pass


class DivergedTrainingError(MamorlError, FloatingPointError):
    """Raised when a loss or gradient becomes non-finite.

    ``name`` identifies the offending parameter (or loss), ``step`` the env
    step at which training aborted when known.
    """

    def __init__(self, message: str, name: str | None = None, step: int | None = None):
        super().__init__(message)
        self.name = name
        self.step = step


class EpisodeFinishedError(MamorlError, RuntimeError):
    pass


class ConfigError(MamorlError, ValueError):
    pass


class CaseMismatchError(MamorlError, ValueError):
    pass


class UnsupportedDimensionError(MamorlError, ValueError):
    pass


class BufferNotReady(MamorlError, RuntimeError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
