"""Exception hierarchy.

Every error raised for bad inputs or degenerate data derives from
:class:`RadarLevelError`, which the command line maps to exit code 1.
"""


class RadarLevelError(Exception):
    """Base class for all domain errors of the package."""


class DomainError(RadarLevelError, ValueError):
    """An argument lies outside the domain of a closed-form relation."""


class RangeAmbiguityError(RadarLevelError, ValueError):
    """A target lies beyond the unambiguous range of a chirp configuration."""


class DimensionError(RadarLevelError, ValueError):
    """Array shapes or list lengths do not match."""


class ConfigurationError(RadarLevelError, ValueError):
    """Parameters are mutually inconsistent or too large for the data."""


class TiltToleranceError(RadarLevelError, ValueError):
    """Sensor tilt beyond the supported 30 degrees."""


class WindowError(RadarLevelError, ValueError):
    """Window size larger than the number of measurements."""


class NoSignalError(RadarLevelError):
    """Every window of a run was emptied by the filter."""


class AlignmentError(RadarLevelError):
    """Estimates cannot be paired with groundtruth."""


class InsufficientDataError(RadarLevelError):
    """Too few scored runs to form deltas."""


class TuningError(RadarLevelError):
    """Every cell of a parameter grid was invalid."""


class ParseError(RadarLevelError, ValueError):
    """A file does not follow its documented format."""

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
