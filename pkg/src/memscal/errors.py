"""Exception hierarchy shared by every memscal module."""


class MemsCalError(Exception):
    """Base class for all memscal errors."""


class InvalidIntervalError(MemsCalError, ValueError):
    """Echo timestamp precedes the transmit timestamp."""


class SingularityError(MemsCalError, ValueError):
    """Azimuth at or beyond +/- pi/2, where the tangent-plane model breaks down."""


class BehindSensorError(MemsCalError, ValueError):
    """Cartesian point with z <= 0 has no azimuth representation."""


class HypothesisOutOfRangeError(MemsCalError, ValueError):
    """Offset or row length hypothesis does not fit the frame."""


class NoSignalError(MemsCalError, ValueError):
    """Cost could not be evaluated because no valid sample pairs exist."""


class CalibrationFailedError(MemsCalError):
    """Every hypothesis in the search grid was inadmissible."""


class DriftEstimationError(MemsCalError):
    """Fewer than two frames survived per-frame calibration."""


class ConfigError(MemsCalError, ValueError):
    """Invalid run configuration. ``field`` and ``line`` locate the problem when known."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class StreamFormatError(MemsCalError, ValueError):
    """Malformed range-stream or cost-surface file."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
