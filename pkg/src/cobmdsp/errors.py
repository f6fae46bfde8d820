"""Exception hierarchy shared by every stage of the receiver."""


class CobmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CobmError, ValueError):
    """A parameter is out of range or inconsistent."""


class InputShapeError(CobmError, ValueError):
    """An array has the wrong length or shape."""


class NoBurstFound(CobmError):
    pass


class EstimationUnreliable(CobmError):
    """Training tones are too weak relative to the noise floor."""


class SingularEstimate(CobmError):
    def __init__(self, message: str, bins=()):
        super().__init__(message)
        self.bins = tuple(int(b) for b in bins)


class SingularOracle(SingularEstimate):
    pass


class InternalConsistencyError(CobmError):
    pass


class SyncFailure(CobmError):
    pass


class ConvergenceFailure(CobmError):
    pass


class UndefinedMetric(CobmError, ValueError):
    pass


class StageError(CobmError):
    """Wraps a failure inside the receive pipeline with its location."""

    def __init__(self, stage: str, burst_index: int, cause: Exception):
        super().__init__(f"stage '{stage}' failed on burst {burst_index}: {cause}")
        self.stage = stage
        self.burst_index = burst_index
        self.cause = cause
